// Copyright (c) 2026 The RIFF Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "riff/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "riff/error.hpp"

namespace riff {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct Header {
  ModelKind kind = ModelKind::Policy;
  std::uint32_t vocab = 0, dim = 0, hidden = 0, max_len = 0, mode = 0;
  std::uint32_t labels = 0, prompt_len = 0, rank = 0, mask_id = 0;
  double alpha = 0.0;
};

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : in_(std::move(bytes)) {}
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  void raw(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw InvalidInput("checkpoint truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  std::string in_;
  std::size_t pos_ = 0;
};

std::string encode(const Header& h, const ParamVector& values) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(h.kind));
  for (std::uint32_t v : {h.vocab, h.dim, h.hidden, h.max_len, h.mode, h.labels, h.prompt_len, h.rank, h.mask_id}) {
    w.u32(v);
  }
  w.f64(h.alpha);
  const auto& segs = values.layout().segments();
  w.u32(static_cast<std::uint32_t>(segs.size()));
  for (const auto& s : segs) {
    w.u32(static_cast<std::uint32_t>(s.name.size()));
    w.raw(s.name.data(), s.name.size());
    w.u64(s.length);
  }
  w.raw(values.values().data(), values.size() * sizeof(double));
  return w.take();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open checkpoint " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Parses the header, then fills `values` after checking its layout matches.
Header decode(Reader& r, ModelKind expected, const std::filesystem::path& path) {
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw InvalidInput(path.string() + ": not a checkpoint file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw InvalidInput(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Header h;
  h.kind = static_cast<ModelKind>(r.get<std::uint32_t>());
  if (h.kind != expected) throw InvalidInput(path.string() + ": checkpoint holds a different model kind");
  h.vocab = r.get<std::uint32_t>();
  h.dim = r.get<std::uint32_t>();
  h.hidden = r.get<std::uint32_t>();
  h.max_len = r.get<std::uint32_t>();
  h.mode = r.get<std::uint32_t>();
  h.labels = r.get<std::uint32_t>();
  h.prompt_len = r.get<std::uint32_t>();
  h.rank = r.get<std::uint32_t>();
  h.mask_id = r.get<std::uint32_t>();
  h.alpha = r.get<double>();
  return h;
}

void read_segments(Reader& r, ParamVector& values, const std::filesystem::path& path) {
  const auto count = r.get<std::uint32_t>();
  const auto& segs = values.layout().segments();
  if (count != segs.size()) throw InvalidInput(path.string() + ": segment count mismatch");
  for (const auto& s : segs) {
    const auto len = r.get<std::uint32_t>();
    std::string name(len, '\0');
    r.raw(name.data(), len);
    const auto n = r.get<std::uint64_t>();
    if (name != s.name || n != s.length) throw InvalidInput(path.string() + ": segment '" + name + "' mismatch");
  }
  r.raw(values.values().data(), values.size() * sizeof(double));
  if (!r.at_end()) throw InvalidInput(path.string() + ": trailing bytes");
}

}  // namespace

std::string checkpoint_bytes(const PolicyParams& params) {
  const auto& c = params.config();
  Header h;
  h.kind = ModelKind::Policy;
  h.vocab = static_cast<std::uint32_t>(c.vocab_size);
  h.dim = static_cast<std::uint32_t>(c.embed_dim);
  h.hidden = static_cast<std::uint32_t>(c.hidden_dim);
  h.max_len = static_cast<std::uint32_t>(c.max_len);
  return encode(h, params.values());
}

std::string checkpoint_bytes(const ClassifierParams& params) {
  const auto& c = params.config();
  Header h;
  h.kind = ModelKind::Classifier;
  h.vocab = static_cast<std::uint32_t>(c.vocab_size);
  h.dim = static_cast<std::uint32_t>(c.embed_dim);
  h.hidden = static_cast<std::uint32_t>(c.cls_hidden);
  h.max_len = static_cast<std::uint32_t>(c.max_input_len);
  h.mode = static_cast<std::uint32_t>(params.mode());
  h.labels = static_cast<std::uint32_t>(c.num_labels);
  h.prompt_len = static_cast<std::uint32_t>(c.prompt_len);
  h.rank = static_cast<std::uint32_t>(c.lora_rank);
  h.mask_id = c.mask_id;
  h.alpha = c.lora_alpha;
  return encode(h, params.values());
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params) {
  write_file(path, checkpoint_bytes(params));
}

void save_checkpoint(const std::filesystem::path& path, const ClassifierParams& params) {
  write_file(path, checkpoint_bytes(params));
}

PolicyParams load_policy_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file(path));
  const Header h = decode(r, ModelKind::Policy, path);
  PolicyParams params(PolicyConfig{h.vocab, h.dim, h.hidden, h.max_len});
  read_segments(r, params.values(), path);
  return params;
}

ClassifierParams load_classifier_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file(path));
  const Header h = decode(r, ModelKind::Classifier, path);
  if (h.mode > static_cast<std::uint32_t>(TuningMode::LoRA)) throw InvalidInput(path.string() + ": bad tuning mode");
  ClassifierConfig c;
  c.vocab_size = h.vocab;
  c.embed_dim = h.dim;
  c.cls_hidden = h.hidden;
  c.max_input_len = h.max_len;
  c.num_labels = h.labels;
  c.prompt_len = h.prompt_len;
  c.lora_rank = h.rank;
  c.mask_id = h.mask_id;
  c.lora_alpha = h.alpha;
  ClassifierParams params(c, static_cast<TuningMode>(h.mode));
  read_segments(r, params.values(), path);
  return params;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace riff
