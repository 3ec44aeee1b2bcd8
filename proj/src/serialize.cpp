/* Copyright 2026 The HierTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Model file layout, all integers and floats little-endian:
//
//   magic "HTMODEL\0" | u32 version | u32 member count
//   per member:
//     u8 kind | config echo | u64 epochs_run | f64 final_loss
//     str extended hierarchy | u64 n, n x str vocabulary
//     u64 heads, per head: str name | u64 n, n x str domain | f64 block
//     u8 emission kind | dimensions | f64 block
//   u64 FNV-1a checksum of every preceding byte
//
// str is u64 length + bytes; an f64 block is u64 count + values.

#include <bit>
#include <cstring>

#include "hiertag/error.hpp"
#include "hiertag/models.hpp"
#include "text_util.hpp"

namespace hiertag {
namespace {

constexpr char kMagic[8] = {'H', 'T', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  template <typename T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<char>(u & 0xff));
      if constexpr (sizeof(U) > 1) u >>= 8;
    }
  }
  void u8(std::uint8_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void block(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(
               static_cast<unsigned char>(in_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::uint8_t u8() { return le<std::uint8_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t min_item_bytes) {
    const std::uint64_t n = u64();
    if (min_item_bytes > 0 && n > (in_.size() - pos_) / min_item_bytes) {
      throw Error(ErrorCode::kCorrupt, "model file is truncated");
    }
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> block() {
    const std::size_t n = count(8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<std::string> strings() {
    const std::size_t n = count(8);
    std::vector<std::string> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.push_back(str());
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::kCorrupt, "model file is truncated");
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_config(Writer& w, const TrainConfig& c) {
  w.u64(c.seed);
  w.u64(c.max_epochs);
  w.u64(c.patience);
  w.f64(c.learning_rate);
  w.f64(c.l2);
  w.f64(c.clip_norm);
  w.u64(c.batch_size);
  w.u64(c.hidden_dim);
  w.le<std::int32_t>(c.window);
  w.f64(c.init_scale);
  w.f64(c.tolerance);
  w.u8(c.shuffle ? 1 : 0);
}

TrainConfig read_config(Reader& r) {
  TrainConfig c;
  c.seed = r.u64();
  c.max_epochs = r.u64();
  c.patience = r.u64();
  c.learning_rate = r.f64();
  c.l2 = r.f64();
  c.clip_norm = r.f64();
  c.batch_size = r.u64();
  c.hidden_dim = r.u64();
  c.window = r.le<std::int32_t>();
  c.init_scale = r.f64();
  c.tolerance = r.f64();
  c.shuffle = r.u8() != 0;
  return c;
}

void write_member(Writer& w, const TrainedModel& m) {
  if (!m.emissions) {
    throw Error(ErrorCode::kInvalidArgument, "model has no emission layer");
  }
  w.u8(static_cast<std::uint8_t>(m.kind));
  write_config(w, m.config);
  w.u64(m.epochs_run);
  w.f64(m.final_loss);
  w.str(m.hierarchy.serialize());
  w.u64(m.vocab.size());
  for (const auto& s : m.vocab.strings()) w.str(s);
  w.u64(m.heads.size());
  for (const auto& h : m.heads) {
    w.str(h.name);
    w.u64(h.domain.size());
    for (const auto& t : h.domain) w.str(t);
    w.block(h.params);
  }
  const EmissionModel& e = *m.emissions;
  w.u8(static_cast<std::uint8_t>(e.kind()));
  w.u64(e.num_features());
  if (e.kind() == EmissionKind::kLinear) {
    w.u64(e.num_tags(0));
  } else {
    const auto& s = static_cast<const SharedEmissionModel&>(e);
    w.u64(s.hidden_dim());
    w.u64(s.head_sizes().size());
    for (std::size_t n : s.head_sizes()) w.u64(n);
  }
  w.block(e.parameters());
}

TrainedModel read_member(Reader& r) {
  TrainedModel m;
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 4) {
    throw Error(ErrorCode::kCorrupt, "unknown model kind in model file");
  }
  m.kind = static_cast<ModelKind>(kind);
  m.config = read_config(r);
  m.epochs_run = r.u64();
  m.final_loss = r.f64();
  try {
    m.hierarchy = ExtendedHierarchy::from_extended(TagHierarchy::parse(r.str()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorrupt) throw;
    throw Error(ErrorCode::kCorrupt,
                std::string("bad hierarchy in model file: ") + e.what());
  }
  m.vocab = FeatureVocabulary::from_strings(r.strings());
  const std::size_t num_heads = r.count(8);
  for (std::size_t h = 0; h < num_heads; ++h) {
    CrfHead head;
    head.name = r.str();
    head.domain = r.strings();
    head.params = r.block();
    const std::size_t y = head.domain.size();
    if (y == 0 || head.params.size() != y * y + 2 * y) {
      throw Error(ErrorCode::kCorrupt, "bad CRF head in model file");
    }
    m.heads.push_back(std::move(head));
  }
  if (m.heads.empty()) {
    throw Error(ErrorCode::kCorrupt, "model file has no CRF heads");
  }
  const std::uint8_t ek = r.u8();
  const std::size_t features = r.u64();
  if (features != m.vocab.size()) {
    throw Error(ErrorCode::kCorrupt, "emission width disagrees with vocabulary");
  }
  try {
    if (ek == static_cast<std::uint8_t>(EmissionKind::kLinear)) {
      const std::size_t tags = r.u64();
      if (m.heads.size() != 1 || tags != m.heads[0].size()) {
        throw Error(ErrorCode::kCorrupt, "emission shape disagrees with head");
      }
      m.emissions = std::make_unique<LinearEmissionModel>(features, tags);
    } else if (ek == static_cast<std::uint8_t>(EmissionKind::kShared)) {
      const std::size_t hidden = r.u64();
      const std::size_t n = r.count(8);
      std::vector<std::size_t> sizes(n);
      for (auto& s : sizes) s = r.u64();
      if (n != m.heads.size()) {
        throw Error(ErrorCode::kCorrupt, "emission heads disagree with CRF heads");
      }
      for (std::size_t h = 0; h < n; ++h) {
        if (sizes[h] != m.heads[h].size()) {
          throw Error(ErrorCode::kCorrupt, "emission shape disagrees with head");
        }
      }
      m.emissions =
          std::make_unique<SharedEmissionModel>(features, hidden, sizes);
    } else {
      throw Error(ErrorCode::kCorrupt, "unknown emission kind in model file");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorrupt) throw;
    throw Error(ErrorCode::kCorrupt, e.what());
  }
  const auto params = r.block();
  auto dst = m.emissions->parameters();
  if (params.size() != dst.size()) {
    throw Error(ErrorCode::kCorrupt, "emission parameter count mismatch");
  }
  std::copy(params.begin(), params.end(), dst.begin());
  return m;
}

}  // namespace

std::string serialize_models(std::span<const TrainedModel> models) {
  if (models.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no models to save");
  }
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(models.size()));
  for (const auto& m : models) write_member(w, m);
  const std::uint64_t sum = fnv1a(w.bytes());
  w.u64(sum);
  return std::move(w.bytes());
}

std::vector<TrainedModel> deserialize_models(std::string_view bytes) {
  constexpr std::size_t kHeader = sizeof kMagic + 4 + 4;
  if (bytes.size() < sizeof kMagic ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::kCorrupt, "not a model file (bad magic)");
  }
  if (bytes.size() < kHeader + 8) {
    throw Error(ErrorCode::kCorrupt, "model file is truncated");
  }
  Reader head(bytes.substr(sizeof kMagic));
  const std::uint32_t version = head.u32();
  if (version != kVersion) {
    throw Error(ErrorCode::kVersion,
                "unsupported model file version " + std::to_string(version) +
                    " (expected " + std::to_string(kVersion) + ")");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  Reader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.u64() != fnv1a(body)) {
    throw Error(ErrorCode::kCorrupt, "model file checksum mismatch");
  }
  Reader r(body.substr(kHeader));
  const std::uint32_t count = head.u32();
  if (count == 0) throw Error(ErrorCode::kCorrupt, "model file is empty");
  std::vector<TrainedModel> out;
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(read_member(r));
  if (!r.done()) {
    throw Error(ErrorCode::kCorrupt, "trailing bytes in model file");
  }
  return out;
}

void save_models(std::span<const TrainedModel> models,
                 const std::filesystem::path& path) {
  internal::write_file(path, serialize_models(models));
}

std::vector<TrainedModel> load_models(const std::filesystem::path& path) {
  return deserialize_models(internal::read_file(path));
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  save_models(std::span<const TrainedModel>(&model, 1), path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  auto models = load_models(path);
  if (models.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "model file holds " + std::to_string(models.size()) +
                    " models; expected one");
  }
  return std::move(models[0]);
}

}  // namespace hiertag
