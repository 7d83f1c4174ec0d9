// cslm/serialize.hpp

// Copyright 2026  The cslm-adapt Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Binary model files. All integers and floats little-endian.
//
//   header   magic "CSLMNNLM" (8 bytes), u32 version,
//            i32 order, i32 projection, i32 vocab_size, i32 shortlist,
//            i32 batch_size, u64 seed, u64 epoch, u32 num_layers,
//            num_layers x (u32 in, u32 out, u32 activation),
//            u64 payload_bytes
//   payload  embedding (vocab_size rows of projection f32),
//            per layer: weight (out x in, row-major f32), bias (out f32),
//            one trainable byte for the projection, then one per layer
//   trailer  u64 FNV-1a checksum of the payload bytes

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cslm/error.hpp"
#include "cslm/io.hpp"
#include "cslm/model.hpp"

namespace cslm {

inline constexpr char kModelMagic[8] = {'C', 'S', 'L', 'M', 'N', 'N', 'L', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
void put_le(std::vector<char>& buf, U v) {
  static_assert(std::is_trivially_copyable_v<U>);
  char bytes[sizeof(U)];
  std::memcpy(bytes, &v, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
  buf.insert(buf.end(), bytes, bytes + sizeof(U));
}

class Reader {
 public:
  Reader(const char* data, std::size_t size) : p_(data), end_(data + size) {}

  template <typename U>
  U get(const char* what) {
    if (remaining() < sizeof(U)) throw TruncatedError(std::string("model file truncated in ") + what);
    char bytes[sizeof(U)];
    std::memcpy(bytes, p_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    p_ += sizeof(U);
    U v;
    std::memcpy(&v, bytes, sizeof(U));
    return v;
  }

  const char* take(std::size_t n, const char* what) {
    if (remaining() < n) throw TruncatedError(std::string("model file truncated in ") + what);
    const char* at = p_;
    p_ += n;
    return at;
  }

  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }
  const char* pos() const { return p_; }

 private:
  const char* p_;
  const char* end_;
};

inline std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t payload_bytes(const NetworkConfig& cfg,
                                   const std::vector<std::array<std::uint32_t, 3>>& layers) {
  std::uint64_t floats = static_cast<std::uint64_t>(cfg.vocab_size) * static_cast<std::uint64_t>(cfg.projection);
  for (const auto& l : layers) floats += static_cast<std::uint64_t>(l[0]) * l[1] + l[1];
  return floats * 4 + 1 + layers.size();
}

}  // namespace detail

// Serialized bytes of a model. Parameters are stored as single precision.
template <typename T>
std::vector<char> serialize_model(const Model<T>& model) {
  const auto& cfg = model.config();
  std::vector<char> head;
  head.insert(head.end(), kModelMagic, kModelMagic + 8);
  detail::put_le<std::uint32_t>(head, kModelVersion);
  detail::put_le<std::int32_t>(head, cfg.order);
  detail::put_le<std::int32_t>(head, cfg.projection);
  detail::put_le<std::int32_t>(head, cfg.vocab_size);
  detail::put_le<std::int32_t>(head, cfg.shortlist);
  detail::put_le<std::int32_t>(head, cfg.batch_size);
  detail::put_le<std::uint64_t>(head, cfg.seed);
  detail::put_le<std::uint64_t>(head, model.epoch());
  detail::put_le<std::uint32_t>(head, static_cast<std::uint32_t>(model.num_layers()));
  std::vector<std::array<std::uint32_t, 3>> dims;
  for (const auto& l : model.layers()) {
    dims.push_back({static_cast<std::uint32_t>(l.in_dim()), static_cast<std::uint32_t>(l.out_dim()),
                    static_cast<std::uint32_t>(l.activation)});
    for (auto d : dims.back()) detail::put_le<std::uint32_t>(head, d);
  }
  const std::uint64_t nbytes = detail::payload_bytes(cfg, dims);
  detail::put_le<std::uint64_t>(head, nbytes);

  std::vector<char> payload;
  payload.reserve(nbytes);
  const auto& emb = model.embedding();
  for (Eigen::Index w = 0; w < emb.cols(); ++w)
    for (Eigen::Index k = 0; k < emb.rows(); ++k)
      detail::put_le<float>(payload, static_cast<float>(emb(k, w)));
  for (const auto& l : model.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        detail::put_le<float>(payload, static_cast<float>(l.weight(r, c)));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r)
      detail::put_le<float>(payload, static_cast<float>(l.bias(r)));
  }
  payload.push_back(model.embedding_trainable() ? 1 : 0);
  for (const auto& l : model.layers()) payload.push_back(l.trainable ? 1 : 0);

  std::vector<char> out = std::move(head);
  out.insert(out.end(), payload.begin(), payload.end());
  detail::put_le<std::uint64_t>(out, detail::fnv1a(payload.data(), payload.size()));
  return out;
}

template <typename T = float>
Model<T> deserialize_model(const char* data, std::size_t size) {
  detail::Reader rd(data, size);
  const char* magic = rd.take(8, "magic");
  if (std::memcmp(magic, kModelMagic, 8) != 0) throw VersionError("not a model file (bad magic)");
  const auto version = rd.get<std::uint32_t>("version");
  if (version != kModelVersion)
    throw VersionError("unsupported model file version " + std::to_string(version));

  NetworkConfig cfg;
  cfg.order = rd.get<std::int32_t>("header");
  cfg.projection = rd.get<std::int32_t>("header");
  cfg.vocab_size = rd.get<std::int32_t>("header");
  cfg.shortlist = rd.get<std::int32_t>("header");
  cfg.batch_size = rd.get<std::int32_t>("header");
  cfg.seed = rd.get<std::uint64_t>("header");
  const auto epoch = rd.get<std::uint64_t>("header");
  const auto nlayers = rd.get<std::uint32_t>("header");
  if (cfg.order < 2 || cfg.projection < 1 || cfg.vocab_size < 1 || cfg.shortlist < 1 ||
      cfg.batch_size < 1 || cfg.shortlist > cfg.vocab_size)
    throw DimensionError("model header: invalid configuration values");
  if (nlayers == 0 || nlayers > 4096) throw DimensionError("model header: bad layer count");
  std::vector<std::array<std::uint32_t, 3>> dims(nlayers);
  for (auto& d : dims)
    for (auto& v : d) v = rd.get<std::uint32_t>("layer table");
  const auto declared = rd.get<std::uint64_t>("header");

  std::uint64_t expect_in = static_cast<std::uint64_t>(cfg.order - 1) * static_cast<std::uint64_t>(cfg.projection);
  for (std::uint32_t i = 0; i < nlayers; ++i) {
    const auto& d = dims[i];
    if (d[0] != expect_in || d[1] == 0)
      throw DimensionError("model header: layer " + std::to_string(i) + " dimensions inconsistent");
    const bool last = i + 1 == nlayers;
    if (d[2] > 2 || last != (d[2] == static_cast<std::uint32_t>(Activation::kSoftmax)))
      throw DimensionError("model header: bad activation for layer " + std::to_string(i));
    expect_in = d[1];
  }
  if (expect_in != static_cast<std::uint64_t>(cfg.shortlist))
    throw DimensionError("model header: output layer size differs from shortlist");
  if (declared != detail::payload_bytes(cfg, dims))
    throw DimensionError("model header: dimensions disagree with payload length");

  const char* payload = rd.take(declared, "payload");
  const auto checksum = rd.get<std::uint64_t>("checksum");
  if (rd.remaining() != 0) throw DimensionError("model file: trailing bytes after checksum");
  if (checksum != detail::fnv1a(payload, declared)) throw ChecksumError("model file: checksum mismatch");

  detail::Reader pr(payload, declared);
  Matrix<T> emb(cfg.projection, cfg.vocab_size);
  for (Eigen::Index w = 0; w < emb.cols(); ++w)
    for (Eigen::Index k = 0; k < emb.rows(); ++k) emb(k, w) = static_cast<T>(pr.get<float>("payload"));
  std::vector<Layer<T>> layers(nlayers);
  for (std::uint32_t i = 0; i < nlayers; ++i) {
    auto& l = layers[i];
    l.weight.resize(dims[i][1], dims[i][0]);
    l.bias.resize(dims[i][1]);
    l.activation = static_cast<Activation>(dims[i][2]);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        l.weight(r, c) = static_cast<T>(pr.get<float>("payload"));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = static_cast<T>(pr.get<float>("payload"));
  }
  auto flag = [&](const char* what) {
    const auto b = pr.get<std::uint8_t>(what);
    if (b > 1) throw ModelFileError("model file: bad trainable flag");
    return b == 1;
  };
  const bool emb_trainable = flag("flags");
  for (auto& l : layers) l.trainable = flag("flags");
  return ModelBuilder<T>::assemble(cfg, std::move(emb), emb_trainable, std::move(layers), epoch);
}

template <typename T>
void save_model(const Model<T>& model, const std::string& path) {
  const std::vector<char> bytes = serialize_model(model);
  write_file_atomic(
      path, [&](std::ostream& out) { out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); },
      std::ios::binary);
}

template <typename T = float>
Model<T> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model<T>(bytes.data(), bytes.size());
}

}  // namespace cslm
