// tests/test_serialize.cpp

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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "cslm/adapt.hpp"
#include "cslm/serialize.hpp"
#include "oracles.hpp"

namespace cslm {
namespace {

namespace fs = std::filesystem;

// Byte offsets in the model file header.
constexpr std::size_t kVersionAt = 8;
constexpr std::size_t kVocabAt = 20;

NetworkConfig small_config() {
  NetworkConfig c;
  c.order = 4;
  c.projection = 5;
  c.hidden = {6, 6};
  c.activations = {Activation::kTanh, Activation::kLinear};
  c.vocab_size = 11;
  c.shortlist = 9;
  c.batch_size = 3;
  c.seed = 77;
  return c;
}

Model<float> trained_model() {
  auto m = init_network<float>(small_config());
  std::mt19937_64 rng(1);
  train(m, testing::random_dataset(rng, 4, 11, 9, 40), LrSchedule{0.1, 0.9}, 2, 3);
  return m;
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("cslm_test_" + name)).string();
}

std::vector<char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Serialize, RoundTripIsBitExact) {
  const auto m = trained_model();
  const auto bytes = serialize_model(m);
  const auto back = deserialize_model<float>(bytes.data(), bytes.size());
  EXPECT_TRUE(back == m);
  EXPECT_EQ(back.epoch(), 2u);
  EXPECT_EQ(back.config().seed, 77u);
  EXPECT_EQ(back.config().batch_size, 3);
  EXPECT_EQ(serialize_model(back), bytes);
}

TEST(Serialize, SaveLoadSaveIsByteIdentical) {
  const auto m = trained_model();
  const std::string a = temp_path("a.bin"), b = temp_path("b.bin");
  save_model(m, a);
  save_model(load_model(a), b);
  EXPECT_EQ(read_bytes(a), read_bytes(b));
  EXPECT_FALSE(fs::exists(a + ".tmp"));
  fs::remove(a);
  fs::remove(b);
}

TEST(Serialize, TrainableFlagsSurvive) {
  const auto m = insert_adaptation_layer(trained_model(), {1, Activation::kTanh, 6});
  const auto bytes = serialize_model(m);
  const auto back = deserialize_model<float>(bytes.data(), bytes.size());
  EXPECT_FALSE(back.embedding_trainable());
  ASSERT_EQ(back.num_layers(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back.layers()[i].trainable, i == 1);
  EXPECT_TRUE(back == m);
}

TEST(Serialize, BadMagicIsVersionError) {
  auto bytes = serialize_model(trained_model());
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_model<float>(bytes.data(), bytes.size()), VersionError);
}

TEST(Serialize, UnknownVersionIsVersionError) {
  auto bytes = serialize_model(trained_model());
  bytes[kVersionAt] = 2;
  EXPECT_THROW(deserialize_model<float>(bytes.data(), bytes.size()), VersionError);
}

TEST(Serialize, EveryTruncationIsTruncatedError) {
  const auto bytes = serialize_model(trained_model());
  for (std::size_t n = 0; n < bytes.size(); n += (n < 200 ? 1 : 37))
    EXPECT_THROW(deserialize_model<float>(bytes.data(), n), TruncatedError) << "length " << n;
}

TEST(Serialize, HeaderPayloadDisagreementIsDimensionError) {
  auto bytes = serialize_model(trained_model());
  bytes[kVocabAt] = 12;
  EXPECT_THROW(deserialize_model<float>(bytes.data(), bytes.size()), DimensionError);
}

TEST(Serialize, TrailingBytesAreDimensionError) {
  auto bytes = serialize_model(trained_model());
  bytes.push_back(0);
  EXPECT_THROW(deserialize_model<float>(bytes.data(), bytes.size()), DimensionError);
}

TEST(Serialize, PayloadCorruptionIsChecksumError) {
  const auto clean = serialize_model(trained_model());
  std::mt19937_64 rng(2);
  // The payload starts after the header and ends 8 bytes before the end.
  const std::size_t header = 8 + 4 + 5 * 4 + 8 + 8 + 4 + 3 * 12 + 8;
  for (int trial = 0; trial < 50; ++trial) {
    auto bytes = clean;
    const std::size_t at =
        std::uniform_int_distribution<std::size_t>(header, bytes.size() - 9)(rng);
    bytes[at] = static_cast<char>(bytes[at] ^ 0x10);
    EXPECT_THROW(deserialize_model<float>(bytes.data(), bytes.size()), ChecksumError);
  }
}

TEST(Serialize, ErrorClassesShareABase) {
  auto bytes = serialize_model(trained_model());
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_model<float>(bytes.data(), bytes.size()), ModelFileError);
}

TEST(Serialize, MissingFile) {
  EXPECT_THROW(load_model(temp_path("does_not_exist.bin")), Error);
}

TEST(Serialize, FailedSaveLeavesNoFile) {
  const std::string path = temp_path("no_such_dir") + "/m.bin";
  EXPECT_THROW(save_model(trained_model(), path), Error);
  EXPECT_FALSE(fs::exists(path));
}

TEST(Serialize, DoubleModelsStoredAsSinglePrecision) {
  const auto f = trained_model();
  const auto d = model_cast<double>(f);
  EXPECT_EQ(serialize_model(d), serialize_model(f));
}

}  // namespace
}  // namespace cslm
