#include "doctest.h"
#include "fixtures.hpp"

#include "graphtext/checkpoint.hpp"
#include "graphtext/errors.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>

using namespace graphtext;
using testing::tiny_config;
using testing::tiny_setup;

namespace {

std::uint32_t read_u32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  return v;
}

void write_u32(std::string& s, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

/// Offset of the first tensor's first dimension.
std::size_t first_dim_offset(const std::string& bytes) {
  const std::size_t manifest = read_u32(bytes, 7);
  std::size_t at = 7 + 4 + manifest + 4;
  const std::size_t name_len = static_cast<unsigned char>(bytes[at]) | (static_cast<unsigned char>(bytes[at + 1]) << 8);
  return at + 2 + name_len + 1;
}

Checkpoint trained(std::uint64_t seed) {
  TrainConfig c = tiny_config(seed);
  c.max_epochs = 1;
  c.alpha = 0.3;
  const auto s = tiny_setup(c, seed);
  return train_joint(initial_checkpoint(JointModel(c, s.tokenizer)), s.train, &s.val).final_state;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round trip restores every tensor bit for bit") {
  Checkpoint ck = trained(1);
  const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(ck));
  const auto a = ck.model.parameters();
  const auto b = back.model.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i]->value.rows() == b[i]->value.rows());
    REQUIRE(a[i]->value.cols() == b[i]->value.cols());
    CHECK(std::memcmp(a[i]->value.data(), b[i]->value.data(), sizeof(double) * a[i]->value.size()) == 0);
  }
  CHECK(back.epoch == ck.epoch);
  CHECK(back.train_loss == ck.train_loss);
  CHECK(back.model.config.alpha == ck.model.config.alpha);
  CHECK(back.model.config.seed == ck.model.config.seed);
  CHECK(back.model.tokenizer.vocab() == ck.model.tokenizer.vocab());
  CHECK(back.model.temperature.value() == ck.model.temperature.value());
  CHECK(serialize_checkpoint(back) == serialize_checkpoint(ck));
}

TEST_CASE("restored model embeds identically") {
  Checkpoint ck = trained(2);
  const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(ck));
  const std::vector<std::vector<int>> seqs{{1, 5, 6, 2}, {1, 7, 2}};
  CHECK(back.model.embed_texts(seqs) == ck.model.embed_texts(seqs));
}

TEST_CASE("missing validation losses survive as NaN") {
  TrainConfig c = tiny_config(3);
  c.max_epochs = 1;
  const auto s = tiny_setup(c, 3);
  const Checkpoint ck = train_joint(initial_checkpoint(JointModel(c, s.tokenizer)), s.train, nullptr).final_state;
  const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(ck));
  REQUIRE(back.val_loss.size() == 1);
  CHECK(std::isnan(back.val_loss[0]));
}

TEST_CASE("files round trip") {
  const Checkpoint ck = trained(4);
  const auto path = std::filesystem::temp_directory_path() / "graphtext_ckpt_test.bin";
  save_checkpoint(ck, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(serialize_checkpoint(back) == serialize_checkpoint(ck));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
}

TEST_CASE("truncated bytes are rejected") {
  const std::string bytes = serialize_checkpoint(trained(5));
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(deserialize_checkpoint(std::string_view(bytes).substr(0, cut)), DataError);
  }
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), DataError);
}

TEST_CASE("bad magic and corrupt manifest are rejected") {
  const std::string bytes = serialize_checkpoint(trained(6));
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(magic), DataError);
  std::string manifest = bytes;
  manifest[11] = '#';
  CHECK_THROWS_AS(deserialize_checkpoint(manifest), DataError);
}

TEST_CASE("shape mismatches are rejected") {
  std::string bytes = serialize_checkpoint(trained(7));
  const std::size_t at = first_dim_offset(bytes);
  // Transposing keeps the payload length, so only the shape check can fire.
  const std::uint32_t rows = read_u32(bytes, at);
  const std::uint32_t cols = read_u32(bytes, at + 4);
  REQUIRE(rows != cols);
  write_u32(bytes, at, cols);
  write_u32(bytes, at + 4, rows);
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bytes), doctest::Contains("shape"), DataError);
}

}  // TEST_SUITE
