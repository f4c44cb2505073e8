#include "doctest.h"

#include "graphtext/errors.hpp"
#include "graphtext/tokenizer.hpp"

#include <filesystem>
#include <numeric>

using namespace graphtext;

TEST_SUITE("tokenizer") {

TEST_CASE("vocabulary is frequency ordered after the reserved ids") {
  const Tokenizer tok = Tokenizer::build({"b a a c", "a b d", "c"}, TokenizerMode::Whitespace, 2);
  const std::vector<std::string> expected{"<pad>", "<s>", "</s>", "<mask>", "<unk>", "a", "b", "c"};
  CHECK(tok.vocab() == expected);
  CHECK(Tokenizer::build({"b a a c", "a b d", "c"}, TokenizerMode::Whitespace, 1, 2).vocab_size() == 7);
}

TEST_CASE("empty text encodes to start and end") {
  const Tokenizer tok = Tokenizer::build({"x y x y"}, TokenizerMode::Whitespace);
  const TextBatch b = tokenize(tok, {""}, 8);
  REQUIRE(b.size() == 1);
  CHECK(b.ids[0] == std::vector<int>{Tokenizer::kStart, Tokenizer::kEnd});
  CHECK(b.mask[0] == std::vector<std::uint8_t>{1, 1});
}

TEST_CASE("truncation keeps the end token") {
  const Tokenizer tok = Tokenizer::build({"a b c d e f g h"}, TokenizerMode::Whitespace, 1);
  const auto seq = tok.encode_sequence("a b c d e f g h", 5);
  REQUIRE(seq.size() == 5);
  CHECK(seq.front() == Tokenizer::kStart);
  CHECK(seq.back() == Tokenizer::kEnd);
  CHECK(tok.decode(seq) == "a b c");
  CHECK_THROWS_AS(tok.encode_sequence("a", 2), ConfigError);
  CHECK_THROWS_AS(tokenize(tok, {"a"}, 2), ConfigError);
}

TEST_CASE("mask rows count real tokens plus specials") {
  const Tokenizer tok = Tokenizer::build({"a b c d e"}, TokenizerMode::Whitespace, 1);
  const TextBatch b = tokenize(tok, {"a b c", "a b c d e"}, 16);
  CHECK(b.width() == 7);
  CHECK(b.length(0) == 5);
  CHECK(b.length(1) == 7);
  for (Index p = 5; p < 7; ++p) {
    CHECK(b.ids[0][p] == Tokenizer::kPad);
    CHECK(b.mask[0][p] == 0);
  }
  const auto segs = b.segments();
  CHECK(segs[1].offset == 5);
  CHECK(segs[1].length == 7);
}

TEST_CASE("encode then decode round trips modulo unknown tokens") {
  const Tokenizer tok = Tokenizer::build({"the cat sat", "the dog sat"}, TokenizerMode::Whitespace, 2);
  const auto ids = tok.encode("the  cat\tsat");
  CHECK(ids[1] == Tokenizer::kUnknown);
  CHECK(tok.decode(ids) == "the <unk> sat");
  CHECK(tok.encode(tok.decode(tok.encode("sat the sat"))) == tok.encode("sat the sat"));
  // Literal reserved strings in text are not treated as control tokens.
  CHECK(tok.encode("<s>") == std::vector<int>{Tokenizer::kUnknown});
}

TEST_CASE("character mode splits code points") {
  const Tokenizer tok = Tokenizer::build({"ab\xC3\xA9", "ba\xC3\xA9"}, TokenizerMode::Character, 2);
  CHECK(tok.vocab_size() == 8);
  CHECK(tok.split("a\xC3\xA9").size() == 2);
  CHECK(tok.decode(tok.encode("ab\xC3\xA9")) == "ab\xC3\xA9");
}

TEST_CASE("vocabulary files reserve the first lines") {
  const auto path = std::filesystem::temp_directory_path() / "graphtext_vocab_test.txt";
  const Tokenizer tok = Tokenizer::build({"a b a b c"}, TokenizerMode::Whitespace, 1);
  tok.save_vocab(path);
  const Tokenizer back = Tokenizer::load_vocab(path, TokenizerMode::Whitespace);
  CHECK(back.vocab() == tok.vocab());
  CHECK(back.encode("c b a") == tok.encode("c b a"));
  CHECK_THROWS_AS(Tokenizer({"a", "b"}, TokenizerMode::Whitespace), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("tokenizer mode names") {
  CHECK(parse_tokenizer_mode(tokenizer_mode_name(TokenizerMode::Character)) == TokenizerMode::Character);
  CHECK(parse_tokenizer_mode("whitespace") == TokenizerMode::Whitespace);
  CHECK_THROWS_AS(parse_tokenizer_mode("bpe"), ConfigError);
}

}  // TEST_SUITE
