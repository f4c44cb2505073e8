#include "graphtext/tokenizer.hpp"

#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace graphtext {

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens{"<pad>", "<s>", "</s>", "<mask>", "<unk>"};
  return tokens;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Length of the UTF-8 sequence starting with byte c (1 for invalid lead bytes).
std::size_t utf8_length(unsigned char c) {
  if (c >= 0xF0) return 4;
  if (c >= 0xE0) return 3;
  if (c >= 0xC0) return 2;
  return 1;
}

}  // namespace

std::string_view tokenizer_mode_name(TokenizerMode m) { return m == TokenizerMode::Whitespace ? "whitespace" : "character"; }

TokenizerMode parse_tokenizer_mode(std::string_view s) {
  if (s == "whitespace") return TokenizerMode::Whitespace;
  if (s == "character") return TokenizerMode::Character;
  throw ConfigError("unknown tokenizer mode '" + std::string(s) + "'");
}

Tokenizer::Tokenizer(std::vector<std::string> vocab, TokenizerMode mode) : vocab_(std::move(vocab)), mode_(mode) {
  const auto& reserved = reserved_tokens();
  if (vocab_.size() < reserved.size() || !std::equal(reserved.begin(), reserved.end(), vocab_.begin())) {
    throw DataError("vocabulary must begin with <pad>, <s>, </s>, <mask>, <unk>");
  }
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!ids_.emplace(vocab_[i], static_cast<int>(i)).second) throw DataError("duplicate vocabulary entry '" + vocab_[i] + "'");
  }
}

std::vector<std::string> Tokenizer::split(std::string_view text) const {
  std::vector<std::string> out;
  if (mode_ == TokenizerMode::Whitespace) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      if (j > i) out.emplace_back(text.substr(i, j - i));
      i = j;
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(text[i])), text.size() - i);
      if (text[i] != '\n' && text[i] != '\r') out.emplace_back(text.substr(i, len));
      i += len;
    }
  }
  return out;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& texts, TokenizerMode mode, int min_count,
                           std::size_t max_types) {
  Tokenizer probe(reserved_tokens(), mode);
  std::unordered_map<std::string, int> counts;
  for (const auto& t : texts) {
    for (auto& tok : probe.split(t)) ++counts[tok];
  }
  std::vector<std::pair<std::string, int>> kept;
  for (auto& [tok, c] : counts) {
    if (c >= min_count && !probe.ids_.contains(tok)) kept.emplace_back(tok, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (kept.size() > max_types) kept.resize(max_types);
  std::vector<std::string> vocab = reserved_tokens();
  for (auto& [tok, c] : kept) vocab.push_back(tok);
  return Tokenizer(std::move(vocab), mode);
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> out;
  for (const auto& tok : split(text)) {
    auto it = ids_.find(tok);
    out.push_back(it == ids_.end() || it->second < kNumReserved ? kUnknown : it->second);
  }
  return out;
}

std::vector<int> Tokenizer::encode_sequence(std::string_view text, int max_len) const {
  if (max_len < 3) throw ConfigError("max_len must be >= 3");
  std::vector<int> body = encode(text);
  const std::size_t room = static_cast<std::size_t>(max_len) - 2;
  if (body.size() > room) body.resize(room);
  std::vector<int> out;
  out.reserve(body.size() + 2);
  out.push_back(kStart);
  out.insert(out.end(), body.begin(), body.end());
  out.push_back(kEnd);
  return out;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  const char* sep = mode_ == TokenizerMode::Whitespace ? " " : "";
  bool first = true;
  for (int id : ids) {
    if (id == kPad || id == kStart || id == kEnd) continue;
    if (id < 0 || id >= vocab_size()) throw Error("decode: token id out of range");
    if (!first) out += sep;
    out += vocab_[id];
    first = false;
  }
  return out;
}

void Tokenizer::save_vocab(const std::filesystem::path& path) const {
  std::string s;
  for (const auto& tok : vocab_) {
    s += tok;
    s += '\n';
  }
  io::write_file(path, s);
}

Tokenizer Tokenizer::load_vocab(const std::filesystem::path& path, TokenizerMode mode) {
  std::istringstream in(io::read_file(path));
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) vocab.push_back(line);
  return Tokenizer(std::move(vocab), mode);
}

// ---------------------------------------------------------------------------

Index TextBatch::length(Index row) const {
  const auto& m = mask[row];
  return static_cast<Index>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

std::vector<Segment> TextBatch::segments() const {
  std::vector<Segment> out;
  out.reserve(ids.size());
  Index offset = 0;
  for (Index r = 0; r < size(); ++r) {
    const Index len = length(r);
    out.push_back({offset, len});
    offset += len;
  }
  return out;
}

TextBatch make_text_batch(const std::vector<std::vector<int>>& sequences) {
  std::size_t width = 0;
  for (const auto& s : sequences) width = std::max(width, s.size());
  TextBatch b;
  b.ids.reserve(sequences.size());
  b.mask.reserve(sequences.size());
  for (const auto& s : sequences) {
    if (s.empty()) throw Error("make_text_batch: empty sequence");
    std::vector<int> row(width, Tokenizer::kPad);
    std::vector<std::uint8_t> m(width, 0);
    std::copy(s.begin(), s.end(), row.begin());
    std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(s.size()), 1);
    b.ids.push_back(std::move(row));
    b.mask.push_back(std::move(m));
  }
  return b;
}

TextBatch tokenize(const Tokenizer& tokenizer, const std::vector<std::string>& texts, int max_len) {
  if (max_len < 3) throw ConfigError("max_len must be >= 3");
  std::vector<std::vector<int>> seqs;
  seqs.reserve(texts.size());
  for (const auto& t : texts) seqs.push_back(tokenizer.encode_sequence(t, max_len));
  return make_text_batch(seqs);
}

}  // namespace graphtext
