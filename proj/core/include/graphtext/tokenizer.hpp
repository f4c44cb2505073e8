#pragma once

#include "graphtext/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphtext {

enum class TokenizerMode { Whitespace, Character };

std::string_view tokenizer_mode_name(TokenizerMode m);
TokenizerMode parse_tokenizer_mode(std::string_view s);

/// Word- or character-level vocabulary. Ids 0..3 are pad/start/end/mask and
/// id 4 is the unknown token; ordinary tokens follow.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEnd = 2;
  static constexpr int kMask = 3;
  static constexpr int kUnknown = 4;
  static constexpr int kNumReserved = 5;

  Tokenizer() = default;
  /// `vocab` must start with the reserved tokens in order.
  Tokenizer(std::vector<std::string> vocab, TokenizerMode mode);

  /// Frequency-cut vocabulary: types seen at least `min_count` times, most
  /// frequent first (ties lexicographic), at most `max_types` ordinary types.
  static Tokenizer build(const std::vector<std::string>& texts, TokenizerMode mode, int min_count = 2,
                         std::size_t max_types = 8192);

  std::vector<std::string> split(std::string_view text) const;
  /// Ordinary token ids, no start/end.
  std::vector<int> encode(std::string_view text) const;
  /// start + tokens + end, truncated to `max_len` with the end token kept.
  std::vector<int> encode_sequence(std::string_view text, int max_len) const;
  std::string decode(const std::vector<int>& ids) const;

  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  TokenizerMode mode() const { return mode_; }

  /// One token per line, line index = token id.
  void save_vocab(const std::filesystem::path& path) const;
  static Tokenizer load_vocab(const std::filesystem::path& path, TokenizerMode mode);

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> ids_;
  TokenizerMode mode_ = TokenizerMode::Whitespace;
};

/// Right-padded batch of token sequences.
struct TextBatch {
  std::vector<std::vector<int>> ids;
  std::vector<std::vector<std::uint8_t>> mask;

  Index size() const { return static_cast<Index>(ids.size()); }
  Index width() const { return ids.empty() ? 0 : static_cast<Index>(ids.front().size()); }
  Index length(Index row) const;
  /// Unmasked prefix of every row as a packed segment.
  std::vector<Segment> segments() const;
};

/// Pads already-encoded sequences (with specials) into a batch.
TextBatch make_text_batch(const std::vector<std::vector<int>>& sequences);

/// Throws ConfigError when max_len < 3.
TextBatch tokenize(const Tokenizer& tokenizer, const std::vector<std::string>& texts, int max_len);

}  // namespace graphtext
