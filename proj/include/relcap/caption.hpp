#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relcap {

/// Segment role of a caption token.
enum class PosTag : int { subj = 0, pred = 1, obj = 2 };
inline constexpr std::size_t kPosClasses = 3;

std::string_view to_string(PosTag t);
/// Accepts "SUBJ", "PRED", "OBJ".
std::optional<PosTag> parse_pos_tag(std::string_view s);

/// Lowercases and splits on whitespace; strips surrounding punctuation.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

/// Caption split into its subject, predicate and object phrases.
struct CaptionSegments {
  std::string subject;
  std::string predicate;
  std::string object;

  std::string text() const;
  /// Tokens with their segment tags, in SUBJ → PRED → OBJ order.
  std::pair<std::vector<std::string>, std::vector<PosTag>> tagged_tokens() const;
  friend bool operator==(const CaptionSegments&, const CaptionSegments&) = default;
};

/// Word ↔ id bijection; ids 0–3 are reserved.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kStart = 1;
  static constexpr std::size_t kEnd = 2;
  static constexpr std::size_t kUnknown = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  /// Words in id order after the reserved block.
  explicit Vocabulary(const std::vector<std::string>& words);

  /// Words with count ≥ min_count, ordered by descending frequency then
  /// lexicographically.
  static Vocabulary from_counts(const std::map<std::string, std::size_t>& counts, std::size_t min_count);

  std::size_t size() const { return words_.size(); }
  /// kUnknown for out-of-vocabulary words.
  std::size_t id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(std::size_t id) const;
  /// Non-reserved words in id order.
  std::vector<std::string> words() const;
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;
  /// Words for ids, stopping at the end token.
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct EncodedCaption {
  std::vector<std::size_t> tokens;  ///< word ids, end token last
  std::vector<PosTag> tags;         ///< one per token; the end token is OBJ
};

/// Encodes a segmented caption, truncating to `max_len` words before the
/// end token is appended. Throws ContractError for an empty caption.
EncodedCaption encode_caption(const CaptionSegments& caption, const Vocabulary& vocab, std::size_t max_len);

}  // namespace relcap
