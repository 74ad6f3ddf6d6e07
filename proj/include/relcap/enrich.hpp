#pragma once

// Attribute enrichment of relational captions from a separate attribute
// annotation set over the same images.

#include "relcap/dataset.hpp"
#include "relcap/tensor.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace relcap {

/// word → coarse part-of-speech tag (e.g. "tall" → "JJ").
class PosLexicon {
 public:
  PosLexicon() = default;
  explicit PosLexicon(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  /// Lines "word<TAB>tag"; blank lines and lines starting with '#' skipped.
  static PosLexicon parse(std::string_view text);
  static PosLexicon load(const std::filesystem::path& path);
  std::string dump() const;

  const std::string* find(const std::string& word) const;
  void set(const std::string& word, const std::string& tag) { entries_[word] = tag; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

/// Tags admitted as natural attributes.
inline const std::set<std::string> kAttributeTags = {"NN", "VBN", "VBG", "VBD", "JJ"};
inline constexpr double kAttributeIou = 0.7;

struct EnrichStats {
  std::size_t endpoints = 0;
  std::size_t enriched = 0;  ///< endpoints that received an attribute
  std::size_t fallback = 0;  ///< endpoints prefixed with "the"
  std::vector<std::string> missing_lexicon;  ///< attribute words with no lexicon entry
};

/// For each relation endpoint:
///  1. candidate boxes share the endpoint's category word and have IoU > 0.7;
///  2. the highest-IoU box is chosen;
///  3. its attributes are kept only if tagged NN, VBN, VBG, VBD or JJ;
///  4. attributes that occur among the triplet's words are dropped;
///  5. one survivor is drawn uniformly (per-image stream of `rng`);
///  6. with no survivor the phrase is prefixed with "the".
/// The chosen attribute is prepended to the endpoint's caption segment.
std::vector<RelationalRecord> enrich_attributes(const std::vector<RelationalRecord>& relations,
                                                const std::vector<RelationalRecord>& attributes,
                                                const PosLexicon& lexicon, const Rng& rng,
                                                EnrichStats* stats = nullptr);

}  // namespace relcap
