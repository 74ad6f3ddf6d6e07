#include "relcap/caption.hpp"

#include "relcap/errors.hpp"

#include <algorithm>
#include <cctype>

namespace relcap {

std::string_view to_string(PosTag t) {
  switch (t) {
    case PosTag::subj:
      return "SUBJ";
    case PosTag::pred:
      return "PRED";
    case PosTag::obj:
      return "OBJ";
  }
  return "?";
}

std::optional<PosTag> parse_pos_tag(std::string_view s) {
  if (s == "SUBJ") return PosTag::subj;
  if (s == "PRED") return PosTag::pred;
  if (s == "OBJ") return PosTag::obj;
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    while (!cur.empty() && is_punct(cur.back())) cur.pop_back();
    std::size_t lead = 0;
    while (lead < cur.size() && is_punct(cur[lead])) ++lead;
    cur.erase(0, lead);
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      flush();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

std::string CaptionSegments::text() const {
  auto [tokens, tags] = tagged_tokens();
  return join_tokens(tokens);
}

std::pair<std::vector<std::string>, std::vector<PosTag>> CaptionSegments::tagged_tokens() const {
  std::vector<std::string> tokens;
  std::vector<PosTag> tags;
  const std::array<std::pair<const std::string*, PosTag>, 3> parts = {
      {{&subject, PosTag::subj}, {&predicate, PosTag::pred}, {&object, PosTag::obj}}};
  for (const auto& [phrase, tag] : parts) {
    for (auto& t : tokenize(*phrase)) {
      tokens.push_back(std::move(t));
      tags.push_back(tag);
    }
  }
  return {std::move(tokens), std::move(tags)};
}

Vocabulary::Vocabulary() : words_{"<pad>", "<start>", "<end>", "<unk>"} {
  for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = i;
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) : Vocabulary() {
  for (const auto& w : words) {
    if (index_.count(w) != 0) throw ContractError("vocabulary: duplicate word '" + w + "'");
    index_[w] = words_.size();
    words_.push_back(w);
  }
}

Vocabulary Vocabulary::from_counts(const std::map<std::string, std::size_t>& counts, std::size_t min_count) {
  if (min_count < 1) throw ContractError("build_vocab: min_count must be at least 1");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (auto& [w, c] : kept) words.push_back(w);
  return Vocabulary(words);
}

std::size_t Vocabulary::id(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.find(word) != index_.end(); }

const std::string& Vocabulary::word(std::size_t id) const {
  if (id >= words_.size()) throw IndexError("word id " + std::to_string(id) + " out of vocabulary of size " +
                                            std::to_string(words_.size()));
  return words_[id];
}

std::vector<std::string> Vocabulary::words() const { return {words_.begin() + kReserved, words_.end()}; }

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> out;
  for (std::size_t i : ids) {
    if (i == kEnd) break;
    out.push_back(word(i));
  }
  return out;
}

EncodedCaption encode_caption(const CaptionSegments& caption, const Vocabulary& vocab, std::size_t max_len) {
  auto [tokens, tags] = caption.tagged_tokens();
  if (tokens.empty()) throw ContractError("encode_caption: empty caption");
  if (tokens.size() > max_len) {
    tokens.resize(max_len);
    tags.resize(max_len);
  }
  EncodedCaption out;
  out.tokens = vocab.encode(tokens);
  out.tags = std::move(tags);
  out.tokens.push_back(Vocabulary::kEnd);
  out.tags.push_back(PosTag::obj);
  return out;
}

}  // namespace relcap
