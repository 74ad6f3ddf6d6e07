#include "relcap/enrich.hpp"

#include "relcap/errors.hpp"
#include "relcap/io.hpp"

#include <algorithm>
#include <iostream>

namespace relcap {

PosLexicon PosLexicon::parse(std::string_view text) {
  std::map<std::string, std::string> entries;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": expected 'word<TAB>tag'");
    }
    entries[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return PosLexicon(std::move(entries));
}

PosLexicon PosLexicon::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::string PosLexicon::dump() const {
  std::string out;
  for (const auto& [w, t] : entries_) out += w + "\t" + t + "\n";
  return out;
}

const std::string* PosLexicon::find(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct EndpointContext {
  const Endpoint* endpoint;
  std::string* phrase;
};

}  // namespace

std::vector<RelationalRecord> enrich_attributes(const std::vector<RelationalRecord>& relations,
                                                const std::vector<RelationalRecord>& attributes,
                                                const PosLexicon& lexicon, const Rng& rng, EnrichStats* stats) {
  std::map<int, const RelationalRecord*> by_image;
  for (const auto& r : attributes) by_image.emplace(r.image_id, &r);

  EnrichStats local;
  EnrichStats& st = stats != nullptr ? *stats : local;
  std::set<std::string> missing;

  std::vector<RelationalRecord> out = relations;
  for (auto& rec : out) {
    Rng image_rng = rng.split(static_cast<std::uint64_t>(static_cast<std::int64_t>(rec.image_id)));
    const auto found = by_image.find(rec.image_id);
    const std::vector<AttributeRecord>* annotated = found == by_image.end() ? nullptr : &found->second->objects;

    for (auto& rel : rec.relations) {
      std::set<std::string> triplet_words;
      for (const auto* part : {&rel.subject.name, &rel.predicate, &rel.object.name}) {
        for (auto& w : tokenize(*part)) triplet_words.insert(std::move(w));
      }
      for (EndpointContext ctx : {EndpointContext{&rel.subject, &rel.caption.subject},
                                  EndpointContext{&rel.object, &rel.caption.object}}) {
        ++st.endpoints;
        const AttributeRecord* best = nullptr;
        double best_iou = 0.0;
        if (annotated != nullptr) {
          const std::string category = lower(ctx.endpoint->name);
          for (const auto& a : *annotated) {
            if (lower(a.name) != category) continue;
            const double v = iou(a.box, ctx.endpoint->box);
            if (v > kAttributeIou && v > best_iou) {
              best_iou = v;
              best = &a;
            }
          }
        }
        std::vector<std::string> candidates;
        if (best != nullptr) {
          for (const auto& raw : best->attributes) {
            const std::string attr = lower(raw);
            if (attr.empty() || std::find(candidates.begin(), candidates.end(), attr) != candidates.end()) continue;
            const std::string* tag = lexicon.find(attr);
            if (tag == nullptr) {
              if (missing.insert(attr).second) {
                st.missing_lexicon.push_back(attr);
                std::clog << "enrich: no lexicon entry for '" << attr << "', skipping\n";
              }
              continue;
            }
            if (kAttributeTags.count(*tag) == 0) continue;
            const auto words = tokenize(attr);
            const bool redundant =
                std::any_of(words.begin(), words.end(), [&](const std::string& w) { return triplet_words.count(w); });
            if (redundant) continue;
            candidates.push_back(attr);
          }
        }
        if (candidates.empty()) {
          *ctx.phrase = "the " + *ctx.phrase;
          ++st.fallback;
        } else {
          const std::size_t pick = candidates.size() == 1 ? 0 : image_rng.uniform_index(candidates.size());
          *ctx.phrase = candidates[pick] + " " + *ctx.phrase;
          ++st.enriched;
        }
      }
    }
  }
  return out;
}

}  // namespace relcap
