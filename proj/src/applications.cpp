#include "relcap/applications.hpp"

#include "relcap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace relcap {

using nlohmann::json;

namespace {

std::string words_with_tag(const RelationPrediction& p, PosTag tag) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < p.tokens.size(); ++i) {
    if (p.pos[i] == tag) out.push_back(p.tokens[i]);
  }
  return join_tokens(out);
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

CaptionGraph build_caption_graph(const std::vector<RelationPrediction>& predictions, double node_merge_iou,
                                 std::size_t* skipped) {
  CaptionGraph g;
  if (!predictions.empty()) g.image_id = predictions.front().image_id;
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });

  auto node_for = [&](const BoundingBox& box, const std::string& phrase, double confidence) {
    int best = -1;
    double best_iou = node_merge_iou;
    for (const auto& n : g.nodes) {
      const double v = iou(n.box, box);
      if (v >= best_iou && (best < 0 || v > best_iou)) {
        best = n.id;
        best_iou = v;
      }
    }
    if (best >= 0) return best;
    const int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({id, phrase, box, confidence});
    return id;
  };

  std::size_t dropped = 0;
  for (std::size_t idx : order) {
    const auto& p = predictions[idx];
    if (p.pos.size() != p.tokens.size()) throw ContractError("build_caption_graph: prediction lacks POS tags");
    const std::string subject = words_with_tag(p, PosTag::subj);
    const std::string predicate = words_with_tag(p, PosTag::pred);
    const std::string object = words_with_tag(p, PosTag::obj);
    if (subject.empty() || predicate.empty() || object.empty()) {
      ++dropped;
      std::clog << "warning: skipping caption '" << join_tokens(p.tokens) << "' of image " << p.image_id
                << ": missing " << (predicate.empty() ? "PRED" : subject.empty() ? "SUBJ" : "OBJ") << " words\n";
      continue;
    }
    const int s = node_for(p.subject_box, subject, p.confidence);
    const int o = node_for(p.object_box, object, p.confidence);
    auto it = std::find_if(g.edges.begin(), g.edges.end(),
                           [&](const GraphEdge& e) { return e.source == s && e.target == o; });
    if (it == g.edges.end()) g.edges.push_back({s, o, predicate, p.confidence});
  }
  if (skipped != nullptr) *skipped = dropped;
  return g;
}

std::string export_dot(const CaptionGraph& graph) {
  std::ostringstream os;
  os << "digraph caption_graph {\n";
  for (const auto& n : graph.nodes) os << "  n" << n.id << " [label=\"" << dot_escape(n.phrase) << "\"];\n";
  for (const auto& e : graph.edges) {
    os << "  n" << e.source << " -> n" << e.target << " [label=\"" << dot_escape(e.predicate) << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

json graph_to_json(const CaptionGraph& graph) {
  json nodes = json::array(), edges = json::array();
  for (const auto& n : graph.nodes) {
    nodes.push_back({{"id", n.id}, {"phrase", n.phrase}, {"box", box_to_json(n.box)}, {"confidence", n.confidence}});
  }
  for (const auto& e : graph.edges) {
    edges.push_back(
        {{"source", e.source}, {"target", e.target}, {"predicate", e.predicate}, {"confidence", e.confidence}});
  }
  return {{"image_id", graph.image_id}, {"nodes", nodes}, {"edges", edges}};
}

CaptionGraph graph_from_json(const json& j) {
  CaptionGraph g;
  try {
    g.image_id = j.at("image_id").get<int>();
    std::set<int> ids;
    for (const auto& n : j.at("nodes")) {
      GraphNode node{n.at("id").get<int>(), n.at("phrase").get<std::string>(), box_from_json(n.at("box")),
                     n.at("confidence").get<double>()};
      if (node.phrase.empty()) throw DataError("graph node " + std::to_string(node.id) + " has an empty phrase");
      if (!ids.insert(node.id).second) throw DataError("duplicate graph node id " + std::to_string(node.id));
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : j.at("edges")) {
      GraphEdge edge{e.at("source").get<int>(), e.at("target").get<int>(), e.at("predicate").get<std::string>(),
                     e.at("confidence").get<double>()};
      if (!ids.count(edge.source) || !ids.count(edge.target)) throw DataError("graph edge refers to a missing node");
      g.edges.push_back(std::move(edge));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("caption graph: ") + e.what());
  }
  return g;
}

double ImageScore::score() const { return std::exp(log_score); }

ImageScore retrieval_score(const MttsNet& model, const Vocabulary& vocab, const std::vector<std::string>& query,
                           const RelationalRecord& record, const FeatureProvider& provider,
                           const PipelineConfig& config) {
  if (query.empty()) throw ContractError("retrieval query is empty");
  ImageScore s;
  s.image_id = record.image_id;
  s.log_score = -std::numeric_limits<double>::infinity();
  const ImageRegions regions = propose_regions(model, record, provider, config);
  if (regions.pairs.empty()) return s;
  const auto probs = model.word_probabilities(regions.input, vocab.encode(query));
  for (std::size_t p = 0; p < probs.size(); ++p) {
    double log_sum = 0.0;
    for (double q : probs[p]) log_sum += std::log(q);
    if (log_sum > s.log_score) {
      s.log_score = log_sum;
      s.best_pair = p;
      s.word_probs = probs[p];
    }
  }
  return s;
}

std::vector<ImageScore> rank_images(const MttsNet& model, const Vocabulary& vocab,
                                    const std::vector<std::string>& query,
                                    const std::vector<RelationalRecord>& records, const FeatureProvider& provider,
                                    const PipelineConfig& config) {
  std::vector<ImageScore> out;
  for (const auto& r : records) out.push_back(retrieval_score(model, vocab, query, r, provider, config));
  std::stable_sort(out.begin(), out.end(),
                   [](const ImageScore& a, const ImageScore& b) { return a.log_score > b.log_score; });
  return out;
}

json RetrievalProtocol::to_json() const {
  return {{"images", images},
          {"query_images", query_images},
          {"captions_per_image", captions_per_image},
          {"seeds", seeds},
          {"ks", ks}};
}

RetrievalProtocol RetrievalProtocol::from_json(const json& j) {
  RetrievalProtocol p;
  try {
    if (j.contains("images")) p.images = j.at("images").get<std::size_t>();
    if (j.contains("query_images")) p.query_images = j.at("query_images").get<std::size_t>();
    if (j.contains("captions_per_image")) p.captions_per_image = j.at("captions_per_image").get<std::size_t>();
    if (j.contains("seeds")) p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("ks")) p.ks = j.at("ks").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("retrieval protocol: ") + e.what());
  }
  return p;
}

std::size_t rank_of(const std::vector<double>& scores, std::size_t source) {
  const double own = scores.at(source);
  return 1 + static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [&](double s) { return s > own; }));
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

// First k entries of a uniformly shuffled 0..n-1.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
  idx.resize(k);
  return idx;
}

}  // namespace

RetrievalReport retrieval_eval(const MttsNet& model, const Vocabulary& vocab,
                               const std::vector<RelationalRecord>& records, const FeatureProvider& provider,
                               const PipelineConfig& config, const RetrievalProtocol& protocol) {
  if (protocol.images == 0 || protocol.query_images == 0 || protocol.captions_per_image == 0) {
    throw ConfigError("retrieval protocol counts must be positive");
  }
  if (records.size() < protocol.images) {
    throw ConfigError("retrieval protocol needs " + std::to_string(protocol.images) + " images, only " +
                      std::to_string(records.size()) + " available");
  }
  if (protocol.query_images > protocol.images) throw ConfigError("more query images than images");
  if (protocol.seeds.empty()) throw ConfigError("retrieval protocol needs at least one seed");

  RetrievalReport report;
  for (std::size_t k : protocol.ks) report.recall_at_k[k] = 0.0;
  for (std::uint64_t seed : protocol.seeds) {
    Rng rng(seed);
    const auto chosen = sample_without_replacement(records.size(), protocol.images, rng);
    std::vector<RelationalRecord> pool;
    for (std::size_t i : chosen) pool.push_back(records[i]);
    const auto sources = sample_without_replacement(pool.size(), protocol.query_images, rng);

    std::vector<RetrievalQuery> queries;
    for (std::size_t src : sources) {
      // A caption that also describes another pool image has no single
      // correct answer, so only captions distinctive to the source are drawn.
      std::set<std::vector<std::string>> elsewhere;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (i == src) continue;
        for (const auto& rel : pool[i].relations) elsewhere.insert(rel.caption.tagged_tokens().first);
      }
      std::vector<std::vector<std::string>> captions;
      for (const auto& rel : pool[src].relations) {
        auto tokens = rel.caption.tagged_tokens().first;
        if (elsewhere.count(tokens) != 0) continue;
        if (std::find(captions.begin(), captions.end(), tokens) == captions.end()) captions.push_back(tokens);
      }
      const auto picks =
          sample_without_replacement(captions.size(), std::min(protocol.captions_per_image, captions.size()), rng);
      for (std::size_t c : picks) {
        RetrievalQuery q;
        q.seed = seed;
        q.source_image = pool[src].image_id;
        q.tokens = captions[c];
        std::vector<double> scores;
        for (const auto& r : pool) scores.push_back(retrieval_score(model, vocab, q.tokens, r, provider, config).log_score);
        q.rank = rank_of(scores, src);
        queries.push_back(std::move(q));
      }
    }
    std::vector<double> ranks;
    for (const auto& q : queries) ranks.push_back(static_cast<double>(q.rank));
    for (std::size_t k : protocol.ks) {
      const auto hits = std::count_if(queries.begin(), queries.end(), [&](const RetrievalQuery& q) { return q.rank <= k; });
      report.recall_at_k[k] += queries.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(queries.size());
    }
    report.median_rank += median(ranks);
    report.queries.insert(report.queries.end(), queries.begin(), queries.end());
  }
  const double n = static_cast<double>(protocol.seeds.size());
  for (auto& [k, v] : report.recall_at_k) v /= n;
  report.median_rank /= n;
  return report;
}

json RetrievalReport::to_json() const {
  json r = json::object();
  for (const auto& [k, v] : recall_at_k) r[std::to_string(k)] = v;
  json qs = json::array();
  for (const auto& q : queries) {
    qs.push_back({{"seed", q.seed}, {"source_image", q.source_image}, {"query", join_tokens(q.tokens)}, {"rank", q.rank}});
  }
  return {{"recall_at_k", r}, {"median_rank", median_rank}, {"queries", qs}};
}

std::string RetrievalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  for (const auto& [k, v] : recall_at_k) os << "R@" << std::left << std::setw(12) << k << v << '\n';
  os << std::left << std::setw(14) << "median rank" << median_rank << '\n';
  return os.str();
}

}  // namespace relcap
