#pragma once

// Consumers of relational predictions: caption graphs and sentence-based
// image retrieval.

#include "relcap/metrics.hpp"
#include "relcap/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace relcap {

struct GraphNode {
  int id = 0;
  std::string phrase;
  BoundingBox box;
  double confidence = 0;  ///< of the caption that named the node
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  int source = 0;
  int target = 0;
  std::string predicate;
  double confidence = 0;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct CaptionGraph {
  int image_id = 0;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  friend bool operator==(const CaptionGraph&, const CaptionGraph&) = default;
};

inline constexpr double kNodeMergeIou = 0.9;

/// Builds the graph of one image. Captions are visited in descending
/// confidence; a subject or object box joins the existing node it overlaps
/// most when that IoU reaches `node_merge_iou`, else starts a new node named
/// by its SUBJ (or OBJ) words. The PRED words label a subject → object edge;
/// repeated (source, target) edges keep the most confident caption.
/// Captions without SUBJ, PRED or OBJ words are skipped and counted.
CaptionGraph build_caption_graph(const std::vector<RelationPrediction>& predictions,
                                 double node_merge_iou = kNodeMergeIou, std::size_t* skipped = nullptr);

std::string export_dot(const CaptionGraph& graph);
nlohmann::json graph_to_json(const CaptionGraph& graph);
/// Throws DataError on malformed input or dangling edges.
CaptionGraph graph_from_json(const nlohmann::json& j);

struct ImageScore {
  int image_id = 0;
  /// log of the best pair's product of query-word probabilities; -inf
  /// when the image yields no pairs.
  double log_score = 0;
  std::size_t best_pair = 0;
  std::vector<double> word_probs;  ///< of the best pair
  double score() const;
};

/// Teacher-forces `query` (mapped through `vocab`, OOV → unknown) through
/// every candidate pair of the image and keeps the best product of word
/// probabilities. Throws ContractError for an empty query.
ImageScore retrieval_score(const MttsNet& model, const Vocabulary& vocab, const std::vector<std::string>& query,
                           const RelationalRecord& record, const FeatureProvider& provider,
                           const PipelineConfig& config);

/// Images ranked by descending score, ties by position in `records`.
std::vector<ImageScore> rank_images(const MttsNet& model, const Vocabulary& vocab,
                                    const std::vector<std::string>& query,
                                    const std::vector<RelationalRecord>& records, const FeatureProvider& provider,
                                    const PipelineConfig& config);

struct RetrievalProtocol {
  std::size_t images = 100;
  std::size_t query_images = 5;
  std::size_t captions_per_image = 4;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::size_t> ks{1, 5, 10};

  nlohmann::json to_json() const;
  static RetrievalProtocol from_json(const nlohmann::json& j);
};

struct RetrievalQuery {
  std::uint64_t seed = 0;
  int source_image = 0;
  std::vector<std::string> tokens;
  std::size_t rank = 0;  ///< 1 + number of images scoring strictly higher
};

struct RetrievalReport {
  std::map<std::size_t, double> recall_at_k;  ///< mean over seeds
  double median_rank = 0;                     ///< mean over seeds
  std::vector<RetrievalQuery> queries;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Per seed: draws `images` records, `query_images` of them as query
/// sources, and up to `captions_per_image` distinct GT captions from each
/// that no other drawn image carries;
/// ranks every drawn image per query. Throws ConfigError when `records`
/// has fewer than `images` entries.
RetrievalReport retrieval_eval(const MttsNet& model, const Vocabulary& vocab,
                               const std::vector<RelationalRecord>& records, const FeatureProvider& provider,
                               const PipelineConfig& config, const RetrievalProtocol& protocol);

/// Rank of `source` given each image's score: 1 + count of strictly higher.
std::size_t rank_of(const std::vector<double>& scores, std::size_t source);

double median(std::vector<double> values);

}  // namespace relcap
