#pragma once

// Caption similarity and relational detection metrics.

#include "relcap/caption.hpp"
#include "relcap/geometry.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relcap {

struct MeteorResult {
  double score = 0;
  double precision = 0;
  double recall = 0;
  std::size_t matches = 0;
  std::size_t chunks = 0;
  bool empty_input = false;  ///< candidate or reference was empty
};

/// Unigram alignment by exact match, then Porter-stem match; each token is
/// used once and candidates take the leftmost free reference token.
/// F = 10PR/(R+9P), penalty = 0.5 (chunks/m)³, score = F (1 − penalty).
MeteorResult meteor_detail(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);
double meteor_lite(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

struct MetricConfig {
  std::vector<double> meteor_thresholds{0.0, 0.05, 0.1, 0.15, 0.2, 0.25};
  std::vector<double> iou_thresholds{0.2, 0.3, 0.4, 0.5, 0.6};
  double vrd_iou = 0.5;
  double vrd_meteor = 0.25;
  std::vector<std::size_t> vrd_k{50, 100};
  std::size_t keep_after_nms = 50;

  nlohmann::json to_json() const;
  static MetricConfig from_json(const nlohmann::json& j);
};

struct GroundTruthRelation {
  int image_id = 0;
  BoundingBox subject_box;
  BoundingBox object_box;
  std::vector<std::string> tokens;
  std::vector<PosTag> tags;
};

/// One captioned region pair; also the prediction JSON-lines record.
struct RelationPrediction {
  int image_id = 0;
  BoundingBox subject_box;
  BoundingBox object_box;
  std::vector<std::string> tokens;
  std::vector<PosTag> pos;          ///< aligned with tokens
  std::vector<double> word_probs;   ///< per word, plus the end token when emitted
  double confidence = 0;

  friend bool operator==(const RelationPrediction&, const RelationPrediction&) = default;
};

/// Mean over the METEOR × IoU threshold grid of every-point AP, in percent.
/// Predictions are ranked by confidence (input order breaks ties); each one
/// claims the free GT of its image that passes both box IoUs and the METEOR
/// threshold, preferring the highest min(IoU_s, IoU_o). Throws DataError
/// without any GT.
double relational_map(const std::vector<RelationPrediction>& predictions,
                      const std::vector<GroundTruthRelation>& gts, const MetricConfig& config);

/// AP for a single threshold pair.
double relational_ap(const std::vector<RelationPrediction>& predictions, const std::vector<GroundTruthRelation>& gts,
                     double meteor_threshold, double iou_threshold);

using CaptionBag = std::vector<std::vector<std::string>>;

/// Per image, the fraction of GT captions reached (METEOR ≥ t) by any
/// predicted caption, averaged over thresholds and then over the images of
/// `gts`. Images without predictions count as zero.
double image_level_recall(const std::map<int, CaptionBag>& predictions, const std::map<int, CaptionBag>& gts,
                          const std::vector<double>& meteor_thresholds);

struct DiversityStats {
  double words_per_img = 0;
  double words_per_box = 0;
};

/// Distinct words per image (over images with predictions) and per box.
DiversityStats diversity_stats(const std::vector<RelationPrediction>& predictions);

enum class VrdMode { phrase, relationship };

/// Fraction of GT covered by the top-K predictions of its image, averaged
/// over images with GT. Throws ContractError for K = 0.
double vrd_recall_at_k(const std::vector<RelationPrediction>& predictions,
                       const std::vector<GroundTruthRelation>& gts, std::size_t k, VrdMode mode,
                       const MetricConfig& config);

struct PosAccuracy {
  double overall = 0;
  std::array<double, kPosClasses> per_class{};
  std::size_t tokens = 0;
  std::array<std::size_t, kPosClasses> class_tokens{};
};

/// Token accuracy against the GT tag of each position. Sequences must be
/// aligned (ContractError otherwise).
PosAccuracy pos_accuracy(const std::vector<std::vector<PosTag>>& predicted,
                         const std::vector<std::vector<PosTag>>& truth);

struct EvalReport {
  std::optional<double> map_percent;  ///< absent when the model proposes no subject/object boxes
  double image_level_recall = 0;
  double mean_meteor = 0;
  double words_per_img = 0;
  double words_per_box = 0;
  std::map<std::size_t, double> vrd_phrase_recall;
  std::map<std::size_t, double> vrd_rel_recall;
  std::optional<PosAccuracy> pos_accuracy;
  std::size_t images = 0;
  std::size_t predictions = 0;
  std::size_t ground_truth = 0;

  nlohmann::json to_json() const;
  /// Aligned two-column text table.
  std::string to_table() const;
};

/// Mean METEOR of each prediction against the GT of its image with the
/// best min(IoU_s, IoU_o); predictions in images without GT are skipped.
double mean_meteor(const std::vector<RelationPrediction>& predictions, const std::vector<GroundTruthRelation>& gts);

/// All metrics except POS accuracy, which needs teacher-forced tags.
EvalReport evaluate(const std::vector<RelationPrediction>& predictions, const std::vector<GroundTruthRelation>& gts,
                    const MetricConfig& config, bool with_map = true);

}  // namespace relcap
