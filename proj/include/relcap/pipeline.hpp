#pragma once

// Glue between datasets and the network: training examples, the training
// loop, checkpoints, inference, and the prediction JSON-lines format.

#include "relcap/checkpoint.hpp"
#include "relcap/dataset.hpp"
#include "relcap/metrics.hpp"
#include "relcap/model.hpp"
#include "relcap/optim.hpp"
#include "relcap/toy_world.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace relcap {

struct PipelineConfig {
  ProposalConfig proposals;
  /// Proposal stream seed; inference proposals of image i come from
  /// Rng(proposal_seed).split(i).
  std::uint64_t proposal_seed = 0;
  double nms_iou = 0.5;
  /// Minimum detection probability before NMS.
  double min_detection = 0.5;
  std::size_t keep_after_nms = 50;
  /// 0 keeps every ordered pair.
  std::size_t max_pairs = 0;
  std::size_t max_len = 16;
  /// Caption-confidence filter applied to predictions.
  double min_confidence = 0.0;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
  std::size_t epochs = 200;
  ad::AdamConfig adam;
  std::uint64_t seed = 7;
  std::size_t min_count = 1;
  PipelineConfig pipeline;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Distinct relation endpoint boxes in order of first appearance.
std::vector<BoundingBox> ground_truth_regions(const RelationalRecord& record);

/// Every relation of every record with its tokenized, segment-tagged caption.
std::vector<GroundTruthRelation> ground_truth_relations(const std::vector<RelationalRecord>& records);

/// Network input for `regions` of an image and ordered pairs over them.
/// Needs the record's scene for feature extraction.
ImageInput build_image_input(const RelationalRecord& record, const FeatureProvider& provider,
                             const std::vector<BoundingBox>& regions,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

/// Per-image training material, precomputed once: proposals (ground-truth
/// boxes included) with detection labels and box targets, and encoded
/// relation captions. Each draw picks one positive proposal per GT region.
class TrainingSet {
 public:
  TrainingSet(const std::vector<RelationalRecord>& records, const FeatureProvider& provider, const Vocabulary& vocab,
              const ModelConfig& model, const PipelineConfig& pipeline);

  std::size_t size() const { return images_.size(); }
  TrainingExample draw(std::size_t image, Rng& rng) const;

 private:
  struct Image {
    const RelationalRecord* record;
    std::vector<RegionProposal> proposals;
    std::vector<std::vector<std::size_t>> positives;  ///< per GT region
    std::vector<std::pair<std::size_t, std::size_t>> relation_regions;
    std::vector<CaptionTarget> captions;
    Tensor proposal_features;
    std::vector<int> det_labels;
    std::vector<double> det_weights;
    Tensor box_targets;
    std::vector<double> box_weights;
  };
  const FeatureProvider* provider_;
  std::vector<Image> images_;
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< 1-based
  LossReport mean;
};

/// Model, vocabulary and optimizer state of a training run.
struct TrainState {
  MttsNet model;
  Vocabulary vocab;
  FeatureProvider provider;
  ad::Adam adam;
  TrainConfig config;
  std::size_t epochs_done = 0;
  std::vector<EpochRecord> history;
};

TrainState init_training(const ModelConfig& model, const TrainConfig& config, const Vocabulary& vocab,
                         const FeatureProvider& provider);

/// Runs one epoch over `set` (one Adam step per image, shuffled). The
/// epoch's randomness derives from (config.seed, epoch index) alone, so a
/// resumed run matches an uninterrupted one.
EpochRecord train_epoch(TrainState& state, const TrainingSet& set);

Checkpoint to_checkpoint(const TrainState& state);
/// Throws DataError for a checkpoint that is not a model checkpoint or whose
/// tensors disagree with the stored configuration.
TrainState from_checkpoint(const Checkpoint& ckpt);

std::string loss_log_csv(const std::vector<EpochRecord>& history);

/// Detected regions of an image and the network input over their pairs.
struct ImageRegions {
  std::vector<RegionProposal> kept;  ///< after the score filter and NMS
  std::vector<RegionPair> pairs;
  ImageInput input;
};

/// Proposals → detection filter → box refinement → NMS → combination layer.
ImageRegions propose_regions(const MttsNet& model, const RelationalRecord& record, const FeatureProvider& provider,
                             const PipelineConfig& config);

/// propose_regions followed by greedy captioning of every pair. Confidence
/// is p_subject · p_object · Π word probabilities.
std::vector<RelationPrediction> infer_image(const MttsNet& model, const Vocabulary& vocab,
                                            const RelationalRecord& record, const FeatureProvider& provider,
                                            const PipelineConfig& config);
std::vector<RelationPrediction> infer(const MttsNet& model, const Vocabulary& vocab,
                                      const std::vector<RelationalRecord>& records, const FeatureProvider& provider,
                                      const PipelineConfig& config);

/// POS accuracy with GT regions and teacher-forced GT captions (end token
/// excluded).
PosAccuracy teacher_forced_pos_accuracy(const MttsNet& model, const Vocabulary& vocab,
                                        const std::vector<RelationalRecord>& records,
                                        const FeatureProvider& provider);

/// Full report for `records`: inference, then every metric.
EvalReport evaluate_model(const MttsNet& model, const Vocabulary& vocab, const std::vector<RelationalRecord>& records,
                          const FeatureProvider& provider, const PipelineConfig& pipeline,
                          const MetricConfig& metrics);

// Prediction JSON-lines, one object per line:
//   {"image_id": 4, "subject_box": {"x","y","w","h"}, "object_box": {...},
//    "caption": "the red square is left of the blue circle",
//    "pos": ["SUBJ", ...], "word_probs": [...], "confidence": 0.83}
// `pos` has one tag per caption word; `word_probs` has one entry per word,
// plus a final entry for the end token when it was emitted.
nlohmann::json prediction_to_json(const RelationPrediction& p);
/// Throws DataError for schema violations.
RelationPrediction prediction_from_json(const nlohmann::json& j);
void validate_prediction(const RelationPrediction& p);
std::string dump_predictions(const std::vector<RelationPrediction>& predictions);
std::vector<RelationPrediction> parse_predictions(std::string_view text);

}  // namespace relcap
