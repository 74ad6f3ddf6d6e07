#pragma once

// Deterministic synthetic scenes of colored shapes, their relational
// captions, and the region-feature provider that stands in for a CNN.

#include "relcap/dataset.hpp"
#include "relcap/regions.hpp"
#include "relcap/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace relcap {

struct ToyConfig {
  std::size_t images = 120;
  std::size_t min_objects = 2;
  std::size_t max_objects = 6;
  double width = 100;
  double height = 100;
  double min_size = 12;
  double max_size = 30;
  /// Center offset beyond which "left of" / "above" hold.
  double margin = 2;
  /// Chance that a new object is nested inside an existing larger one.
  double inside_probability = 0.15;
  std::vector<std::string> shapes = {"square", "circle", "triangle", "star"};
  std::vector<std::string> colors = {"red", "green", "blue", "yellow", "purple"};

  nlohmann::json to_json() const;
  static ToyConfig from_json(const nlohmann::json& j);
  /// Throws ConfigError for empty inventories or inverted ranges.
  void validate() const;
};

/// Spatial predicate phrase of (subject, object), by priority:
/// "is inside" when the subject box lies within the object box, "is left of"
/// when x_s < x_o − margin, "is above" when y_s < y_o − margin, else "is near".
std::string spatial_predicate(const BoundingBox& subject, const BoundingBox& object, double margin);

/// Maps (scene, query box) to a fixed-width descriptor:
///   one-hot shape | one-hot color          of the highest-IoU scene object
///   6 occupancy statistics of that object  (inter/query area, inter/object area,
///                                           intersection center offset x/y, extent ratios)
///   per-color coverage of the query box
///   query width / image width, query height / image height
class FeatureProvider {
 public:
  FeatureProvider(std::vector<std::string> shapes, std::vector<std::string> colors, double width, double height);
  explicit FeatureProvider(const ToyConfig& cfg) : FeatureProvider(cfg.shapes, cfg.colors, cfg.width, cfg.height) {}

  std::size_t width() const { return shapes_.size() + 2 * colors_.size() + 8; }
  Tensor features(const std::vector<SceneObject>& scene, const BoundingBox& box) const;

  nlohmann::json to_json() const;
  static FeatureProvider from_json(const nlohmann::json& j);

 private:
  std::size_t shape_index(const std::string& s) const;
  std::size_t color_index(const std::string& c) const;

  std::vector<std::string> shapes_;
  std::vector<std::string> colors_;
  double image_w_;
  double image_h_;
};

struct ToyWorld {
  std::vector<RelationalRecord> records;
  FeatureProvider provider;
};

/// Every ordered pair of objects yields one relation captioned
/// "the <color> <shape> | <predicate> | the <color> <shape>".
ToyWorld generate_toy_world(std::uint64_t seed, const ToyConfig& cfg);

/// Simulated region proposal stage: jittered copies of every scene object
/// plus background boxes, each described by the provider.
struct ProposalConfig {
  std::size_t jitter_per_object = 3;
  double center_jitter = 0.12;  ///< fraction of width / height
  double scale_jitter = 0.12;   ///< log-scale half range
  std::size_t background = 3;
  bool include_ground_truth = false;

  nlohmann::json to_json() const;
  static ProposalConfig from_json(const nlohmann::json& j);
};

std::vector<RegionProposal> generate_proposals(const RelationalRecord& record, const FeatureProvider& provider,
                                               const ProposalConfig& cfg, Rng rng);

/// Scene object boxes of a record (ground-truth regions).
std::vector<BoundingBox> scene_boxes(const RelationalRecord& record);

}  // namespace relcap
