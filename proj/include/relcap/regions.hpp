#pragma once

#include "relcap/geometry.hpp"
#include "relcap/tensor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace relcap {

struct RegionProposal {
  BoundingBox box;
  double confidence = 1.0;  ///< in [0, 1]
  Tensor feature;           ///< 1 × D_in appearance descriptor
  int id = 0;
};

/// Ordered (subject, object) pair. Indices refer to the proposal sequence the
/// pair was built from.
struct RegionPair {
  std::size_t subject = 0;
  std::size_t object = 0;
  int subject_id = 0;
  int object_id = 0;
  BoundingBox subject_box;
  BoundingBox object_box;
  BoundingBox union_box;
  GeometricFeature geo{};
};

/// Greedy suppression in descending confidence, ties by ascending id.
/// Returns at most `keep` survivors in that order; no two survivors overlap
/// by more than `iou_threshold`.
std::vector<RegionProposal> nms(std::span<const RegionProposal> proposals, double iou_threshold, std::size_t keep);

enum class MatchKind { positive, negative, ignore };

struct MatchLabel {
  MatchKind kind = MatchKind::ignore;
  std::size_t gt_index = 0;  ///< meaningful when positive
  double max_iou = 0.0;
};

inline constexpr double kPositiveIou = 0.7;
inline constexpr double kNegativeIou = 0.3;

/// Positive when the best IoU reaches 0.7 (matched to the argmax GT, lowest
/// index on ties), negative when every IoU is below 0.3, ignore otherwise.
std::vector<MatchLabel> match_to_gt(std::span<const BoundingBox> proposals, std::span<const BoundingBox> gt_boxes);

/// All ordered pairs (i, j), i ≠ j, in lexicographic order. With `max_pairs`
/// the pairs with the largest subject·object confidence product are kept
/// (stable on ties), still in lexicographic order.
std::vector<RegionPair> combination_layer(std::span<const RegionProposal> proposals,
                                          std::optional<std::size_t> max_pairs = std::nullopt);

RegionPair make_pair(std::span<const RegionProposal> proposals, std::size_t subject, std::size_t object);

}  // namespace relcap
