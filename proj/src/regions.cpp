#include "relcap/regions.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace relcap {

std::string to_string(const BoundingBox& b) {
  std::ostringstream ss;
  ss << "(" << b.x << ", " << b.y << ", " << b.w << ", " << b.h << ")";
  return ss.str();
}

std::vector<RegionProposal> nms(std::span<const RegionProposal> proposals, double iou_threshold, std::size_t keep) {
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (proposals[a].confidence != proposals[b].confidence) return proposals[a].confidence > proposals[b].confidence;
    return proposals[a].id < proposals[b].id;
  });
  std::vector<RegionProposal> kept;
  for (std::size_t idx : order) {
    if (kept.size() >= keep) break;
    const auto& cand = proposals[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](const RegionProposal& k) { return iou(k.box, cand.box) > iou_threshold; });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::vector<MatchLabel> match_to_gt(std::span<const BoundingBox> proposals, std::span<const BoundingBox> gt_boxes) {
  std::vector<MatchLabel> labels;
  labels.reserve(proposals.size());
  for (const auto& p : proposals) {
    MatchLabel m;
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      const double v = iou(p, gt_boxes[g]);
      if (v > m.max_iou) {
        m.max_iou = v;
        m.gt_index = g;
      }
    }
    if (m.max_iou >= kPositiveIou) {
      m.kind = MatchKind::positive;
    } else if (m.max_iou < kNegativeIou) {
      m.kind = MatchKind::negative;
    }
    labels.push_back(m);
  }
  return labels;
}

RegionPair make_pair(std::span<const RegionProposal> proposals, std::size_t subject, std::size_t object) {
  RegionPair p;
  p.subject = subject;
  p.object = object;
  p.subject_id = proposals[subject].id;
  p.object_id = proposals[object].id;
  p.subject_box = proposals[subject].box;
  p.object_box = proposals[object].box;
  p.union_box = union_box(p.subject_box, p.object_box);
  p.geo = geometric_feature(p.subject_box, p.object_box);
  return p;
}

std::vector<RegionPair> combination_layer(std::span<const RegionProposal> proposals,
                                          std::optional<std::size_t> max_pairs) {
  {
    std::set<int> ids;
    for (const auto& p : proposals) {
      if (!ids.insert(p.id).second) throw ContractError("combination_layer: duplicate proposal id " + std::to_string(p.id));
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> index_pairs;
  const std::size_t b = proposals.size();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (i != j) index_pairs.emplace_back(i, j);
    }
  }
  if (max_pairs && *max_pairs < index_pairs.size()) {
    std::vector<std::size_t> order(index_pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
      const auto& [ai, aj] = index_pairs[a];
      const auto& [ci, cj] = index_pairs[c];
      return proposals[ai].confidence * proposals[aj].confidence > proposals[ci].confidence * proposals[cj].confidence;
    });
    order.resize(*max_pairs);
    std::sort(order.begin(), order.end());
    std::vector<std::pair<std::size_t, std::size_t>> capped;
    for (std::size_t k : order) capped.push_back(index_pairs[k]);
    index_pairs = std::move(capped);
  }
  std::vector<RegionPair> pairs;
  pairs.reserve(index_pairs.size());
  for (const auto& [i, j] : index_pairs) pairs.push_back(make_pair(proposals, i, j));
  return pairs;
}

}  // namespace relcap
