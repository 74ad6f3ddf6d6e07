#include "relcap/metrics.hpp"

#include "relcap/errors.hpp"
#include "relcap/porter.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace relcap {

using nlohmann::json;

MeteorResult meteor_detail(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  MeteorResult r;
  if (candidate.empty() || reference.empty()) {
    r.empty_input = true;
    return r;
  }
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> cand_to_ref(candidate.size(), kNone);
  std::vector<bool> ref_used(reference.size(), false);

  auto align = [&](auto&& same) {
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (cand_to_ref[i] != kNone) continue;
      for (std::size_t j = 0; j < reference.size(); ++j) {
        if (!ref_used[j] && same(i, j)) {
          cand_to_ref[i] = j;
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  align([&](std::size_t i, std::size_t j) { return candidate[i] == reference[j]; });
  std::vector<std::string> cand_stems, ref_stems;
  for (const auto& w : candidate) cand_stems.push_back(porter_stem(w));
  for (const auto& w : reference) ref_stems.push_back(porter_stem(w));
  align([&](std::size_t i, std::size_t j) { return cand_stems[i] == ref_stems[j]; });

  std::size_t prev_ref = kNone;
  bool prev_matched = false;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const std::size_t j = cand_to_ref[i];
    if (j == kNone) {
      prev_matched = false;
      continue;
    }
    ++r.matches;
    if (!prev_matched || j != prev_ref + 1) ++r.chunks;
    prev_matched = true;
    prev_ref = j;
  }
  if (r.matches == 0) return r;
  const double m = static_cast<double>(r.matches);
  r.precision = m / static_cast<double>(candidate.size());
  r.recall = m / static_cast<double>(reference.size());
  const double f = 10.0 * r.precision * r.recall / (r.recall + 9.0 * r.precision);
  const double penalty = 0.5 * std::pow(static_cast<double>(r.chunks) / m, 3.0);
  r.score = f * (1.0 - penalty);
  return r;
}

double meteor_lite(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  return meteor_detail(candidate, reference).score;
}

json MetricConfig::to_json() const {
  return {{"meteor_thresholds", meteor_thresholds}, {"iou_thresholds", iou_thresholds},
          {"vrd_iou", vrd_iou},                     {"vrd_meteor", vrd_meteor},
          {"vrd_k", vrd_k},                         {"keep_after_nms", keep_after_nms}};
}

MetricConfig MetricConfig::from_json(const json& j) {
  MetricConfig c;
  try {
    if (j.contains("meteor_thresholds")) c.meteor_thresholds = j.at("meteor_thresholds").get<std::vector<double>>();
    if (j.contains("iou_thresholds")) c.iou_thresholds = j.at("iou_thresholds").get<std::vector<double>>();
    if (j.contains("vrd_iou")) c.vrd_iou = j.at("vrd_iou").get<double>();
    if (j.contains("vrd_meteor")) c.vrd_meteor = j.at("vrd_meteor").get<double>();
    if (j.contains("vrd_k")) c.vrd_k = j.at("vrd_k").get<std::vector<std::size_t>>();
    if (j.contains("keep_after_nms")) c.keep_after_nms = j.at("keep_after_nms").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("metric config: ") + e.what());
  }
  return c;
}

namespace {

struct Candidate {
  std::size_t gt;
  double iou_subject;
  double iou_object;
  double meteor;
};

// Predictions in ranked order with every GT of their image pre-scored, so
// the 30 threshold combinations share one pass of METEOR evaluations.
struct ScoredPredictions {
  std::vector<std::vector<Candidate>> candidates;  ///< ranked
  std::size_t gt_count = 0;
};

std::vector<std::size_t> rank_by_confidence(const std::vector<RelationPrediction>& predictions) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });
  return order;
}

std::map<int, std::vector<std::size_t>> gts_by_image(const std::vector<GroundTruthRelation>& gts) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < gts.size(); ++i) out[gts[i].image_id].push_back(i);
  return out;
}

ScoredPredictions score_predictions(const std::vector<RelationPrediction>& predictions,
                                    const std::vector<GroundTruthRelation>& gts) {
  if (gts.empty()) throw DataError("relational mAP is undefined without ground truth");
  const auto by_image = gts_by_image(gts);
  ScoredPredictions s;
  s.gt_count = gts.size();
  for (std::size_t idx : rank_by_confidence(predictions)) {
    const auto& p = predictions[idx];
    std::vector<Candidate> cands;
    auto it = by_image.find(p.image_id);
    if (it != by_image.end()) {
      for (std::size_t g : it->second) {
        const auto& gt = gts[g];
        cands.push_back({g, iou(p.subject_box, gt.subject_box), iou(p.object_box, gt.object_box),
                         meteor_lite(p.tokens, gt.tokens)});
      }
    }
    s.candidates.push_back(std::move(cands));
  }
  return s;
}

double sweep_ap(const ScoredPredictions& s, double meteor_t, double iou_t) {
  std::vector<bool> used(s.gt_count, false);
  std::size_t tp = 0;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t rank = 0; rank < s.candidates.size(); ++rank) {
    const Candidate* best = nullptr;
    for (const auto& c : s.candidates[rank]) {
      if (used[c.gt] || c.iou_subject < iou_t || c.iou_object < iou_t || c.meteor < meteor_t) continue;
      if (best == nullptr || std::min(c.iou_subject, c.iou_object) > std::min(best->iou_subject, best->iou_object)) {
        best = &c;
      }
    }
    if (best == nullptr) continue;
    used[best->gt] = true;
    ++tp;
    const double recall = static_cast<double>(tp) / static_cast<double>(s.gt_count);
    const double precision = static_cast<double>(tp) / static_cast<double>(rank + 1);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace

double relational_ap(const std::vector<RelationPrediction>& predictions, const std::vector<GroundTruthRelation>& gts,
                     double meteor_threshold, double iou_threshold) {
  return sweep_ap(score_predictions(predictions, gts), meteor_threshold, iou_threshold);
}

double relational_map(const std::vector<RelationPrediction>& predictions,
                      const std::vector<GroundTruthRelation>& gts, const MetricConfig& config) {
  if (config.meteor_thresholds.empty() || config.iou_thresholds.empty()) {
    throw ConfigError("mAP needs at least one METEOR and one IoU threshold");
  }
  const ScoredPredictions s = score_predictions(predictions, gts);
  double total = 0.0;
  for (double mt : config.meteor_thresholds) {
    for (double it : config.iou_thresholds) total += sweep_ap(s, mt, it);
  }
  return 100.0 * total / static_cast<double>(config.meteor_thresholds.size() * config.iou_thresholds.size());
}

double image_level_recall(const std::map<int, CaptionBag>& predictions, const std::map<int, CaptionBag>& gts,
                          const std::vector<double>& meteor_thresholds) {
  if (meteor_thresholds.empty()) throw ConfigError("image-level recall needs at least one threshold");
  double sum = 0.0;
  std::size_t images = 0;
  static const CaptionBag kEmpty;
  for (const auto& [image, truth] : gts) {
    if (truth.empty()) continue;
    auto it = predictions.find(image);
    const CaptionBag& bag = it == predictions.end() ? kEmpty : it->second;
    // Best METEOR of the bag against each GT caption.
    std::vector<double> best(truth.size(), -1.0);
    for (std::size_t g = 0; g < truth.size(); ++g) {
      for (const auto& cand : bag) best[g] = std::max(best[g], meteor_lite(cand, truth[g]));
    }
    double image_sum = 0.0;
    for (double t : meteor_thresholds) {
      const auto covered = std::count_if(best.begin(), best.end(), [&](double b) { return b >= t; });
      image_sum += static_cast<double>(covered) / static_cast<double>(truth.size());
    }
    sum += image_sum / static_cast<double>(meteor_thresholds.size());
    ++images;
  }
  return images == 0 ? 0.0 : sum / static_cast<double>(images);
}

DiversityStats diversity_stats(const std::vector<RelationPrediction>& predictions) {
  DiversityStats d;
  if (predictions.empty()) return d;
  std::map<int, std::set<std::string>> per_image;
  double box_sum = 0.0;
  for (const auto& p : predictions) {
    auto& words = per_image[p.image_id];
    words.insert(p.tokens.begin(), p.tokens.end());
    box_sum += static_cast<double>(std::set<std::string>(p.tokens.begin(), p.tokens.end()).size());
  }
  double img_sum = 0.0;
  for (const auto& [image, words] : per_image) img_sum += static_cast<double>(words.size());
  d.words_per_img = img_sum / static_cast<double>(per_image.size());
  d.words_per_box = box_sum / static_cast<double>(predictions.size());
  return d;
}

double vrd_recall_at_k(const std::vector<RelationPrediction>& predictions,
                       const std::vector<GroundTruthRelation>& gts, std::size_t k, VrdMode mode,
                       const MetricConfig& config) {
  if (k == 0) throw ContractError("vrd_recall_at_k: K must be positive");
  const auto by_image = gts_by_image(gts);
  std::map<int, std::vector<std::size_t>> preds_by_image;
  for (std::size_t idx : rank_by_confidence(predictions)) preds_by_image[predictions[idx].image_id].push_back(idx);

  double sum = 0.0;
  for (const auto& [image, gt_ids] : by_image) {
    std::vector<std::size_t> top;
    if (auto it = preds_by_image.find(image); it != preds_by_image.end()) {
      top.assign(it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(std::min(k, it->second.size())));
    }
    std::size_t covered = 0;
    for (std::size_t g : gt_ids) {
      const auto& gt = gts[g];
      const BoundingBox gt_union = union_box(gt.subject_box, gt.object_box);
      for (std::size_t pi : top) {
        const auto& p = predictions[pi];
        bool boxes_ok = false;
        if (mode == VrdMode::phrase) {
          boxes_ok = iou(union_box(p.subject_box, p.object_box), gt_union) >= config.vrd_iou;
        } else {
          boxes_ok = iou(p.subject_box, gt.subject_box) >= config.vrd_iou &&
                     iou(p.object_box, gt.object_box) >= config.vrd_iou;
        }
        if (boxes_ok && meteor_lite(p.tokens, gt.tokens) >= config.vrd_meteor) {
          ++covered;
          break;
        }
      }
    }
    sum += static_cast<double>(covered) / static_cast<double>(gt_ids.size());
  }
  return by_image.empty() ? 0.0 : sum / static_cast<double>(by_image.size());
}

PosAccuracy pos_accuracy(const std::vector<std::vector<PosTag>>& predicted,
                         const std::vector<std::vector<PosTag>>& truth) {
  if (predicted.size() != truth.size()) throw ContractError("pos_accuracy: sequence counts differ");
  PosAccuracy acc;
  std::size_t correct = 0;
  std::array<std::size_t, kPosClasses> class_correct{};
  for (std::size_t s = 0; s < truth.size(); ++s) {
    if (predicted[s].size() != truth[s].size()) {
      throw ContractError("pos_accuracy: sequence " + std::to_string(s) + " has " +
                          std::to_string(predicted[s].size()) + " predicted tags for " +
                          std::to_string(truth[s].size()) + " tokens");
    }
    for (std::size_t t = 0; t < truth[s].size(); ++t) {
      const auto cls = static_cast<std::size_t>(truth[s][t]);
      ++acc.tokens;
      ++acc.class_tokens[cls];
      if (predicted[s][t] == truth[s][t]) {
        ++correct;
        ++class_correct[cls];
      }
    }
  }
  if (acc.tokens > 0) acc.overall = static_cast<double>(correct) / static_cast<double>(acc.tokens);
  for (std::size_t c = 0; c < kPosClasses; ++c) {
    if (acc.class_tokens[c] > 0) {
      acc.per_class[c] = static_cast<double>(class_correct[c]) / static_cast<double>(acc.class_tokens[c]);
    }
  }
  return acc;
}

double mean_meteor(const std::vector<RelationPrediction>& predictions, const std::vector<GroundTruthRelation>& gts) {
  const auto by_image = gts_by_image(gts);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : predictions) {
    auto it = by_image.find(p.image_id);
    if (it == by_image.end()) continue;
    std::size_t best = it->second.front();
    double best_iou = -1.0;
    for (std::size_t g : it->second) {
      const double m = std::min(iou(p.subject_box, gts[g].subject_box), iou(p.object_box, gts[g].object_box));
      if (m > best_iou) {
        best_iou = m;
        best = g;
      }
    }
    sum += meteor_lite(p.tokens, gts[best].tokens);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

EvalReport evaluate(const std::vector<RelationPrediction>& predictions, const std::vector<GroundTruthRelation>& gts,
                    const MetricConfig& config, bool with_map) {
  EvalReport r;
  std::map<int, CaptionBag> pred_bags, gt_bags;
  for (const auto& g : gts) gt_bags[g.image_id].push_back(g.tokens);
  for (const auto& p : predictions) pred_bags[p.image_id].push_back(p.tokens);
  r.images = gt_bags.size();
  r.predictions = predictions.size();
  r.ground_truth = gts.size();
  if (with_map) r.map_percent = relational_map(predictions, gts, config);
  r.image_level_recall = image_level_recall(pred_bags, gt_bags, config.meteor_thresholds);
  r.mean_meteor = mean_meteor(predictions, gts);
  const DiversityStats d = diversity_stats(predictions);
  r.words_per_img = d.words_per_img;
  r.words_per_box = d.words_per_box;
  for (std::size_t k : config.vrd_k) {
    r.vrd_phrase_recall[k] = vrd_recall_at_k(predictions, gts, k, VrdMode::phrase, config);
    r.vrd_rel_recall[k] = vrd_recall_at_k(predictions, gts, k, VrdMode::relationship, config);
  }
  return r;
}

json EvalReport::to_json() const {
  json j;
  j["map_percent"] = map_percent ? json(*map_percent) : json(nullptr);
  j["image_level_recall"] = image_level_recall;
  j["mean_meteor"] = mean_meteor;
  j["words_per_img"] = words_per_img;
  j["words_per_box"] = words_per_box;
  json phrase = json::object(), rel = json::object();
  for (const auto& [k, v] : vrd_phrase_recall) phrase[std::to_string(k)] = v;
  for (const auto& [k, v] : vrd_rel_recall) rel[std::to_string(k)] = v;
  j["vrd_phrase_recall"] = phrase;
  j["vrd_rel_recall"] = rel;
  if (pos_accuracy) {
    json pa = {{"overall", pos_accuracy->overall}, {"tokens", pos_accuracy->tokens}};
    for (std::size_t c = 0; c < kPosClasses; ++c) {
      pa[std::string(to_string(static_cast<PosTag>(c)))] = pos_accuracy->per_class[c];
    }
    j["pos_accuracy"] = pa;
  } else {
    j["pos_accuracy"] = nullptr;
  }
  j["images"] = images;
  j["predictions"] = predictions;
  j["ground_truth"] = ground_truth;
  return j;
}

std::string EvalReport::to_table() const {
  std::vector<std::pair<std::string, std::string>> rows;
  auto num = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };
  rows.emplace_back("mAP (%)", map_percent ? num(*map_percent) : "n/a");
  rows.emplace_back("Img-Lv. recall", num(image_level_recall));
  rows.emplace_back("METEOR", num(mean_meteor));
  rows.emplace_back("words/img", num(words_per_img));
  rows.emplace_back("words/box", num(words_per_box));
  for (const auto& [k, v] : vrd_phrase_recall) rows.emplace_back("phrase R@" + std::to_string(k), num(v));
  for (const auto& [k, v] : vrd_rel_recall) rows.emplace_back("relationship R@" + std::to_string(k), num(v));
  if (pos_accuracy) {
    rows.emplace_back("POS accuracy", num(pos_accuracy->overall));
    for (std::size_t c = 0; c < kPosClasses; ++c) {
      rows.emplace_back("POS accuracy " + std::string(to_string(static_cast<PosTag>(c))),
                        num(pos_accuracy->per_class[c]));
    }
  }
  rows.emplace_back("images", std::to_string(images));
  rows.emplace_back("predictions", std::to_string(predictions));
  rows.emplace_back("ground truth", std::to_string(ground_truth));
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::ostringstream os;
  for (const auto& [name, value] : rows) os << std::left << std::setw(static_cast<int>(width) + 2) << name << value << '\n';
  return os.str();
}

}  // namespace relcap
