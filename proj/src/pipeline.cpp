#include "relcap/pipeline.hpp"

#include "relcap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace relcap {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;   // "init"
constexpr std::uint64_t kEpochStream = 0x65706f63;  // "epoc"
constexpr std::uint64_t kTrainProposalStream = 0x70726f70;

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Tensor stack_rows(const std::vector<Tensor>& rows, std::size_t width) {
  Tensor t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) t.row(static_cast<Eigen::Index>(i)) = rows[i].row(0);
  return t;
}

std::size_t find_region(const std::vector<BoundingBox>& regions, const BoundingBox& b) {
  auto it = std::find(regions.begin(), regions.end(), b);
  if (it == regions.end()) throw ContractError("relation endpoint is not among the image regions");
  return static_cast<std::size_t>(it - regions.begin());
}

std::vector<std::pair<std::size_t, std::size_t>> relation_pairs(const RelationalRecord& record,
                                                                 const std::vector<BoundingBox>& regions) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& r : record.relations) {
    out.emplace_back(find_region(regions, r.subject.box), find_region(regions, r.object.box));
  }
  return out;
}

void require_scene(const RelationalRecord& record) {
  if (record.scene.empty()) {
    throw DataError("image " + std::to_string(record.image_id) + " has no scene description to extract features from");
  }
}

BoundingBox clip_to_image(const BoundingBox& b, double width, double height) {
  const double x1 = std::clamp(b.left(), 0.0, width - 1.0);
  const double y1 = std::clamp(b.top(), 0.0, height - 1.0);
  const double x2 = std::clamp(b.right(), x1 + 1.0, width);
  const double y2 = std::clamp(b.bottom(), y1 + 1.0, height);
  return BoundingBox::from_corners(x1, y1, x2, y2);
}

}  // namespace

json PipelineConfig::to_json() const {
  return {{"proposals", proposals.to_json()}, {"proposal_seed", proposal_seed},   {"nms_iou", nms_iou},
          {"min_detection", min_detection},   {"keep_after_nms", keep_after_nms}, {"max_pairs", max_pairs},
          {"max_len", max_len},               {"min_confidence", min_confidence}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  try {
    if (j.contains("proposals")) c.proposals = ProposalConfig::from_json(j.at("proposals"));
    read_opt(j, "proposal_seed", c.proposal_seed);
    read_opt(j, "nms_iou", c.nms_iou);
    read_opt(j, "min_detection", c.min_detection);
    read_opt(j, "keep_after_nms", c.keep_after_nms);
    read_opt(j, "max_pairs", c.max_pairs);
    read_opt(j, "max_len", c.max_len);
    read_opt(j, "min_confidence", c.min_confidence);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  return c;
}

json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"seed", seed},
          {"min_count", min_count},
          {"pipeline", pipeline.to_json()}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "learning_rate", c.adam.learning_rate);
    read_opt(j, "beta1", c.adam.beta1);
    read_opt(j, "beta2", c.adam.beta2);
    read_opt(j, "epsilon", c.adam.epsilon);
    read_opt(j, "seed", c.seed);
    read_opt(j, "min_count", c.min_count);
    if (j.contains("pipeline")) c.pipeline = PipelineConfig::from_json(j.at("pipeline"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

std::vector<BoundingBox> ground_truth_regions(const RelationalRecord& record) {
  std::vector<BoundingBox> out;
  for (const auto& r : record.relations) {
    for (const BoundingBox* b : {&r.subject.box, &r.object.box}) {
      if (std::find(out.begin(), out.end(), *b) == out.end()) out.push_back(*b);
    }
  }
  return out;
}

std::vector<GroundTruthRelation> ground_truth_relations(const std::vector<RelationalRecord>& records) {
  std::vector<GroundTruthRelation> out;
  for (const auto& rec : records) {
    for (const auto& r : rec.relations) {
      auto [tokens, tags] = r.caption.tagged_tokens();
      out.push_back({rec.image_id, r.subject.box, r.object.box, std::move(tokens), std::move(tags)});
    }
  }
  return out;
}

ImageInput build_image_input(const RelationalRecord& record, const FeatureProvider& provider,
                             const std::vector<BoundingBox>& regions,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  require_scene(record);
  std::vector<Tensor> region_rows;
  for (const auto& b : regions) region_rows.push_back(provider.features(record.scene, b));
  ImageInput in;
  in.regions = stack_rows(region_rows, provider.width());
  std::vector<Tensor> union_rows;
  std::vector<GeometricFeature> geo;
  for (const auto& [s, o] : pairs) {
    if (s >= regions.size() || o >= regions.size()) throw IndexError("build_image_input: pair index out of range");
    union_rows.push_back(provider.features(record.scene, union_box(regions[s], regions[o])));
    geo.push_back(geometric_feature(regions[s], regions[o]));
    in.subject.push_back(s);
    in.object.push_back(o);
  }
  in.union_features = stack_rows(union_rows, provider.width());
  in.geometry = geometry_rows(geo);
  return in;
}

TrainingSet::TrainingSet(const std::vector<RelationalRecord>& records, const FeatureProvider& provider,
                         const Vocabulary& vocab, const ModelConfig& model, const PipelineConfig& pipeline)
    : provider_(&provider) {
  ProposalConfig pc = pipeline.proposals;
  pc.include_ground_truth = true;
  const Rng base = Rng(pipeline.proposal_seed).split(kTrainProposalStream);
  for (const auto& rec : records) {
    require_scene(rec);
    Image img;
    img.record = &rec;
    const auto regions = ground_truth_regions(rec);
    img.relation_regions = relation_pairs(rec, regions);
    for (const auto& r : rec.relations) {
      EncodedCaption enc = encode_caption(r.caption, vocab, model.max_len);
      img.captions.push_back({std::move(enc.tokens), std::move(enc.tags)});
    }
    // Proposals around every scene object plus the relation endpoints
    // themselves, so each GT region has at least one positive.
    img.proposals = generate_proposals(rec, provider, pc, base.split(static_cast<std::uint64_t>(rec.image_id)));
    for (const auto& b : regions) {
      const bool present = std::any_of(img.proposals.begin(), img.proposals.end(),
                                       [&](const RegionProposal& p) { return p.box == b; });
      if (!present) {
        img.proposals.push_back(
            {b, 1.0, provider.features(rec.scene, b), static_cast<int>(img.proposals.size())});
      }
    }
    std::vector<BoundingBox> boxes;
    std::vector<Tensor> rows;
    for (const auto& p : img.proposals) {
      boxes.push_back(p.box);
      rows.push_back(p.feature);
    }
    img.proposal_features = stack_rows(rows, provider.width());
    const auto labels = match_to_gt(boxes, regions);
    const auto n = boxes.size();
    img.positives.assign(regions.size(), {});
    img.det_labels.assign(n, 0);
    img.det_weights.assign(n, 0.0);
    img.box_weights.assign(n, 0.0);
    img.box_targets = Tensor::Zero(static_cast<Eigen::Index>(n), 4);
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i].kind == MatchKind::positive) {
        img.positives[labels[i].gt_index].push_back(i);
        img.det_labels[i] = 1;
        img.det_weights[i] = 1.0;
        img.box_weights[i] = 1.0;
        const auto d = box_offsets(boxes[i], regions[labels[i].gt_index]);
        for (Eigen::Index k = 0; k < 4; ++k) img.box_targets(static_cast<Eigen::Index>(i), k) = d[static_cast<std::size_t>(k)];
      } else if (labels[i].kind == MatchKind::negative) {
        img.det_weights[i] = 1.0;
      }
    }
    images_.push_back(std::move(img));
  }
}

TrainingExample TrainingSet::draw(std::size_t image, Rng& rng) const {
  const Image& img = images_.at(image);
  const RelationalRecord& rec = *img.record;
  std::vector<std::size_t> chosen;
  for (const auto& pos : img.positives) chosen.push_back(pos[rng.uniform_index(pos.size())]);

  TrainingExample ex;
  std::vector<Tensor> region_rows;
  for (std::size_t c : chosen) region_rows.push_back(img.proposals[c].feature);
  ex.input.regions = stack_rows(region_rows, provider_->width());
  std::vector<Tensor> union_rows;
  std::vector<GeometricFeature> geo;
  for (const auto& [s, o] : img.relation_regions) {
    const BoundingBox& bs = img.proposals[chosen[s]].box;
    const BoundingBox& bo = img.proposals[chosen[o]].box;
    union_rows.push_back(provider_->features(rec.scene, union_box(bs, bo)));
    geo.push_back(geometric_feature(bs, bo));
    ex.input.subject.push_back(s);
    ex.input.object.push_back(o);
  }
  ex.input.union_features = stack_rows(union_rows, provider_->width());
  ex.input.geometry = geometry_rows(geo);
  ex.captions = img.captions;
  ex.proposal_features = img.proposal_features;
  ex.det_labels = img.det_labels;
  ex.det_weights = img.det_weights;
  ex.box_targets = img.box_targets;
  ex.box_weights = img.box_weights;
  return ex;
}

TrainState init_training(const ModelConfig& model, const TrainConfig& config, const Vocabulary& vocab,
                         const FeatureProvider& provider) {
  ModelConfig mc = model;
  mc.vocab_size = vocab.size();
  mc.input_dim = provider.width();
  mc.max_len = config.pipeline.max_len;
  Rng init = Rng(config.seed).split(kInitStream);
  return TrainState{MttsNet(mc, init), vocab, provider, ad::Adam(config.adam), config, 0, {}};
}

EpochRecord train_epoch(TrainState& state, const TrainingSet& set) {
  Rng rng = Rng(state.config.seed).split(kEpochStream + state.epochs_done);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  const bool dropout = state.model.config().dropout > 0.0;
  EpochRecord rec;
  rec.epoch = state.epochs_done + 1;
  rec.mean.weights = state.model.config().loss;
  for (std::size_t idx : order) {
    TrainingExample ex = set.draw(idx, rng);
    ad::Graph g;
    LossNodes loss = state.model.total_loss(g, ex, dropout ? &rng : nullptr);
    if (!std::isfinite(loss.report.total)) {
      throw std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(rec.epoch));
    }
    g.backward(loss.total);
    state.adam.step(state.model.params());
    rec.mean.caption += loss.report.caption;
    rec.mean.pos += loss.report.pos;
    rec.mean.det += loss.report.det;
    rec.mean.box += loss.report.box;
    rec.mean.total += loss.report.total;
  }
  if (set.size() > 0) {
    const double n = static_cast<double>(set.size());
    rec.mean.caption /= n;
    rec.mean.pos /= n;
    rec.mean.det /= n;
    rec.mean.box /= n;
    rec.mean.total /= n;
  }
  ++state.epochs_done;
  state.history.push_back(rec);
  return rec;
}

namespace {

json history_to_json(const std::vector<EpochRecord>& history) {
  json out = json::array();
  for (const auto& e : history) {
    out.push_back({e.epoch, e.mean.caption, e.mean.pos, e.mean.det, e.mean.box, e.mean.total});
  }
  return out;
}

}  // namespace

Checkpoint to_checkpoint(const TrainState& state) {
  Checkpoint ck;
  const auto& adam = state.adam;
  ck.meta = {{"kind", "relcap-model"},
             {"model", state.model.config().to_json()},
             {"vocab", state.vocab.words()},
             {"provider", state.provider.to_json()},
             {"train", state.config.to_json()},
             {"epochs_done", state.epochs_done},
             {"adam_steps", adam.steps()},
             {"history", history_to_json(state.history)}};
  for (const auto& p : state.model.params()) ck.tensors.emplace_back("param/" + p.name, p.value);
  std::size_t k = 0;
  for (const auto& p : state.model.params()) {
    if (k < adam.first_moments().size()) {
      ck.tensors.emplace_back("adam.m/" + p.name, adam.first_moments()[k]);
      ck.tensors.emplace_back("adam.v/" + p.name, adam.second_moments()[k]);
    }
    ++k;
  }
  return ck;
}

TrainState from_checkpoint(const Checkpoint& ck) {
  try {
    if (ck.meta.value("kind", "") != "relcap-model") throw DataError("checkpoint does not hold a model");
    const ModelConfig mc = ModelConfig::from_json(ck.meta.at("model"));
    const TrainConfig tc = TrainConfig::from_json(ck.meta.at("train"));
    Vocabulary vocab(ck.meta.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != mc.vocab_size) throw DataError("checkpoint vocabulary size disagrees with its model config");
    Rng init(0);
    TrainState st{MttsNet(mc, init), std::move(vocab), FeatureProvider::from_json(ck.meta.at("provider")),
                  ad::Adam(tc.adam), tc, ck.meta.at("epochs_done").get<std::size_t>(), {}};
    std::vector<Tensor> m, v;
    for (auto& p : st.model.params()) {
      const Tensor* t = ck.find("param/" + p.name);
      if (t == nullptr) throw DataError("checkpoint lacks parameter '" + p.name + "'");
      if (t->rows() != p.value.rows() || t->cols() != p.value.cols()) {
        throw DataError("checkpoint parameter '" + p.name + "' has shape " + shape_string(*t) + ", expected " +
                        shape_string(p.value));
      }
      p.value = *t;
      const Tensor* tm = ck.find("adam.m/" + p.name);
      const Tensor* tv = ck.find("adam.v/" + p.name);
      if (tm != nullptr && tv != nullptr) {
        m.push_back(*tm);
        v.push_back(*tv);
      }
    }
    const auto steps = ck.meta.at("adam_steps").get<std::uint64_t>();
    if (!m.empty() && m.size() != st.model.params().size()) throw DataError("checkpoint optimizer state incomplete");
    st.adam.restore(steps, std::move(m), std::move(v));
    for (const auto& row : ck.meta.at("history")) {
      EpochRecord e;
      e.epoch = row.at(0).get<std::size_t>();
      e.mean.caption = row.at(1).get<double>();
      e.mean.pos = row.at(2).get<double>();
      e.mean.det = row.at(3).get<double>();
      e.mean.box = row.at(4).get<double>();
      e.mean.total = row.at(5).get<double>();
      e.mean.weights = mc.loss;
      st.history.push_back(e);
    }
    return st;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint metadata: ") + e.what());
  }
}

std::string loss_log_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,L_cap,L_POS,L_det,L_box,total\n";
  for (const auto& e : history) {
    os << e.epoch << ',' << e.mean.caption << ',' << e.mean.pos << ',' << e.mean.det << ',' << e.mean.box << ','
       << e.mean.total << '\n';
  }
  return os.str();
}

ImageRegions propose_regions(const MttsNet& model, const RelationalRecord& record, const FeatureProvider& provider,
                             const PipelineConfig& config) {
  require_scene(record);
  ImageRegions out;
  ProposalConfig pc = config.proposals;
  pc.include_ground_truth = false;
  const auto proposals = generate_proposals(record, provider, pc,
                                            Rng(config.proposal_seed).split(static_cast<std::uint64_t>(record.image_id)));
  if (proposals.empty()) return out;
  std::vector<Tensor> rows;
  for (const auto& p : proposals) rows.push_back(p.feature);
  const auto [logits, offsets] = model.detect(stack_rows(rows, provider.width()));

  std::vector<RegionProposal> detected;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double score = 1.0 / (1.0 + std::exp(-logits(r, 0)));
    if (score < config.min_detection) continue;
    const std::array<double, 4> d{offsets(r, 0), offsets(r, 1), offsets(r, 2), offsets(r, 3)};
    const BoundingBox refined = clip_to_image(apply_offsets(proposals[i].box, d), record.width, record.height);
    if (!refined.valid()) continue;
    detected.push_back({refined, score, provider.features(record.scene, refined), proposals[i].id});
  }
  out.kept = nms(detected, config.nms_iou, config.keep_after_nms);
  out.pairs = combination_layer(
      out.kept, config.max_pairs > 0 ? std::optional<std::size_t>(config.max_pairs) : std::nullopt);

  std::vector<Tensor> region_rows;
  for (const auto& k : out.kept) region_rows.push_back(k.feature);
  out.input.regions = stack_rows(region_rows, provider.width());
  std::vector<Tensor> union_rows;
  std::vector<GeometricFeature> geo;
  for (const auto& p : out.pairs) {
    union_rows.push_back(provider.features(record.scene, p.union_box));
    geo.push_back(p.geo);
    out.input.subject.push_back(p.subject);
    out.input.object.push_back(p.object);
  }
  out.input.union_features = stack_rows(union_rows, provider.width());
  out.input.geometry = geometry_rows(geo);
  return out;
}

std::vector<RelationPrediction> infer_image(const MttsNet& model, const Vocabulary& vocab,
                                            const RelationalRecord& record, const FeatureProvider& provider,
                                            const PipelineConfig& config) {
  const ImageRegions regions = propose_regions(model, record, provider, config);
  if (regions.pairs.empty()) return {};
  const auto& in = regions.input;
  const auto& pairs = regions.pairs;
  const auto& kept = regions.kept;

  const auto captions = model.decode(in, DecodeMode::greedy, nullptr, config.max_len);
  std::vector<RelationPrediction> out;
  for (const auto& c : captions) {
    const RegionPair& pair = pairs[c.pair];
    RelationPrediction p;
    p.image_id = record.image_id;
    p.subject_box = pair.subject_box;
    p.object_box = pair.object_box;
    for (std::size_t t = 0; t < c.tokens.size(); ++t) {
      if (c.ended && t + 1 == c.tokens.size()) break;
      p.tokens.push_back(vocab.word(c.tokens[t]));
      p.pos.push_back(c.pos[t]);
    }
    p.word_probs = c.word_probs;
    p.confidence = kept[pair.subject].confidence * kept[pair.object].confidence * c.confidence;
    if (p.confidence >= config.min_confidence) out.push_back(std::move(p));
  }
  return out;
}

std::vector<RelationPrediction> infer(const MttsNet& model, const Vocabulary& vocab,
                                      const std::vector<RelationalRecord>& records, const FeatureProvider& provider,
                                      const PipelineConfig& config) {
  std::vector<RelationPrediction> out;
  for (const auto& rec : records) {
    auto preds = infer_image(model, vocab, rec, provider, config);
    out.insert(out.end(), std::make_move_iterator(preds.begin()), std::make_move_iterator(preds.end()));
  }
  return out;
}

PosAccuracy teacher_forced_pos_accuracy(const MttsNet& model, const Vocabulary& vocab,
                                        const std::vector<RelationalRecord>& records,
                                        const FeatureProvider& provider) {
  std::vector<std::vector<PosTag>> predicted, truth;
  for (const auto& rec : records) {
    if (rec.relations.empty()) continue;
    const auto regions = ground_truth_regions(rec);
    const ImageInput in = build_image_input(rec, provider, regions, relation_pairs(rec, regions));
    std::vector<std::vector<std::size_t>> tokens;
    for (const auto& r : rec.relations) {
      EncodedCaption enc = encode_caption(r.caption, vocab, model.config().max_len);
      enc.tokens.pop_back();
      enc.tags.pop_back();
      tokens.push_back(std::move(enc.tokens));
      truth.push_back(std::move(enc.tags));
    }
    auto tags = model.teacher_forced_pos(in, tokens);
    predicted.insert(predicted.end(), std::make_move_iterator(tags.begin()), std::make_move_iterator(tags.end()));
  }
  return pos_accuracy(predicted, truth);
}

EvalReport evaluate_model(const MttsNet& model, const Vocabulary& vocab, const std::vector<RelationalRecord>& records,
                          const FeatureProvider& provider, const PipelineConfig& pipeline,
                          const MetricConfig& metrics) {
  const auto preds = infer(model, vocab, records, provider, pipeline);
  const auto gts = ground_truth_relations(records);
  EvalReport report = evaluate(preds, gts, metrics, !model.config().direct_union);
  if (model.config().mtl) report.pos_accuracy = teacher_forced_pos_accuracy(model, vocab, records, provider);
  return report;
}

json prediction_to_json(const RelationPrediction& p) {
  validate_prediction(p);
  json pos = json::array();
  for (PosTag t : p.pos) pos.push_back(std::string(to_string(t)));
  return {{"image_id", p.image_id},
          {"subject_box", box_to_json(p.subject_box)},
          {"object_box", box_to_json(p.object_box)},
          {"caption", join_tokens(p.tokens)},
          {"pos", pos},
          {"word_probs", p.word_probs},
          {"confidence", p.confidence}};
}

void validate_prediction(const RelationPrediction& p) {
  const std::string where = "prediction for image " + std::to_string(p.image_id) + ": ";
  if (!p.subject_box.valid() || !p.object_box.valid()) throw DataError(where + "degenerate box");
  if (p.pos.size() != p.tokens.size()) throw DataError(where + "pos must have one tag per caption word");
  if (p.word_probs.size() != p.tokens.size() && p.word_probs.size() != p.tokens.size() + 1) {
    throw DataError(where + "word_probs must have one entry per word, optionally plus the end token");
  }
  for (double q : p.word_probs) {
    if (!(q >= 0.0 && q <= 1.0)) throw DataError(where + "word probability outside [0, 1]");
  }
  if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) throw DataError(where + "confidence outside [0, 1]");
}

RelationPrediction prediction_from_json(const json& j) {
  RelationPrediction p;
  try {
    p.image_id = j.at("image_id").get<int>();
    p.subject_box = box_from_json(j.at("subject_box"));
    p.object_box = box_from_json(j.at("object_box"));
    std::istringstream words(j.at("caption").get<std::string>());
    for (std::string w; words >> w;) p.tokens.push_back(w);
    for (const auto& t : j.at("pos")) {
      auto tag = parse_pos_tag(t.get<std::string>());
      if (!tag) throw DataError("unknown pos tag '" + t.get<std::string>() + "'");
      p.pos.push_back(*tag);
    }
    p.word_probs = j.at("word_probs").get<std::vector<double>>();
    p.confidence = j.at("confidence").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("prediction: ") + e.what());
  }
  validate_prediction(p);
  return p;
}

std::string dump_predictions(const std::vector<RelationPrediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    out += prediction_to_json(p).dump();
    out += '\n';
  }
  return out;
}

std::vector<RelationPrediction> parse_predictions(std::string_view text) {
  std::vector<RelationPrediction> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(prediction_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace relcap
