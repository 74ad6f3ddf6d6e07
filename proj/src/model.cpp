#include "relcap/model.hpp"

#include "relcap/errors.hpp"
#include "relcap/optim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace relcap {

using ad::Graph;
using ad::Var;
using nlohmann::json;

namespace {

struct VariantRow {
  StreamMode streams;
  StreamInputs inputs;
  bool union_streams;
  bool direct_union;
  bool implies_mtl;
};

const std::map<std::string, VariantRow>& variant_table() {
  static const std::map<std::string, VariantRow> table = {
      {"direct-union", {StreamMode::single, {false, false, true, false}, false, true, false}},
      {"union", {StreamMode::single, {false, false, true, false}, false, false, false}},
      {"union-coord", {StreamMode::single, {false, false, true, true}, false, false, false}},
      {"subj-obj", {StreamMode::single, {true, true, false, false}, false, false, false}},
      {"subj-obj-coord", {StreamMode::single, {true, true, false, true}, false, false, false}},
      {"subj-obj-union", {StreamMode::single, {true, true, true, false}, false, false, false}},
      {"union-union-union", {StreamMode::triple, {false, false, true, false}, true, false, false}},
      {"tsnet", {StreamMode::triple, {true, true, true, true}, false, false, false}},
      {"mttsnet", {StreamMode::triple, {true, true, true, true}, false, false, true}},
  };
  return table;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

ModelConfig ModelConfig::from_spec(const std::string& spec) {
  const auto parts = split(spec, ',');
  if (parts.empty()) throw ConfigError("empty model spec");
  const auto& table = variant_table();
  auto it = table.find(parts[0]);
  if (it == table.end()) throw ConfigError("unknown model variant '" + parts[0] + "'");
  ModelConfig c;
  c.variant = parts[0];
  c.streams = it->second.streams;
  c.inputs = it->second.inputs;
  c.union_streams = it->second.union_streams;
  c.direct_union = it->second.direct_union;
  c.mtl = it->second.implies_mtl;
  c.rem = false;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i] == "mtl") {
      c.mtl = true;
    } else if (parts[i] == "rem") {
      c.rem = true;
    } else {
      throw ConfigError("unknown model flag '" + parts[i] + "' (expected mtl or rem)");
    }
  }
  return c;
}

std::string ModelConfig::spec() const {
  std::string s = variant;
  if (mtl && variant != "mttsnet") s += ",mtl";
  if (rem) s += ",rem";
  return s;
}

void ModelConfig::validate() const {
  if (input_dim == 0 || object_dim == 0 || union_dim == 0 || code_dim == 0 || hidden == 0 || geo_dim == 0 ||
      rem_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (vocab_size <= Vocabulary::kReserved) throw ConfigError("vocabulary must contain at least one word");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must lie in [0, 1)");
  const bool any = inputs.subject || inputs.object || inputs.union_region || inputs.coord;
  if (!any) throw ConfigError("model needs at least one stream input");
  if (inputs.subject != inputs.object) throw ConfigError("subject and object inputs come together");
  if (streams == StreamMode::triple) {
    const bool full = inputs.subject && inputs.union_region;
    const bool unions = union_streams && inputs.union_region && !inputs.subject;
    if (!full && !unions) throw ConfigError("triple streams need subject, object and union codes");
  } else if (union_streams) {
    throw ConfigError("union streams require triple mode");
  }
  if (rem && !inputs.subject) throw ConfigError("rem operates on subject/object region features");
  if (direct_union && (inputs.subject || streams != StreamMode::single)) {
    throw ConfigError("direct-union is a single-stream union-only model");
  }
}

json ModelConfig::to_json() const {
  return {{"variant", variant},
          {"spec", spec()},
          {"input_dim", input_dim},
          {"object_dim", object_dim},
          {"union_dim", union_dim},
          {"code_dim", code_dim},
          {"hidden", hidden},
          {"geo_dim", geo_dim},
          {"rem_dim", rem_dim},
          {"vocab_size", vocab_size},
          {"max_len", max_len},
          {"mtl", mtl},
          {"rem", rem},
          {"dropout", dropout},
          {"alpha", loss.alpha},
          {"beta", loss.beta},
          {"gamma", loss.gamma}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  try {
    ModelConfig c = from_spec(j.at("variant").get<std::string>());
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.object_dim = j.at("object_dim").get<std::size_t>();
    c.union_dim = j.at("union_dim").get<std::size_t>();
    c.code_dim = j.at("code_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.geo_dim = j.at("geo_dim").get<std::size_t>();
    c.rem_dim = j.at("rem_dim").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.mtl = j.at("mtl").get<bool>();
    c.rem = j.at("rem").get<bool>();
    c.dropout = j.at("dropout").get<double>();
    c.loss = {j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("gamma").get<double>()};
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
}

std::vector<std::size_t> CaptionPrediction::words() const {
  std::vector<std::size_t> w = tokens;
  if (ended && !w.empty()) w.pop_back();
  return w;
}

Tensor geometry_rows(const std::vector<GeometricFeature>& geo) {
  Tensor t(static_cast<Eigen::Index>(geo.size()), 6);
  for (std::size_t i = 0; i < geo.size(); ++i) {
    for (std::size_t k = 0; k < 6; ++k) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = geo[i][k];
  }
  return t;
}

std::pair<Var, Var> lstm_step(const Var& x, const Var& h, const Var& c, const Var& w_x, const Var& w_h,
                              const Var& bias) {
  const Eigen::Index hs = h.cols();
  if (w_h.rows() != hs || w_h.cols() != 4 * hs || w_x.cols() != 4 * hs) {
    throw DimensionError("lstm_step: weights " + shape_string(w_x.value()) + " / " + shape_string(w_h.value()) +
                         " do not fit hidden width " + std::to_string(hs));
  }
  Var gates = ad::add(ad::affine(x, w_x, bias), ad::matmul(h, w_h));
  Var sig = ad::sigmoid(ad::slice_cols(gates, 0, 3 * hs));
  Var in_gate = ad::slice_cols(sig, 0, hs);
  Var forget = ad::slice_cols(sig, hs, hs);
  Var out_gate = ad::slice_cols(sig, 2 * hs, hs);
  Var cand = ad::tanh(ad::slice_cols(gates, 3 * hs, hs));
  Var c_next = ad::add(ad::hadamard(forget, c), ad::hadamard(in_gate, cand));
  Var h_next = ad::hadamard(out_gate, ad::tanh(c_next));
  return {h_next, c_next};
}

MttsNet::MttsNet(ModelConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  const auto d_in = static_cast<Eigen::Index>(c.input_dim);
  const auto d_o = static_cast<Eigen::Index>(c.object_dim);
  const auto d_u = static_cast<Eigen::Index>(c.union_dim);
  const auto d = static_cast<Eigen::Index>(c.code_dim);
  const auto h = static_cast<Eigen::Index>(c.hidden);
  const auto geo = static_cast<Eigen::Index>(c.geo_dim);
  const auto v = static_cast<Eigen::Index>(c.vocab_size);

  auto add_fc = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    params_.add(name + ".W", ad::glorot_uniform(in, out, rng));
    params_.add(name + ".b", Tensor::Zero(1, out));
  };

  if (c.inputs.subject) {
    add_fc("enc.fc1", d_in, d_o);
    add_fc("enc.subj", d_o, d);
    add_fc("enc.obj", d_o, d);
  }
  if (c.rem) {
    const auto r = static_cast<Eigen::Index>(c.rem_dim);
    params_.add("rem.Wa", ad::glorot_uniform(d_o, r, rng));
    params_.add("rem.Wb", ad::glorot_uniform(d_o, r, rng));
    params_.add("rem.Wx", ad::glorot_uniform(d_o, r, rng));
    params_.add("rem.Wz", ad::glorot_uniform(d_o, r, rng));
  }
  if (c.inputs.coord) add_fc("enc.geo", 6, geo);
  if (c.inputs.union_region) {
    add_fc("enc.union", d_in, d_u);
    add_fc("enc.union_code", d_u + (c.inputs.coord ? geo : 0), d);
  } else if (c.inputs.coord) {
    add_fc("enc.coord_code", geo, d);
  }

  if (c.streams == StreamMode::triple) {
    streams_ = {"lstm.subj", "lstm.pred", "lstm.obj"};
    code_width_ = c.code_dim;
  } else {
    streams_ = {"lstm.single"};
    std::size_t n = 0;
    n += c.inputs.subject ? 2 : 0;
    n += c.inputs.union_region ? 1 : 0;
    n += (c.inputs.coord && !c.inputs.union_region) ? 1 : 0;
    code_width_ = n * c.code_dim;
  }
  params_.add("embed", ad::glorot_uniform(v, h, rng));
  for (const auto& s : streams_) {
    params_.add(s + ".Wcode", ad::glorot_uniform(static_cast<Eigen::Index>(code_width_), 4 * h, rng));
    params_.add(s + ".Wemb", ad::glorot_uniform(h, 4 * h, rng));
    params_.add(s + ".Wh", ad::glorot_uniform(h, 4 * h, rng));
    Tensor b = Tensor::Zero(1, 4 * h);
    b.middleCols(h, h).setOnes();  // forget gate
    params_.add(s + ".b", std::move(b));
  }
  const auto fused = static_cast<Eigen::Index>(streams_.size()) * h;
  add_fc("head.word", fused, v);
  add_fc("head.pos", fused, static_cast<Eigen::Index>(kPosClasses));
  // The proposal network sits beside the captioner and draws its weights
  // from a separate stream, so every variant starts from the same detector.
  Rng rpn_rng = rng.split(0x72706e);
  auto add_rpn = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    params_.add(name + ".W", ad::glorot_uniform(in, out, rpn_rng));
    params_.add(name + ".b", Tensor::Zero(1, out));
  };
  add_rpn("rpn.fc", d_in, d_o);
  add_rpn("rpn.det", d_o, 1);
  add_rpn("rpn.box", d_o, 4);
}

std::vector<std::string> MttsNet::stream_parameter_names() const {
  std::vector<std::string> out;
  for (const auto& s : streams_) {
    for (const char* suffix : {".Wcode", ".Wemb", ".Wh", ".b"}) out.push_back(s + suffix);
  }
  return out;
}

Var MttsNet::fc(Graph& g, const std::string& name, const Var& x) const {
  auto& store = const_cast<ad::ParameterStore&>(params_);
  return ad::affine(x, g.param(store.at(name + ".W")), g.param(store.at(name + ".b")));
}

Var MttsNet::rem_forward(Graph& g, const Var& x) const {
  auto& store = const_cast<ad::ParameterStore&>(params_);
  Var wa = g.param(store.at("rem.Wa"));
  Var wb = g.param(store.at("rem.Wb"));
  Var wx = g.param(store.at("rem.Wx"));
  Var wz = g.param(store.at("rem.Wz"));
  Var assoc = ad::row_softmax(ad::matmul_nt(ad::relu(ad::matmul(x, wa)), ad::relu(ad::matmul(x, wb))));
  Var relational = ad::matmul_nt(ad::matmul(assoc, ad::relu(ad::matmul(x, wx))), wz);
  return ad::add(x, relational);
}

Tensor MttsNet::rem_association(const Tensor& x) const {
  const Tensor& wa = params_.at("rem.Wa").value;
  const Tensor& wb = params_.at("rem.Wb").value;
  Tensor a = (x * wa).cwiseMax(0.0);
  Tensor b = (x * wb).cwiseMax(0.0);
  return ad::row_softmax_values(a * b.transpose());
}

RegionCodes MttsNet::encode(Graph& g, const ImageInput& in, Rng* dropout_rng) const {
  const auto& c = config_;
  const auto p = static_cast<Eigen::Index>(in.pairs());
  if (in.object.size() != in.subject.size()) throw DimensionError("encode: subject/object index counts differ");
  auto check_width = [&](const Tensor& t, const char* what) {
    if (t.cols() != static_cast<Eigen::Index>(c.input_dim)) {
      throw DimensionError(std::string("encode: ") + what + " " + shape_string(t) + " but model expects width " +
                           std::to_string(c.input_dim));
    }
  };
  auto maybe_dropout = [&](const Var& v) { return dropout_rng != nullptr ? ad::dropout(v, c.dropout, *dropout_rng) : v; };

  RegionCodes codes;
  if (c.inputs.subject) {
    check_width(in.regions, "region features");
    Var x = maybe_dropout(ad::relu(fc(g, "enc.fc1", g.constant(in.regions))));
    if (c.rem) x = rem_forward(g, x);
    codes.subject = fc(g, "enc.subj", ad::gather_rows(x, in.subject));
    codes.object = fc(g, "enc.obj", ad::gather_rows(x, in.object));
  }
  Var geo;
  if (c.inputs.coord) {
    if (in.geometry.rows() != p || in.geometry.cols() != 6) {
      throw DimensionError("encode: geometry " + shape_string(in.geometry) + " for " + std::to_string(p) + " pairs");
    }
    geo = ad::relu(fc(g, "enc.geo", g.constant(in.geometry)));
  }
  if (c.inputs.union_region) {
    check_width(in.union_features, "union features");
    if (in.union_features.rows() != p) throw DimensionError("encode: one union feature row per pair required");
    Var u = maybe_dropout(ad::relu(fc(g, "enc.union", g.constant(in.union_features))));
    codes.union_region = fc(g, "enc.union_code", c.inputs.coord ? ad::concat_cols({u, geo}) : u);
  } else if (c.inputs.coord) {
    codes.coord = fc(g, "enc.coord_code", geo);
  }
  return codes;
}

std::vector<Var> MttsNet::stream_inputs(const RegionCodes& codes) const {
  const auto& c = config_;
  if (c.streams == StreamMode::triple) {
    if (c.union_streams) return {codes.union_region, codes.union_region, codes.union_region};
    return {codes.subject, codes.union_region, codes.object};
  }
  std::vector<Var> parts;
  if (c.inputs.subject) {
    parts.push_back(codes.subject);
    parts.push_back(codes.object);
  }
  if (codes.union_region.valid()) parts.push_back(codes.union_region);
  if (codes.coord.valid()) parts.push_back(codes.coord);
  if (parts.size() == 1) return parts;
  return {ad::concat_cols(parts)};
}

DecoderState MttsNet::initial_state(Graph& g, std::size_t rows) const {
  DecoderState s;
  const Tensor zero = Tensor::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(config_.hidden));
  for (std::size_t k = 0; k < streams_.size(); ++k) {
    s.h.push_back(g.constant(zero));
    s.c.push_back(g.constant(zero));
  }
  return s;
}

std::pair<Var, Var> MttsNet::lstm_cell(Graph& g, const Var& x, const Var& h, const Var& c, const std::string& stream,
                                       bool code_input) const {
  auto& store = const_cast<ad::ParameterStore&>(params_);
  return lstm_step(x, h, c, g.param(store.at(stream + (code_input ? ".Wcode" : ".Wemb"))),
                   g.param(store.at(stream + ".Wh")), g.param(store.at(stream + ".b")));
}

StepOutput MttsNet::decode_step(Graph& g, const std::vector<Var>& code_inputs,
                                const std::vector<std::size_t>& prev_words, DecoderState& state) const {
  const bool first = prev_words.empty();
  Var emb;
  if (!first) {
    for (std::size_t w : prev_words) {
      if (w >= config_.vocab_size) {
        throw IndexError("decode_step: word id " + std::to_string(w) + " >= vocabulary size " +
                         std::to_string(config_.vocab_size));
      }
    }
    emb = ad::gather_rows(g.param(const_cast<ad::ParameterStore&>(params_).at("embed")), prev_words);
  } else if (code_inputs.size() != streams_.size()) {
    throw ContractError("decode_step: expected one code input per stream");
  }
  for (std::size_t k = 0; k < streams_.size(); ++k) {
    auto [h, c] = lstm_cell(g, first ? code_inputs[k] : emb, state.h[k], state.c[k], streams_[k], first);
    state.h[k] = h;
    state.c[k] = c;
  }
  Var fused = streams_.size() == 1 ? state.h[0] : ad::concat_cols(state.h);
  return {fc(g, "head.word", fused), fc(g, "head.pos", fused)};
}

std::pair<Var, Var> MttsNet::caption_losses(Graph& g, const RegionCodes& codes,
                                            const std::vector<CaptionTarget>& targets) const {
  const std::size_t p = targets.size();
  std::size_t t_max = 0;
  for (const auto& t : targets) {
    if (t.tokens.empty()) throw ContractError("caption target is empty");
    if (t.tags.size() != t.tokens.size()) throw ContractError("caption target tags misaligned");
    t_max = std::max(t_max, t.tokens.size());
  }
  Var cap = g.constant(Tensor::Zero(1, 1));
  Var pos = g.constant(Tensor::Zero(1, 1));
  if (p == 0) return {cap, pos};

  const std::vector<Var> inputs = stream_inputs(codes);
  DecoderState state = initial_state(g, p);
  std::vector<std::size_t> prev;
  std::vector<std::size_t> word_t(p), tag_t(p);
  std::vector<double> weight_t(p);
  for (std::size_t t = 0; t < t_max; ++t) {
    if (t > 0) {
      prev.assign(p, Vocabulary::kPad);
      for (std::size_t i = 0; i < p; ++i) {
        if (t - 1 < targets[i].tokens.size()) prev[i] = targets[i].tokens[t - 1];
      }
    }
    StepOutput out = decode_step(g, inputs, prev, state);
    for (std::size_t i = 0; i < p; ++i) {
      const auto& tg = targets[i];
      const bool active = t < tg.tokens.size();
      word_t[i] = active ? tg.tokens[t] : 0;
      tag_t[i] = active ? static_cast<std::size_t>(tg.tags[t]) : 0;
      weight_t[i] = active ? 1.0 / static_cast<double>(tg.tokens.size()) : 0.0;
    }
    cap = ad::add(cap, ad::weighted_cross_entropy(out.word_logits, word_t, weight_t));
    if (config_.mtl) pos = ad::add(pos, ad::weighted_cross_entropy(out.pos_logits, tag_t, weight_t));
  }
  return {cap, pos};
}

LossNodes MttsNet::total_loss(Graph& g, const TrainingExample& ex, Rng* dropout_rng) const {
  const auto& w = config_.loss;
  if (ex.captions.size() != ex.input.pairs()) throw ContractError("total_loss: one caption per pair required");
  LossNodes out;
  out.report.weights = w;
  out.report.no_pairs = ex.input.pairs() == 0;

  Var cap = g.constant(Tensor::Zero(1, 1));
  Var pos = g.constant(Tensor::Zero(1, 1));
  if (!out.report.no_pairs) {
    RegionCodes codes = encode(g, ex.input, dropout_rng);
    std::tie(cap, pos) = caption_losses(g, codes, ex.captions);
  }

  Var det = g.constant(Tensor::Zero(1, 1));
  Var box = g.constant(Tensor::Zero(1, 1));
  const auto n = static_cast<std::size_t>(ex.proposal_features.rows());
  if (n > 0) {
    if (ex.det_labels.size() != n || ex.det_weights.size() != n || ex.box_weights.size() != n ||
        ex.box_targets.rows() != static_cast<Eigen::Index>(n)) {
      throw ContractError("total_loss: detection targets misaligned with proposals");
    }
    Var feats = ad::relu(fc(g, "rpn.fc", g.constant(ex.proposal_features)));
    double det_total = 0, box_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      det_total += ex.det_weights[i];
      box_total += ex.box_weights[i];
    }
    if (det_total > 0) {
      std::vector<double> dw(n);
      for (std::size_t i = 0; i < n; ++i) dw[i] = ex.det_weights[i] / det_total;
      det = ad::binary_logistic(fc(g, "rpn.det", feats), ex.det_labels, dw);
    }
    if (box_total > 0) {
      std::vector<double> bw(n);
      for (std::size_t i = 0; i < n; ++i) bw[i] = ex.box_weights[i] / box_total;
      box = ad::smooth_l1(fc(g, "rpn.box", feats), ex.box_targets, bw);
    }
  }
  out.total = ad::add(ad::add(cap, ad::scale(pos, w.alpha)), ad::add(ad::scale(det, w.beta), ad::scale(box, w.gamma)));
  out.report.caption = cap.scalar();
  out.report.pos = pos.scalar();
  out.report.det = det.scalar();
  out.report.box = box.scalar();
  out.report.total = out.total.scalar();
  return out;
}

std::pair<Tensor, Tensor> MttsNet::detect(const Tensor& proposal_features) const {
  Graph g(false);
  Var feats = ad::relu(fc(g, "rpn.fc", g.constant(proposal_features)));
  Tensor scores = fc(g, "rpn.det", feats).value();
  Tensor offsets = fc(g, "rpn.box", feats).value();
  return {std::move(scores), std::move(offsets)};
}

std::vector<CaptionPrediction> MttsNet::decode(const ImageInput& in, DecodeMode mode, Rng* rng,
                                               std::size_t max_len) const {
  const std::size_t p = in.pairs();
  std::vector<CaptionPrediction> preds(p);
  for (std::size_t i = 0; i < p; ++i) preds[i].pair = i;
  if (p == 0 || max_len == 0) return preds;
  if (mode == DecodeMode::stochastic && rng == nullptr) throw ContractError("stochastic decoding needs a generator");

  Graph g(false);
  RegionCodes codes = encode(g, in, nullptr);
  const std::vector<Var> inputs = stream_inputs(codes);
  DecoderState state = initial_state(g, p);
  std::vector<bool> alive(p, true);
  std::vector<std::size_t> prev;
  for (std::size_t t = 0; t < max_len; ++t) {
    StepOutput out = decode_step(g, inputs, prev, state);
    const Tensor probs = ad::row_softmax_values(out.word_logits.value());
    const Tensor& pos = out.pos_logits.value();
    prev.assign(p, Vocabulary::kEnd);
    bool any = false;
    for (std::size_t i = 0; i < p; ++i) {
      if (!alive[i]) continue;
      const auto r = static_cast<Eigen::Index>(i);
      std::size_t choice = 0;
      if (mode == DecodeMode::greedy) {
        for (Eigen::Index k = 1; k < probs.cols(); ++k) {
          if (probs(r, k) > probs(r, static_cast<Eigen::Index>(choice))) choice = static_cast<std::size_t>(k);
        }
      } else {
        const double u = rng->uniform();
        double acc = 0.0;
        choice = static_cast<std::size_t>(probs.cols() - 1);
        for (Eigen::Index k = 0; k < probs.cols(); ++k) {
          acc += probs(r, k);
          if (u < acc) {
            choice = static_cast<std::size_t>(k);
            break;
          }
        }
      }
      std::size_t tag = 0;
      for (Eigen::Index k = 1; k < pos.cols(); ++k) {
        if (pos(r, k) > pos(r, static_cast<Eigen::Index>(tag))) tag = static_cast<std::size_t>(k);
      }
      auto& pr = preds[i];
      pr.tokens.push_back(choice);
      pr.pos.push_back(static_cast<PosTag>(tag));
      pr.word_probs.push_back(probs(r, static_cast<Eigen::Index>(choice)));
      prev[i] = choice;
      if (choice == Vocabulary::kEnd) {
        pr.ended = true;
        alive[i] = false;
      } else {
        any = true;
      }
    }
    if (!any) break;
  }
  for (auto& pr : preds) {
    pr.confidence = 1.0;
    for (double q : pr.word_probs) pr.confidence *= q;
  }
  return preds;
}

std::vector<std::vector<double>> MttsNet::word_probabilities(const ImageInput& in,
                                                             const std::vector<std::size_t>& tokens) const {
  const std::size_t p = in.pairs();
  std::vector<std::vector<double>> out(p);
  if (p == 0 || tokens.empty()) return out;
  Graph g(false);
  RegionCodes codes = encode(g, in, nullptr);
  const std::vector<Var> inputs = stream_inputs(codes);
  DecoderState state = initial_state(g, p);
  std::vector<std::size_t> prev;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (t > 0) prev.assign(p, tokens[t - 1]);
    StepOutput step = decode_step(g, inputs, prev, state);
    if (tokens[t] >= config_.vocab_size) throw IndexError("word_probabilities: token out of vocabulary");
    const Tensor probs = ad::row_softmax_values(step.word_logits.value());
    for (std::size_t i = 0; i < p; ++i) {
      out[i].push_back(probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(tokens[t])));
    }
  }
  return out;
}

std::vector<std::vector<PosTag>> MttsNet::teacher_forced_pos(
    const ImageInput& in, const std::vector<std::vector<std::size_t>>& tokens) const {
  const std::size_t p = in.pairs();
  if (tokens.size() != p) throw ContractError("teacher_forced_pos: one token sequence per pair required");
  std::vector<std::vector<PosTag>> out(p);
  std::size_t t_max = 0;
  for (const auto& t : tokens) t_max = std::max(t_max, t.size());
  if (p == 0 || t_max == 0) return out;
  Graph g(false);
  RegionCodes codes = encode(g, in, nullptr);
  const std::vector<Var> inputs = stream_inputs(codes);
  DecoderState state = initial_state(g, p);
  std::vector<std::size_t> prev;
  for (std::size_t t = 0; t < t_max; ++t) {
    if (t > 0) {
      prev.assign(p, Vocabulary::kPad);
      for (std::size_t i = 0; i < p; ++i) {
        if (t - 1 < tokens[i].size()) prev[i] = tokens[i][t - 1];
      }
    }
    StepOutput step = decode_step(g, inputs, prev, state);
    const Tensor& logits = step.pos_logits.value();
    for (std::size_t i = 0; i < p; ++i) {
      if (t >= tokens[i].size()) continue;
      Eigen::Index best = 0;
      logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
      out[i].push_back(static_cast<PosTag>(best));
    }
  }
  return out;
}

Tensor MttsNet::importance_trace(const ImageInput& in, std::size_t pair, const std::vector<std::size_t>& tokens) const {
  if (config_.streams != StreamMode::triple) throw ContractError("importance_trace requires triple streams");
  if (pair >= in.pairs()) throw IndexError("importance_trace: pair index out of range");
  if (tokens.empty()) throw ContractError("importance_trace: empty caption");
  Graph g(false);
  RegionCodes codes = encode(g, in, nullptr);
  const std::vector<Var> inputs = stream_inputs(codes);
  DecoderState state = initial_state(g, in.pairs());
  const auto r = static_cast<Eigen::Index>(pair);
  Tensor trace(static_cast<Eigen::Index>(tokens.size()), 3);
  std::vector<std::size_t> prev;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (t > 0) prev.assign(in.pairs(), tokens[t - 1]);
    decode_step(g, inputs, prev, state);
    for (Eigen::Index k = 0; k < 3; ++k) trace(static_cast<Eigen::Index>(t), k) = state.h[k].value().row(r).norm();
  }
  trace.rowwise() -= trace.colwise().mean();
  return trace;
}

}  // namespace relcap
