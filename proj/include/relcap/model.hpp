#pragma once

// Relational captioning network: region encoders with a shared first FC for
// subject and object, an optional relational embedding module over all
// regions of an image, one or three LSTM streams, a word + POS head, and a
// proposal network (detection score and box refinement) beside them.

#include "relcap/autodiff.hpp"
#include "relcap/caption.hpp"
#include "relcap/geometry.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace relcap {

enum class StreamMode { single, triple };

/// Which region codes feed the decoder.
struct StreamInputs {
  bool subject = false;
  bool object = false;
  bool union_region = false;
  bool coord = false;
  friend bool operator==(const StreamInputs&, const StreamInputs&) = default;
};

struct LossWeights {
  double alpha = 0.1;  ///< POS
  double beta = 0.1;   ///< detection
  double gamma = 0.1;  ///< box regression
};

struct ModelConfig {
  /// Variant name, e.g. "mttsnet"; flags live in the fields below.
  std::string variant = "mttsnet";
  std::size_t input_dim = 22;     ///< D_in
  std::size_t object_dim = 32;    ///< D_o
  std::size_t union_dim = 32;     ///< D_u
  std::size_t code_dim = 32;      ///< D
  std::size_t hidden = 32;        ///< LSTM width, also the word-embedding width
  std::size_t geo_dim = 64;
  std::size_t rem_dim = 32;       ///< inner width of the relational embedding weights
  std::size_t vocab_size = 0;
  std::size_t max_len = 16;
  StreamMode streams = StreamMode::triple;
  StreamInputs inputs{true, true, true, true};
  /// Triple mode with all three streams fed by the union code.
  bool union_streams = false;
  /// The region stage proposes union boxes directly; no subject/object boxes.
  bool direct_union = false;
  bool mtl = true;
  bool rem = false;
  double dropout = 0.5;
  LossWeights loss;

  /// "<variant>[,mtl][,rem]" with variant one of direct-union, union,
  /// union-coord, subj-obj, subj-obj-coord, subj-obj-union,
  /// union-union-union, tsnet, mttsnet (= tsnet,mtl).
  static ModelConfig from_spec(const std::string& spec);
  std::string spec() const;
  bool late_fusion() const { return streams == StreamMode::triple; }
  std::size_t stream_count() const { return streams == StreamMode::triple ? 3 : 1; }
  /// Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Inputs for one image: the regions that attend to each other, and the
/// ordered pairs drawn from them.
struct ImageInput {
  Tensor regions;         ///< B × D_in
  Tensor union_features;  ///< P × D_in, one row per pair
  Tensor geometry;        ///< P × 6
  std::vector<std::size_t> subject;  ///< pair → region row
  std::vector<std::size_t> object;

  std::size_t pairs() const { return subject.size(); }
};

struct RegionCodes {
  ad::Var subject;  ///< P × D
  ad::Var object;
  ad::Var union_region;
  ad::Var coord;
};

struct DecoderState {
  std::vector<ad::Var> h;
  std::vector<ad::Var> c;
};

struct StepOutput {
  ad::Var word_logits;  ///< P × V
  ad::Var pos_logits;   ///< P × 3
};

/// Per-pair caption targets.
struct CaptionTarget {
  std::vector<std::size_t> tokens;  ///< ends with the end token
  std::vector<PosTag> tags;
};

struct TrainingExample {
  ImageInput input;
  std::vector<CaptionTarget> captions;  ///< one per pair
  Tensor proposal_features;             ///< N × D_in for the detection heads
  std::vector<int> det_labels;          ///< 1 foreground, 0 background
  std::vector<double> det_weights;      ///< 0 for ignored proposals
  Tensor box_targets;                   ///< N × 4
  std::vector<double> box_weights;      ///< positives only
};

struct LossReport {
  double caption = 0;
  double pos = 0;
  double det = 0;
  double box = 0;
  double total = 0;
  LossWeights weights;
  bool no_pairs = false;
};

struct LossNodes {
  ad::Var total;
  LossReport report;
};

struct CaptionPrediction {
  std::vector<std::size_t> tokens;  ///< includes the end token when emitted
  std::vector<PosTag> pos;          ///< one per token
  std::vector<double> word_probs;   ///< probability of each chosen token
  double confidence = 1.0;          ///< product of word_probs
  bool ended = false;
  std::size_t pair = 0;

  /// Word ids without the end token.
  std::vector<std::size_t> words() const;
};

enum class DecodeMode { greedy, stochastic };

class MttsNet {
 public:
  MttsNet(ModelConfig config, Rng& init_rng);

  const ModelConfig& config() const { return config_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  /// Relational embedding: R = softmax_row(σ(XW_a)σ(XW_b)ᵀ),
  /// A = R σ(XW_x) W_zᵀ, Z = X + A, σ = ReLU.
  ad::Var rem_forward(ad::Graph& g, const ad::Var& x) const;
  /// Association matrix R alone, for inspection.
  Tensor rem_association(const Tensor& x) const;

  /// `dropout_rng` null selects inference mode.
  RegionCodes encode(ad::Graph& g, const ImageInput& in, Rng* dropout_rng) const;

  /// First-step input of each stream (subject | predicate | object order in
  /// triple mode, the early-fused code in single mode).
  std::vector<ad::Var> stream_inputs(const RegionCodes& codes) const;
  DecoderState initial_state(ad::Graph& g, std::size_t rows) const;
  /// With `prev_words` empty the step consumes the region codes; otherwise
  /// every stream consumes the shared embedding of the previous words.
  StepOutput decode_step(ad::Graph& g, const std::vector<ad::Var>& code_inputs,
                         const std::vector<std::size_t>& prev_words, DecoderState& state) const;

  /// Σ_pairs mean_t CE of words (and POS when mtl is on) under teacher forcing.
  std::pair<ad::Var, ad::Var> caption_losses(ad::Graph& g, const RegionCodes& codes,
                                             const std::vector<CaptionTarget>& targets) const;
  LossNodes total_loss(ad::Graph& g, const TrainingExample& ex, Rng* dropout_rng) const;

  /// Detection logits (N×1) and box offsets (N×4) for proposal features.
  std::pair<Tensor, Tensor> detect(const Tensor& proposal_features) const;

  std::vector<CaptionPrediction> decode(const ImageInput& in, DecodeMode mode, Rng* rng, std::size_t max_len) const;

  /// Per pair, the teacher-forced probability of each word of `tokens`
  /// (no end token appended).
  std::vector<std::vector<double>> word_probabilities(const ImageInput& in,
                                                      const std::vector<std::size_t>& tokens) const;

  /// Per pair, the argmax POS tag at each step while teacher-forcing that
  /// pair's own token sequence.
  std::vector<std::vector<PosTag>> teacher_forced_pos(const ImageInput& in,
                                                      const std::vector<std::vector<std::size_t>>& tokens) const;

  /// T × 3 matrix of hidden-state L2 norms per stream, centered per column.
  Tensor importance_trace(const ImageInput& in, std::size_t pair, const std::vector<std::size_t>& tokens) const;

  /// Parameter names that make up one LSTM stream.
  std::vector<std::string> stream_parameter_names() const;

 private:
  std::pair<ad::Var, ad::Var> lstm_cell(ad::Graph& g, const ad::Var& x, const ad::Var& h, const ad::Var& c,
                                        const std::string& stream, bool code_input) const;
  ad::Var fc(ad::Graph& g, const std::string& name, const ad::Var& x) const;
  const std::vector<std::string>& stream_names() const { return streams_; }

  ModelConfig config_;
  ad::ParameterStore params_;
  std::vector<std::string> streams_;
  std::size_t code_width_ = 0;  ///< width of each stream's first-step input
};

/// One LSTM step: gates [i f o g] = x·W_x + h·W_h + b, i,f,o sigmoid, g tanh,
/// c' = f⊙c + i⊙g, h' = o⊙tanh(c').
std::pair<ad::Var, ad::Var> lstm_step(const ad::Var& x, const ad::Var& h, const ad::Var& c, const ad::Var& w_x,
                                      const ad::Var& w_h, const ad::Var& bias);

/// Geometry rows for a set of pairs.
Tensor geometry_rows(const std::vector<GeometricFeature>& geo);

}  // namespace relcap
