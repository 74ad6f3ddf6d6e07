#pragma once

// Random network inputs and training examples of a given model's shape.

#include "relcap/caption.hpp"
#include "relcap/model.hpp"

#include <vector>

namespace relcap::synthetic {

inline Tensor uniform(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Tensor t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1, 1);
  return t;
}

/// All ordered pairs over `regions` random boxes.
inline ImageInput image_input(const ModelConfig& cfg, std::size_t regions, Rng& rng) {
  ImageInput in;
  const auto d = static_cast<Eigen::Index>(cfg.input_dim);
  in.regions = uniform(static_cast<Eigen::Index>(regions), d, rng);
  for (std::size_t i = 0; i < regions; ++i) {
    for (std::size_t j = 0; j < regions; ++j) {
      if (i == j) continue;
      in.subject.push_back(i);
      in.object.push_back(j);
    }
  }
  const auto p = static_cast<Eigen::Index>(in.pairs());
  in.union_features = uniform(p, d, rng);
  in.geometry = uniform(p, 6, rng);
  return in;
}

inline TrainingExample example(const ModelConfig& cfg, std::size_t regions, Rng& rng) {
  TrainingExample ex;
  ex.input = image_input(cfg, regions, rng);
  for (std::size_t k = 0; k < ex.input.pairs(); ++k) {
    CaptionTarget t;
    const std::size_t len = 2 + rng.uniform_index(4);
    for (std::size_t i = 0; i < len; ++i) {
      t.tokens.push_back(Vocabulary::kReserved + rng.uniform_index(cfg.vocab_size - Vocabulary::kReserved));
      t.tags.push_back(static_cast<PosTag>(std::min<std::size_t>(2, i * 3 / len)));
    }
    t.tokens.push_back(Vocabulary::kEnd);
    t.tags.push_back(PosTag::obj);
    ex.captions.push_back(t);
  }
  const Eigen::Index n = 6;
  ex.proposal_features = uniform(n, static_cast<Eigen::Index>(cfg.input_dim), rng);
  ex.det_labels = {1, 0, 1, 0, 0, 1};
  ex.det_weights = {0.2, 0.1, 0.2, 0.1, 0.0, 0.4};
  ex.box_targets = uniform(n, 4, rng);
  ex.box_weights = {1.0 / 3, 0, 1.0 / 3, 0, 0, 1.0 / 3};
  return ex;
}

/// Small configuration for gradient and property checks.
inline ModelConfig small_config(const std::string& spec) {
  ModelConfig c = ModelConfig::from_spec(spec);
  c.input_dim = 7;
  c.object_dim = 16;
  c.union_dim = 6;
  c.code_dim = 5;
  c.hidden = 8;
  c.geo_dim = 4;
  c.rem_dim = 6;
  c.vocab_size = 20;
  c.dropout = 0.0;
  return c;
}

}  // namespace relcap::synthetic
