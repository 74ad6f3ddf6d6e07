#pragma once

#include "relcap/autodiff.hpp"

#include <cstdint>
#include <functional>

namespace relcap::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are kept per parameter in store order.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update from the accumulated gradients, then zeroes them.
  void step(ParameterStore& params);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::uint64_t steps() const { return steps_; }

  // Exposed for checkpointing.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void restore(std::uint64_t steps, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  void ensure_state(const ParameterStore& params);

  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Uniform in ±sqrt(6/(fan_in+fan_out)).
Tensor glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

/// Builds a scalar loss on a fresh graph from the current parameter values.
using LossBuilder = std::function<Var(Graph&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t coordinates_checked = 0;
};

/// Compares backward() gradients with central differences. Relative error
/// per coordinate is |a − n| / max(1e-8, |a| + |n|). Throws ContractError if
/// two baseline evaluations of `build` disagree.
GradCheckResult finite_diff_check(const LossBuilder& build, ParameterStore& params, const GradCheckOptions& opts);

struct GradCheckEntry {
  std::string name;
  std::size_t coordinates = 0;
  /// Worst coordinate, same definition as above.
  double max_relative_error = 0.0;
  /// L2 norms over the checked coordinates of (analytic − numeric),
  /// analytic and numeric.
  double diff_norm = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

std::vector<GradCheckEntry> finite_diff_by_parameter(const LossBuilder& build, ParameterStore& params,
                                                     const GradCheckOptions& opts);

/// ‖a − n‖ / (‖a‖ + ‖n‖); 0 when both gradients vanish.
double vector_relative_error(double diff_norm, double analytic_norm, double numeric_norm);

}  // namespace relcap::ad
