#include "relcap/optim.hpp"

#include "relcap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relcap::ad {

void Adam::ensure_state(const ParameterStore& params) {
  if (m_.size() == params.size()) return;
  if (!m_.empty()) throw ContractError("Adam: parameter set changed between steps");
  for (const auto& p : params) {
    m_.push_back(Tensor::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Tensor::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(ParameterStore& params) {
  ensure_state(params);
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  std::size_t k = 0;
  for (auto& p : params) {
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    ++k;
    m = b1 * m + (1.0 - b1) * p.grad;
    v = b2 * v + (1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() -= config_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
    p.zero_grad();
  }
}

void Adam::restore(std::uint64_t steps, std::vector<Tensor> m, std::vector<Tensor> v) {
  if (m.size() != v.size()) throw ContractError("Adam::restore: moment count mismatch");
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

Tensor glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

namespace {

double evaluate(const LossBuilder& build) {
  Graph g(false);
  return build(g).scalar();
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

std::vector<GradCheckEntry> check(const LossBuilder& build, ParameterStore& params, const GradCheckOptions& opts) {
  if (opts.epsilon <= 0.0) throw ContractError("finite_diff_check: epsilon must be positive");
  const double base1 = evaluate(build);
  const double base2 = evaluate(build);
  if (base1 != base2) throw ContractError("finite_diff_check: loss closure is not deterministic");

  params.zero_grad();
  {
    Graph g;
    Var loss = build(g);
    g.backward(loss);
  }

  Rng rng(opts.seed);
  std::vector<GradCheckEntry> out;
  for (auto& p : params) {
    const auto n = static_cast<std::size_t>(p.value.size());
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.coords_per_param != 0 && opts.coords_per_param < n) {
      // Partial Fisher-Yates to draw a sample without replacement.
      for (std::size_t i = 0; i < opts.coords_per_param; ++i) {
        std::swap(coords[i], coords[i + rng.uniform_index(n - i)]);
      }
      coords.resize(opts.coords_per_param);
    }
    GradCheckEntry e;
    e.name = p.name;
    e.coordinates = coords.size();
    double diff2 = 0.0;
    double a2 = 0.0;
    double n2 = 0.0;
    for (std::size_t c : coords) {
      double& x = p.value.data()[c];
      const double saved = x;
      x = saved + opts.epsilon;
      const double up = evaluate(build);
      x = saved - opts.epsilon;
      const double down = evaluate(build);
      x = saved;
      const double numeric = (up - down) / (2.0 * opts.epsilon);
      const double analytic = p.grad.data()[c];
      e.max_relative_error = std::max(e.max_relative_error, relative_error(analytic, numeric));
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
    e.diff_norm = std::sqrt(diff2);
    e.analytic_norm = std::sqrt(a2);
    e.numeric_norm = std::sqrt(n2);
    out.push_back(e);
  }
  params.zero_grad();
  return out;
}

}  // namespace

GradCheckResult finite_diff_check(const LossBuilder& build, ParameterStore& params, const GradCheckOptions& opts) {
  GradCheckResult result;
  for (const auto& e : check(build, params, opts)) {
    result.coordinates_checked += e.coordinates;
    if (e.max_relative_error >= result.max_relative_error) {
      result.max_relative_error = e.max_relative_error;
      result.worst_parameter = e.name;
    }
  }
  return result;
}

std::vector<GradCheckEntry> finite_diff_by_parameter(const LossBuilder& build, ParameterStore& params,
                                                     const GradCheckOptions& opts) {
  return check(build, params, opts);
}

double vector_relative_error(double diff_norm, double analytic_norm, double numeric_norm) {
  const double denom = analytic_norm + numeric_norm;
  return denom == 0.0 ? 0.0 : diff_norm / denom;
}

}  // namespace relcap::ad
