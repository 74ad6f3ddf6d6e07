#include "relcap/autodiff.hpp"

#include "relcap/errors.hpp"

#include <cmath>
#include <limits>

namespace relcap::ad {

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(Tensor::Zero(value.rows(), value.cols())) {}

Parameter& ParameterStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  params_.emplace_back(name, std::move(init));
  return params_.back();
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return params_[it->second];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

double Var::scalar() const {
  const Tensor& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw DimensionError("scalar() on " + shape_string(v));
  return v(0, 0);
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = differentiable_;
  n.param = differentiable_ ? &p : nullptr;
  nodes_.push_back(std::move(n));
  param_nodes_[&p] = nodes_.size() - 1;
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.graph_ != this) throw ContractError("op mixes nodes from different graphs");
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(const Var& loss) {
  if (loss.graph_ != this) throw ContractError("backward: loss belongs to another graph");
  const Tensor& v = nodes_[loss.id_].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("backward requires a scalar loss, got " + shape_string(v));
  }
  if (consumed_) throw ContractError("backward called twice on one graph");
  consumed_ = true;
  if (!nodes_[loss.id_].requires_grad) return;
  nodes_[loss.id_].grad = Tensor::Ones(1, 1);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

void require_same_graph(const Var& a, const Var& b) {
  if (&a.graph() != &b.graph()) throw ContractError("op mixes nodes from different graphs");
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_same_graph(a, b);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(a.value()) + " vs " +
                         shape_string(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  Tensor out = a.value() * b.value();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    if (g.requires_grad(ia)) g.accumulate(ia, go * g.value(ib).transpose());
    if (g.requires_grad(ib)) g.accumulate(ib, g.value(ia).transpose() * go);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_same_graph(a, b);
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ " + shape_string(a.value()) + " vs " +
                         shape_string(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  Tensor out = a.value() * b.value().transpose();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    if (g.requires_grad(ia)) g.accumulate(ia, go * g.value(ib));
    if (g.requires_grad(ib)) g.accumulate(ib, go.transpose() * g.value(ia));
  });
}

Var transpose(const Var& a) {
  const std::size_t ia = a.id();
  Tensor out = a.value().transpose();
  return a.graph().record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    g.accumulate(ia, g.grad(self).transpose());
  });
}

Var add(const Var& a, const Var& b) {
  require_same_graph(a, b);
  require_same_shape("add", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  Tensor out = a.value() + b.value();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, g.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_graph(a, b);
  require_same_shape("sub", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  Tensor out = a.value() - b.value();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, -g.grad(self));
  });
}

Var add_row(const Var& a, const Var& row) {
  require_same_graph(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: bias " + shape_string(row.value()) + " does not fit " +
                         shape_string(a.value()));
  }
  const std::size_t ia = a.id(), ir = row.id();
  Tensor out = a.value().rowwise() + row.value().row(0);
  return a.graph().record(std::move(out), {a, row}, [ia, ir](Graph& g, std::size_t self) {
    g.accumulate(ia, g.grad(self));
    if (g.requires_grad(ir)) g.accumulate(ir, g.grad(self).colwise().sum());
  });
}

Var affine(const Var& x, const Var& w, const Var& bias) {
  require_same_graph(x, w);
  require_same_graph(x, bias);
  if (x.cols() != w.rows()) {
    throw DimensionError("affine: input " + shape_string(x.value()) + " does not match weight " +
                         shape_string(w.value()));
  }
  if (bias.rows() != 1 || bias.cols() != w.cols()) {
    throw DimensionError("affine: bias " + shape_string(bias.value()) + " does not match weight " +
                         shape_string(w.value()));
  }
  const std::size_t ix = x.id(), iw = w.id(), ib = bias.id();
  Tensor out = x.value() * w.value();
  out.rowwise() += bias.value().row(0);
  return x.graph().record(std::move(out), {x, w, bias}, [ix, iw, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    if (g.requires_grad(ix)) g.accumulate(ix, go * g.value(iw).transpose());
    if (g.requires_grad(iw)) g.accumulate(iw, g.value(ix).transpose() * go);
    if (g.requires_grad(ib)) g.accumulate(ib, go.colwise().sum());
  });
}

Var scale(const Var& a, double s) {
  const std::size_t ia = a.id();
  Tensor out = a.value() * s;
  return a.graph().record(std::move(out), {a}, [ia, s](Graph& g, std::size_t self) {
    g.accumulate(ia, g.grad(self) * s);
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_graph(a, b);
  require_same_shape("hadamard", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  Tensor out = a.value().cwiseProduct(b.value());
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    if (g.requires_grad(ia)) g.accumulate(ia, go.cwiseProduct(g.value(ib)));
    if (g.requires_grad(ib)) g.accumulate(ib, go.cwiseProduct(g.value(ia)));
  });
}

Var sum(const Var& a) {
  const std::size_t ia = a.id();
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph().record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Tensor& in = g.value(ia);
    g.accumulate(ia, Tensor::Constant(in.rows(), in.cols(), g.grad(self)(0, 0)));
  });
}

Var activation(const Var& x, Activation kind) {
  const std::size_t ix = x.id();
  const Tensor& in = x.value();
  Tensor out;
  switch (kind) {
    case Activation::relu:
      out = in.cwiseMax(0.0);
      break;
    case Activation::sigmoid:
      out = in.unaryExpr([](double v) {
        // Split by sign so exp never overflows.
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
      break;
    case Activation::tanh:
      out = in.array().tanh().matrix();
      break;
  }
  return x.graph().record(std::move(out), {x}, [ix, kind](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    const Tensor& y = g.value(self);
    switch (kind) {
      case Activation::relu:
        // Derivative at exactly 0 is 0.
        g.accumulate(ix, go.cwiseProduct(g.value(ix).unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; })));
        break;
      case Activation::sigmoid:
        g.accumulate(ix, go.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
        break;
      case Activation::tanh:
        g.accumulate(ix, go.cwiseProduct((1.0 - y.array().square()).matrix()));
        break;
    }
  });
}

Tensor row_softmax_values(const Tensor& x) {
  if (x.cols() < 1) throw DimensionError("row_softmax: zero columns");
  Tensor out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Var row_softmax(const Var& x) {
  const std::size_t ix = x.id();
  Tensor out = row_softmax_values(x.value());
  return x.graph().record(std::move(out), {x}, [ix](Graph& g, std::size_t self) {
    const Tensor& y = g.value(self);
    const Tensor& go = g.grad(self);
    // dx = y ⊙ (go − rowsum(go ⊙ y))
    Eigen::VectorXd dots = go.cwiseProduct(y).rowwise().sum();
    Tensor dx = y.cwiseProduct((go.colwise() - dots));
    g.accumulate(ix, dx);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require_same_graph(parts.front(), p);
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row count " + std::to_string(p.rows()) + " vs " + std::to_string(rows));
    }
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return parts.front().graph().record(std::move(out), parts, [layout](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    for (const auto& [id, off] : layout) {
      if (g.requires_grad(id)) g.accumulate(id, go.middleCols(off, g.value(id).cols()));
    }
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " +
                         shape_string(a.value()));
  }
  const std::size_t ia = a.id();
  Tensor out = a.value().middleCols(start, count);
  return a.graph().record(std::move(out), {a}, [ia, start](Graph& g, std::size_t self) {
    const Tensor& in = g.value(ia);
    Tensor full = Tensor::Zero(in.rows(), in.cols());
    full.middleCols(start, g.grad(self).cols()) = g.grad(self);
    g.accumulate(ia, full);
  });
}

Var gather_rows(const Var& a, std::span<const std::size_t> ids) {
  const Tensor& in = a.value();
  Tensor out(static_cast<Eigen::Index>(ids.size()), in.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= static_cast<std::size_t>(in.rows())) {
      throw IndexError("gather_rows: row " + std::to_string(ids[i]) + " out of " + shape_string(in));
    }
    out.row(static_cast<Eigen::Index>(i)) = in.row(static_cast<Eigen::Index>(ids[i]));
  }
  const std::size_t ia = a.id();
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return a.graph().record(std::move(out), {a}, [ia, idx = std::move(idx)](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    const Tensor& src = g.value(ia);
    Tensor full = Tensor::Zero(src.rows(), src.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      full.row(static_cast<Eigen::Index>(idx[i])) += go.row(static_cast<Eigen::Index>(i));
    }
    g.accumulate(ia, full);
  });
}

Var dropout(const Var& x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return x;
  const double keep = 1.0 - rate;
  Tensor mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return hadamard(x, x.graph().constant(std::move(mask)));
}

Var weighted_cross_entropy(const Var& logits, std::span<const std::size_t> targets,
                           std::span<const double> weights) {
  const Tensor& z = logits.value();
  const auto rows = static_cast<std::size_t>(z.rows());
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets / " +
                         std::to_string(weights.size()) + " weights for " + shape_string(z));
  }
  for (std::size_t t = 0; t < rows; ++t) {
    if (targets[t] >= static_cast<std::size_t>(z.cols())) {
      throw IndexError("cross_entropy: target " + std::to_string(targets[t]) + " >= " + std::to_string(z.cols()));
    }
  }
  Tensor probs = row_softmax_values(z);
  double loss = 0.0;
  for (std::size_t t = 0; t < rows; ++t) {
    if (weights[t] == 0.0) continue;
    const auto r = static_cast<Eigen::Index>(t);
    const double m = z.row(r).maxCoeff();
    const double lse = m + std::log((z.row(r).array() - m).exp().sum());
    loss += weights[t] * (lse - z(r, static_cast<Eigen::Index>(targets[t])));
  }
  Tensor out(1, 1);
  out(0, 0) = loss;
  const std::size_t il = logits.id();
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return logits.graph().record(
      std::move(out), {logits},
      [il, tg = std::move(tg), w = std::move(w), probs = std::move(probs)](Graph& g, std::size_t self) {
        const double go = g.grad(self)(0, 0);
        Tensor d = probs;
        for (std::size_t t = 0; t < tg.size(); ++t) {
          const auto r = static_cast<Eigen::Index>(t);
          d(r, static_cast<Eigen::Index>(tg[t])) -= 1.0;
          d.row(r) *= w[t] * go;
        }
        g.accumulate(il, d);
      });
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> targets, std::span<const int> mask) {
  if (mask.size() != targets.size()) {
    throw DimensionError("cross_entropy: mask length " + std::to_string(mask.size()) + " vs " +
                         std::to_string(targets.size()) + " targets");
  }
  std::size_t active = 0;
  for (int m : mask) active += (m != 0) ? 1 : 0;
  std::vector<double> w(mask.size(), 0.0);
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t] != 0) w[t] = 1.0 / static_cast<double>(active);
  }
  return weighted_cross_entropy(logits, targets, w);
}

Var binary_logistic(const Var& scores, std::span<const int> labels, std::span<const double> weights) {
  const Tensor& s = scores.value();
  const auto n = static_cast<std::size_t>(s.rows());
  if (s.cols() != 1 || labels.size() != n || weights.size() != n) {
    throw DimensionError("binary_logistic: scores " + shape_string(s) + " with " + std::to_string(labels.size()) +
                         " labels");
  }
  double loss = 0.0;
  Tensor d(s.rows(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double z = s(r, 0);
    const double y = labels[i] != 0 ? 1.0 : 0.0;
    // log(1 + exp(z)) − y·z, evaluated stably.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += weights[i] * (softplus - y * z);
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    d(r, 0) = weights[i] * (p - y);
  }
  Tensor out(1, 1);
  out(0, 0) = loss;
  const std::size_t is = scores.id();
  return scores.graph().record(std::move(out), {scores}, [is, d = std::move(d)](Graph& g, std::size_t self) {
    g.accumulate(is, d * g.grad(self)(0, 0));
  });
}

double smooth_l1_value(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw DimensionError("smooth_l1: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - target[k];
    s += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
  }
  return s;
}

Var smooth_l1(const Var& pred, const Tensor& target, std::span<const double> weights) {
  const Tensor& p = pred.value();
  require_same_shape("smooth_l1", p, target);
  if (weights.size() != static_cast<std::size_t>(p.rows())) {
    throw DimensionError("smooth_l1: " + std::to_string(weights.size()) + " weights for " + shape_string(p));
  }
  double loss = 0.0;
  Tensor d(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const double diff = p(i, k) - target(i, k);
      const double a = std::abs(diff);
      loss += w * (a < 1.0 ? 0.5 * diff * diff : a - 0.5);
      d(i, k) = w * (a < 1.0 ? diff : (diff > 0 ? 1.0 : -1.0));
    }
  }
  Tensor out(1, 1);
  out(0, 0) = loss;
  const std::size_t ip = pred.id();
  return pred.graph().record(std::move(out), {pred}, [ip, d = std::move(d)](Graph& g, std::size_t self) {
    g.accumulate(ip, d * g.grad(self)(0, 0));
  });
}

}  // namespace relcap::ad
