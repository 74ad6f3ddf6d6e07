#pragma once

// Reverse-mode differentiation over dense rank-2 tensors.
//
// A Graph records one forward pass. Every op appends a node holding its
// value and a closure that pushes the node's gradient into its inputs.
// Graph::backward walks nodes in reverse creation order, then flushes leaf
// gradients into the bound Parameters. A graph is single-use.

#include "relcap/tensor.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace relcap::ad {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v);
  void zero_grad() { grad.setZero(); }
};

/// Named parameters in insertion order. Addresses are stable.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

class Graph;

/// Handle to a node of a Graph.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  /// Gradient after backward; zero-sized when the node received none.
  const Tensor& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  /// With `differentiable` false, parameters are bound as constants and no
  /// backward closures are stored (inference passes).
  explicit Graph(bool differentiable = true) : differentiable_(differentiable) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var param(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Loss must be 1×1.
  void backward(const Var& loss);

  bool differentiable() const { return differentiable_; }
  std::size_t size() const { return nodes_.size(); }

  // Op-author interface.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
  bool differentiable_;
  bool consumed_ = false;
};

enum class Activation { relu, sigmoid, tanh };

Var matmul(const Var& a, const Var& b);
/// a · bᵀ
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Adds a 1×n row to every row of a.
Var add_row(const Var& a, const Var& row);
/// x·W + bias, bias broadcast over rows.
Var affine(const Var& x, const Var& w, const Var& bias);
Var scale(const Var& a, double s);
Var hadamard(const Var& a, const Var& b);
/// Sum of all entries, 1×1.
Var sum(const Var& a);
Var activation(const Var& x, Activation kind);
inline Var relu(const Var& x) { return activation(x, Activation::relu); }
inline Var sigmoid(const Var& x) { return activation(x, Activation::sigmoid); }
inline Var tanh(const Var& x) { return activation(x, Activation::tanh); }
Var row_softmax(const Var& x);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
/// Row i of the result is row ids[i] of a.
Var gather_rows(const Var& a, std::span<const std::size_t> ids);
/// Inverted dropout with keep-probability 1-rate; identity when rate is 0.
Var dropout(const Var& x, double rate, Rng& rng);

/// Σ_t weights[t]·(−log softmax(logits)[t, targets[t]]), 1×1.
Var weighted_cross_entropy(const Var& logits, std::span<const std::size_t> targets,
                           std::span<const double> weights);
/// Mean over unmasked rows of −log softmax(logits)[t, targets[t]];
/// zero (with zero gradient) when every row is masked.
Var cross_entropy(const Var& logits, std::span<const std::size_t> targets, std::span<const int> mask);
/// Σ_i weights[i]·logistic loss of score i (N×1) against label i ∈ {0,1}.
Var binary_logistic(const Var& scores, std::span<const int> labels, std::span<const double> weights);
/// Σ_i weights[i]·Σ_k smoothL1(pred[i,k] − target[i,k]).
Var smooth_l1(const Var& pred, const Tensor& target, std::span<const double> weights);

// Value-only helpers shared by inference code.
Tensor row_softmax_values(const Tensor& x);
double smooth_l1_value(std::span<const double> pred, std::span<const double> target);

}  // namespace relcap::ad
