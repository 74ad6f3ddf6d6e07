#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace relcap {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Dense row-major 64-bit tensor. Every tensor in the library is rank 2;
/// vectors are 1×n rows.
using Tensor = MatrixX<double>;

std::string shape_string(const Tensor& t);

/// True when every entry is finite.
template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Seeded, splittable generator. `split` derives an independent stream
/// from the current seed and a stream key without advancing this one.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p);
  Rng split(std::uint64_t key) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// splitmix64 finalizer, exposed for deterministic key derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace relcap
