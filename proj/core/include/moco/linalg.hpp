#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace moco {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Column-stacked per-objective gradients, d rows by M columns. Column m is
/// the gradient of objective m.
using Jacobian = Eigen::MatrixXd;

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

/// A point of the probability simplex: nonnegative weights summing to one.
///
/// Construction validates the invariant (weights >= -1e-12, |sum - 1| <= 1e-10)
/// and throws InvalidInput otherwise. Instances are immutable.
class SimplexWeights {
 public:
  static constexpr double kNonnegSlack = 1e-12;
  static constexpr double kSumSlack = 1e-10;

  explicit SimplexWeights(Vector weights);

  static SimplexWeights uniform(std::size_t m);
  static SimplexWeights vertex(std::size_t m, std::size_t index);

  const Vector& values() const { return weights_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  double operator[](std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }

  static bool satisfies_invariants(const Vector& w);

 private:
  Vector weights_;
};

/// Euclidean projection onto the probability simplex (sort-based, O(M log M)).
/// Inputs already on the simplex up to rounding are returned unchanged, which
/// makes the projection exactly idempotent.
SimplexWeights project_simplex(const Vector& v);

/// Projection onto the closed ball of the given radius around the origin.
Vector project_ball(const Vector& y, double radius);

/// Weighted column sum: sum_m w_m * J.col(m).
Vector matvec(const Jacobian& jacobian, const Vector& weights);

/// Numerically stable softmax; the result is strictly inside the simplex for
/// finite inputs of moderate spread.
Vector softmax(const Vector& v);

}  // namespace moco
