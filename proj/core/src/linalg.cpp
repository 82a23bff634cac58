#include "moco/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

SimplexWeights::SimplexWeights(Vector weights) : weights_(std::move(weights)) {
  if (!satisfies_invariants(weights_)) {
    throw InvalidInput("SimplexWeights: vector is not on the probability simplex");
  }
}

bool SimplexWeights::satisfies_invariants(const Vector& w) {
  if (w.size() < 1 || !w.allFinite()) return false;
  if (w.minCoeff() < -kNonnegSlack) return false;
  return std::abs(w.sum() - 1.0) <= kSumSlack;
}

SimplexWeights SimplexWeights::uniform(std::size_t m) {
  if (m == 0) throw InvalidInput("SimplexWeights::uniform: M must be >= 1");
  return SimplexWeights(Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m)));
}

SimplexWeights SimplexWeights::vertex(std::size_t m, std::size_t index) {
  if (index >= m) throw InvalidInput("SimplexWeights::vertex: index out of range");
  Vector w = Vector::Zero(static_cast<Eigen::Index>(m));
  w(static_cast<Eigen::Index>(index)) = 1.0;
  return SimplexWeights(std::move(w));
}

namespace {

// Exact simplex membership up to a few ulps of the sum; such inputs are fixed
// points of the projection.
bool on_simplex_to_rounding(const Vector& v) {
  if (v.minCoeff() < 0.0) return false;
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(v.size());
  return std::abs(v.sum() - 1.0) <= slack;
}

}  // namespace

SimplexWeights project_simplex(const Vector& v) {
  if (v.size() < 1) throw InvalidInput("project_simplex: empty vector");
  if (!v.allFinite()) throw InvalidInput("project_simplex: non-finite input");
  if (on_simplex_to_rounding(v)) return SimplexWeights(v);

  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // Largest rho with sorted[rho] - (cumsum[rho] - 1) / (rho + 1) > 0.
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumsum += sorted[i];
    const double candidate = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }

  Vector w = (v.array() - theta).cwiseMax(0.0).matrix();
  // Renormalise the rounding residue so the sum invariant holds tightly.
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return SimplexWeights(std::move(w));
}

Vector project_ball(const Vector& y, double radius) {
  if (!(radius >= 0.0)) throw InvalidInput("project_ball: radius must be nonnegative");
  const double norm = y.norm();
  if (norm <= radius) return y;
  Vector out = y * (radius / norm);
  // Guard against the rescaled norm landing one ulp above the radius.
  const double out_norm = out.norm();
  if (out_norm > radius) out *= radius / out_norm;
  return out;
}

Vector matvec(const Jacobian& jacobian, const Vector& weights) {
  if (jacobian.cols() != weights.size()) {
    throw InvalidInput("matvec: Jacobian has " + std::to_string(jacobian.cols()) +
                       " columns but weight vector has length " + std::to_string(weights.size()));
  }
  return jacobian * weights;
}

Vector softmax(const Vector& v) {
  if (v.size() < 1) throw InvalidInput("softmax: empty vector");
  const double shift = v.maxCoeff();
  Vector e = (v.array() - shift).exp().matrix();
  return e / e.sum();
}

}  // namespace moco
