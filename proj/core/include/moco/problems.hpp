#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "moco/linalg.hpp"
#include "moco/rng.hpp"

namespace moco {

/// Deterministic multi-objective problem with exact values and Jacobian.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_objectives() const = 0;
  virtual Vector values(const Vector& x) const = 0;
  virtual Jacobian jacobian(const Vector& x) const = 0;
  /// Per-objective bounds on ||grad f_m|| used as default tracking caps.
  virtual Vector gradient_bounds() const = 0;
};

// ---------------------------------------------------------------------------
// Two-objective toy problem on R^2
// ---------------------------------------------------------------------------

/// Which reading of the second quadratic term of r_1 / r_2 to use.
///  - Corrected: 0.1 (-x2 - 8)^2, as in the original toy construction.
///  - Literal:   0.1 (-x1 - 8)^2, the term taken verbatim.
enum class ToyVariant { Corrected, Literal };

inline constexpr double kToyLogFloor = 5e-6;
inline constexpr double kToyDefaultCap = 1e3;

/// f_1 = p1 q1 + p2 r1, f_2 = p1 q2 + p2 r2 with
///   s  = 0.5 (-x1 - 7) - tanh(-x2)
///   q1 = log(max(|s|, 5e-6)) + 6,   q2 = log(max(|s + 2|, 5e-6)) + 6
///   r1 = ((-x1 + 7)^2 + 0.1 (-x2 - 8)^2) / 10 - 20
///   r2 = ((-x1 - 7)^2 + 0.1 (-x2 - 8)^2) / 10 - 20
///   p1 = max(tanh(0.5 x2), 0),       p2 = max(tanh(-0.5 x2), 0)
std::array<double, 2> toy_eval(const Vector& x, ToyVariant variant = ToyVariant::Corrected);

/// Analytic gradient of toy_eval as a 2x2 Jacobian. On the kinks of max(.,.)
/// and |.| the one-sided derivative from the positive side is returned.
Jacobian toy_grad(const Vector& x, ToyVariant variant = ToyVariant::Corrected);

class ToyProblem final : public Problem {
 public:
  explicit ToyProblem(ToyVariant variant = ToyVariant::Corrected) : variant_(variant) {}

  std::string name() const override { return "toy"; }
  std::size_t dim() const override { return 2; }
  std::size_t num_objectives() const override { return 2; }
  Vector values(const Vector& x) const override;
  Jacobian jacobian(const Vector& x) const override { return toy_grad(x, variant_); }
  Vector gradient_bounds() const override { return Vector::Constant(2, kToyDefaultCap); }

  ToyVariant variant() const { return variant_; }

 private:
  ToyVariant variant_;
};

// ---------------------------------------------------------------------------
// Strongly convex quadratic family
// ---------------------------------------------------------------------------

/// Parameters of the random instance generator shared by the quadratic and
/// bilevel families: A_m = Q diag(D) Q^T with Q Haar-orthogonal and
/// D ~ U[mu, L], centres b_m ~ N(0, center_scale^2 I).
struct InstanceSpec {
  std::size_t objectives = 2;
  std::size_t dim = 2;
  double mu = 0.5;
  double lipschitz = 2.0;
  double center_scale = 1.0;
  /// Radius of the region on which gradient bounds are computed.
  double region_radius = 10.0;
  std::uint64_t seed = 0;
};

/// f_m(x) = 0.5 (x - b_m)^T A_m (x - b_m).
class QuadraticMOO final : public Problem {
 public:
  QuadraticMOO(std::vector<Matrix> a, std::vector<Vector> b, double region_radius = 10.0);

  static QuadraticMOO random(const InstanceSpec& spec);

  std::string name() const override { return "quadratic"; }
  std::size_t dim() const override { return static_cast<std::size_t>(b_.front().size()); }
  std::size_t num_objectives() const override { return a_.size(); }
  Vector values(const Vector& x) const override;
  Jacobian jacobian(const Vector& x) const override;
  Vector gradient_bounds() const override;

  const std::vector<Matrix>& matrices() const { return a_; }
  const std::vector<Vector>& centers() const { return b_; }
  double region_radius() const { return region_radius_; }

 private:
  std::vector<Matrix> a_;
  std::vector<Vector> b_;
  double region_radius_;
};

std::pair<Vector, Jacobian> quadratic_eval_grad(const QuadraticMOO& problem, const Vector& x);

// ---------------------------------------------------------------------------
// Nested (bilevel) family with closed-form lower level
// ---------------------------------------------------------------------------

/// Objective m is f_m(x, z_m*(x)) with
///   lower level  l_m(x, z) = 0.5 ||z - A_m x||^2   (1-strongly convex, z* = A_m x)
///   upper level  f_m(x, z) = 0.5 ||z - b_m||^2.
class BilevelMOO final : public Problem {
 public:
  BilevelMOO(std::vector<Matrix> a, std::vector<Vector> b, double region_radius = 10.0);

  static BilevelMOO random(const InstanceSpec& spec);

  std::string name() const override { return "bilevel"; }
  std::size_t dim() const override { return static_cast<std::size_t>(a_.front().cols()); }
  std::size_t num_objectives() const override { return a_.size(); }
  Vector values(const Vector& x) const override;
  Jacobian jacobian(const Vector& x) const override;
  Vector gradient_bounds() const override;

  std::size_t lower_dim(std::size_t m) const { return static_cast<std::size_t>(a_[m].rows()); }
  /// Strong-convexity modulus of l_m in z.
  double lower_modulus(std::size_t) const { return 1.0; }
  /// Lipschitz constant of grad_z l_m in z.
  double lower_smoothness(std::size_t) const { return 1.0; }

  Vector lower_solution(std::size_t m, const Vector& x) const;
  Vector lower_grad_z(std::size_t m, const Vector& x, const Vector& z) const;
  Vector upper_grad_x(std::size_t m, const Vector& x, const Vector& z) const;
  Vector upper_grad_z(std::size_t m, const Vector& x, const Vector& z) const;
  /// Mixed second derivative of l_m as a dim x lower_dim matrix.
  Matrix cross_hessian(std::size_t m, const Vector& x, const Vector& z) const;
  Matrix lower_hessian(std::size_t m, const Vector& x, const Vector& z) const;

  const std::vector<Matrix>& maps() const { return a_; }
  const std::vector<Vector>& targets() const { return b_; }
  double region_radius() const { return region_radius_; }

 private:
  std::vector<Matrix> a_;
  std::vector<Vector> b_;
  double region_radius_;
};

/// Implicit-function hypergradient
///   grad_x f - (d2_xz l) (d2_zz l)^{-1} grad_z f   evaluated at z = z_m*(x)
/// for every objective.
Jacobian bilevel_true_grad(const BilevelMOO& problem, const Vector& x);

// ---------------------------------------------------------------------------

/// Central-difference Jacobian of a vector-valued map: column m holds the
/// partial derivatives of output m.
Jacobian finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h);

/// Haar-distributed orthogonal matrix from the QR factorisation of a Gaussian
/// matrix with the sign of diag(R) folded into Q.
Matrix random_orthogonal(std::size_t n, RngStream& rng);

}  // namespace moco
