#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "moco/linalg.hpp"
#include "moco/problems.hpp"
#include "moco/rng.hpp"

namespace moco {

/// Additive zero-mean Gaussian perturbation of exact gradients. A batch of
/// size b is modelled by its exact distribution: per-entry std sigma / sqrt(b).
struct NoiseModel {
  enum class Kind { None, Gaussian };

  Kind kind = Kind::None;
  double sigma = 0.0;
  std::size_t batch_size = 1;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma, std::size_t batch_size = 1) {
    return {Kind::Gaussian, sigma, batch_size};
  }

  void validate() const;
  double effective_std() const;
  bool active() const { return effective_std() > 0.0; }
};

/// Adds i.i.d. N(0, effective_std^2) noise to every entry of `value`.
Matrix perturb(Matrix value, double stddev, RngStream& rng);
Vector perturb(Vector value, double stddev, RngStream& rng);

/// Unbiased stochastic Jacobian: exact Jacobian plus entrywise noise.
Jacobian sample_jacobian(const Problem& problem, const Vector& x, const NoiseModel& noise, RngStream& rng);

// ---------------------------------------------------------------------------
// Nested-loop hypergradient estimator
// ---------------------------------------------------------------------------

/// Inner-loop step sizes eta_t, t = 1..T.
struct InnerSchedule {
  enum class Kind {
    Constant,      ///< eta_t = eta
    RobbinsMonro,  ///< eta_t = 1 / (mu t)
    TiedToBeta     ///< eta_t = beta_k, the outer tracking step
  };

  Kind kind = Kind::TiedToBeta;
  double eta = 0.5;
  double mu = 1.0;

  double step(std::size_t t, double beta) const;
};

struct HessianInverseSpec {
  enum class Kind { Exact, Neumann };

  Kind kind = Kind::Neumann;
  std::size_t depth = 20;
  /// Neumann scale c; 0 selects 1 / (2 L_zz).
  double scale = 0.0;
};

struct NestedOracleConfig {
  std::size_t inner_steps = 1;
  InnerSchedule inner_schedule;
  HessianInverseSpec hessian_inverse;
  NoiseModel noise;            ///< first-order samples (inner and outer)
  double hessian_sigma = 0.0;  ///< entrywise noise on second-order samples

  void validate() const;
};

/// Warm-started lower-level iterates z_{k,m}, one per objective.
struct InnerState {
  std::vector<Vector> z;

  static InnerState zeros(const BilevelMOO& problem);
  static InnerState at_solution(const BilevelMOO& problem, const Vector& x);
};

/// Independent random streams per role and objective, all derived from one
/// master seed.
class NestedStreams {
 public:
  NestedStreams(std::uint64_t seed, std::size_t objectives);

  RngStream& inner(std::size_t m) { return inner_.at(m); }
  RngStream& upper(std::size_t m) { return upper_.at(m); }
  RngStream& cross(std::size_t m) { return cross_.at(m); }
  RngStream& hessian(std::size_t m) { return hessian_.at(m); }

 private:
  std::vector<RngStream> inner_, upper_, cross_, hessian_;
};

/// One inner SGD step z - eta (grad_z l_m(x, z) + noise).
Vector inner_sgd_step(const BilevelMOO& problem, const Vector& z, const Vector& x, std::size_t m, double eta,
                      const NoiseModel& noise, RngStream& rng);

/// Truncated stochastic Neumann series c * sum_{j<N} prod_{i<=j} (I - c H_i) v,
/// each H_i an independent sample of `hessian` with entrywise noise
/// `hessian_sigma` (symmetrised). Throws NumericDivergence if a partial
/// product exceeds 1e6 ||v||.
Vector neumann_hessian_inverse_apply(const Matrix& hessian, const Vector& v, std::size_t depth, double scale,
                                     double hessian_sigma, RngStream& rng);

Vector neumann_hessian_inverse_apply(const BilevelMOO& problem, const Vector& x, const Vector& z, std::size_t m,
                                     const Vector& v, std::size_t depth, double scale, double hessian_sigma,
                                     RngStream& rng);

struct NestedEstimate {
  Jacobian h;
  InnerState state;
};

/// Runs T warm-started inner steps per objective, then assembles
///   h_m = grad_x f_m - (d2_xz l_m) H_m grad_z f_m
/// from stochastic samples at the final inner iterate. `beta` is the outer
/// tracking step, consulted only by InnerSchedule::TiedToBeta.
NestedEstimate nested_gradient_estimate(const BilevelMOO& problem, const NestedOracleConfig& config,
                                        InnerState state, const Vector& x, double beta, NestedStreams& streams);

/// Noise-free value of the estimator at the current inner iterates, i.e. its
/// mean conditional on z_{k,m}. Used to measure estimator bias.
Jacobian nested_conditional_mean(const BilevelMOO& problem, const NestedOracleConfig& config,
                                 const InnerState& state, const Vector& x);

}  // namespace moco
