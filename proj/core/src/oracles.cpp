#include "moco/oracles.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "moco/errors.hpp"

namespace moco {

void NoiseModel::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("noise: sigma must be finite and >= 0");
  if (batch_size < 1) throw InvalidInput("noise: batch_size must be >= 1");
}

double NoiseModel::effective_std() const {
  if (kind == Kind::None) return 0.0;
  return sigma / std::sqrt(static_cast<double>(batch_size));
}

Matrix perturb(Matrix value, double stddev, RngStream& rng) {
  if (stddev <= 0.0) return value;
  for (Eigen::Index c = 0; c < value.cols(); ++c)
    for (Eigen::Index r = 0; r < value.rows(); ++r) value(r, c) += stddev * rng.normal();
  return value;
}

Vector perturb(Vector value, double stddev, RngStream& rng) {
  if (stddev <= 0.0) return value;
  for (Eigen::Index i = 0; i < value.size(); ++i) value(i) += stddev * rng.normal();
  return value;
}

Jacobian sample_jacobian(const Problem& problem, const Vector& x, const NoiseModel& noise, RngStream& rng) {
  noise.validate();
  return perturb(problem.jacobian(x), noise.effective_std(), rng);
}

// ---------------------------------------------------------------------------

double InnerSchedule::step(std::size_t t, double beta) const {
  switch (kind) {
    case Kind::Constant:
      return eta;
    case Kind::RobbinsMonro:
      return 1.0 / (mu * static_cast<double>(t));
    case Kind::TiedToBeta:
      return beta;
  }
  return eta;
}

void NestedOracleConfig::validate() const {
  if (inner_steps < 1) throw InvalidInput("nested oracle: inner_steps must be >= 1");
  noise.validate();
  if (!(hessian_sigma >= 0.0)) throw InvalidInput("nested oracle: hessian_sigma must be >= 0");
  if (inner_schedule.kind == InnerSchedule::Kind::Constant && !(inner_schedule.eta > 0.0))
    throw InvalidInput("nested oracle: constant inner step must be positive");
  if (inner_schedule.kind == InnerSchedule::Kind::RobbinsMonro && !(inner_schedule.mu > 0.0))
    throw InvalidInput("nested oracle: Robbins-Monro modulus must be positive");
  if (hessian_inverse.kind == HessianInverseSpec::Kind::Neumann) {
    if (hessian_inverse.depth < 1) throw InvalidInput("nested oracle: Neumann depth must be >= 1");
    if (hessian_inverse.scale < 0.0) throw InvalidInput("nested oracle: Neumann scale must be >= 0");
  }
}

InnerState InnerState::zeros(const BilevelMOO& problem) {
  InnerState s;
  for (std::size_t m = 0; m < problem.num_objectives(); ++m)
    s.z.push_back(Vector::Zero(static_cast<Eigen::Index>(problem.lower_dim(m))));
  return s;
}

InnerState InnerState::at_solution(const BilevelMOO& problem, const Vector& x) {
  InnerState s;
  for (std::size_t m = 0; m < problem.num_objectives(); ++m) s.z.push_back(problem.lower_solution(m, x));
  return s;
}

namespace {
enum Role : std::uint64_t { kInner = 1, kUpper = 2, kCross = 3, kHessian = 4 };
}

NestedStreams::NestedStreams(std::uint64_t seed, std::size_t objectives) {
  const RngStream master(seed);
  for (std::size_t m = 0; m < objectives; ++m) {
    const std::uint64_t base = static_cast<std::uint64_t>(m) << 8;
    inner_.push_back(master.substream(base | kInner));
    upper_.push_back(master.substream(base | kUpper));
    cross_.push_back(master.substream(base | kCross));
    hessian_.push_back(master.substream(base | kHessian));
  }
}

Vector inner_sgd_step(const BilevelMOO& problem, const Vector& z, const Vector& x, std::size_t m, double eta,
                      const NoiseModel& noise, RngStream& rng) {
  if (!(eta > 0.0)) throw InvalidInput("inner_sgd_step: eta must be positive");
  const Vector g = perturb(problem.lower_grad_z(m, x, z), noise.effective_std(), rng);
  return z - eta * g;
}

Vector neumann_hessian_inverse_apply(const Matrix& hessian, const Vector& v, std::size_t depth, double scale,
                                     double hessian_sigma, RngStream& rng) {
  if (hessian.rows() != hessian.cols() || hessian.rows() != v.size())
    throw InvalidInput("neumann_hessian_inverse_apply: dimension mismatch");
  if (depth < 1) throw InvalidInput("neumann_hessian_inverse_apply: depth must be >= 1");
  if (!(scale > 0.0)) throw InvalidInput("neumann_hessian_inverse_apply: scale must be positive");

  const double limit = 1e6 * v.norm();
  Vector term = v;
  Vector sum = v;
  for (std::size_t j = 1; j < depth; ++j) {
    Matrix sample = hessian;
    if (hessian_sigma > 0.0) {
      sample = perturb(std::move(sample), hessian_sigma, rng);
      sample = 0.5 * (sample + sample.transpose()).eval();
    }
    term = term - scale * (sample * term);
    if (!term.allFinite() || term.norm() > limit)
      throw NumericDivergence("Neumann series diverged at depth " + std::to_string(j));
    sum += term;
  }
  return scale * sum;
}

Vector neumann_hessian_inverse_apply(const BilevelMOO& problem, const Vector& x, const Vector& z, std::size_t m,
                                     const Vector& v, std::size_t depth, double scale, double hessian_sigma,
                                     RngStream& rng) {
  return neumann_hessian_inverse_apply(problem.lower_hessian(m, x, z), v, depth, scale, hessian_sigma, rng);
}

namespace {

double neumann_scale(const BilevelMOO& problem, const HessianInverseSpec& spec, std::size_t m) {
  if (spec.scale > 0.0) {
    if (spec.scale > 1.0 / problem.lower_smoothness(m) + 1e-15)
      throw InvalidInput("nested oracle: Neumann scale exceeds 1 / L_zz");
    return spec.scale;
  }
  return 0.5 / problem.lower_smoothness(m);
}

Vector apply_hessian_inverse(const BilevelMOO& problem, const NestedOracleConfig& config, std::size_t m,
                             const Vector& x, const Vector& z, const Vector& v, double hessian_sigma,
                             RngStream* rng) {
  if (config.hessian_inverse.kind == HessianInverseSpec::Kind::Exact)
    return problem.lower_hessian(m, x, z).ldlt().solve(v);
  const double c = neumann_scale(problem, config.hessian_inverse, m);
  if (rng == nullptr) {
    RngStream unused(0);
    return neumann_hessian_inverse_apply(problem, x, z, m, v, config.hessian_inverse.depth, c, 0.0, unused);
  }
  return neumann_hessian_inverse_apply(problem, x, z, m, v, config.hessian_inverse.depth, c, hessian_sigma, *rng);
}

}  // namespace

NestedEstimate nested_gradient_estimate(const BilevelMOO& problem, const NestedOracleConfig& config,
                                        InnerState state, const Vector& x, double beta, NestedStreams& streams) {
  config.validate();
  const std::size_t objectives = problem.num_objectives();
  if (state.z.size() != objectives) throw InvalidInput("nested_gradient_estimate: inner state size mismatch");
  const double stddev = config.noise.effective_std();

  Jacobian h(x.size(), static_cast<Eigen::Index>(objectives));
  for (std::size_t m = 0; m < objectives; ++m) {
    Vector z = std::move(state.z[m]);
    for (std::size_t t = 1; t <= config.inner_steps; ++t) {
      z = inner_sgd_step(problem, z, x, m, config.inner_schedule.step(t, beta), config.noise, streams.inner(m));
    }
    if (!z.allFinite()) throw NumericDivergence("nested_gradient_estimate: inner iterate is not finite");

    const Vector grad_x = perturb(problem.upper_grad_x(m, x, z), stddev, streams.upper(m));
    const Vector grad_z = perturb(problem.upper_grad_z(m, x, z), stddev, streams.upper(m));
    const Matrix cross = perturb(problem.cross_hessian(m, x, z), config.hessian_sigma, streams.cross(m));
    const Vector solved = apply_hessian_inverse(problem, config, m, x, z, grad_z, config.hessian_sigma, &streams.hessian(m));
    h.col(static_cast<Eigen::Index>(m)) = grad_x - cross * solved;
    state.z[m] = std::move(z);
  }
  return {std::move(h), std::move(state)};
}

Jacobian nested_conditional_mean(const BilevelMOO& problem, const NestedOracleConfig& config,
                                 const InnerState& state, const Vector& x) {
  const std::size_t objectives = problem.num_objectives();
  if (state.z.size() != objectives) throw InvalidInput("nested_conditional_mean: inner state size mismatch");
  Jacobian h(x.size(), static_cast<Eigen::Index>(objectives));
  for (std::size_t m = 0; m < objectives; ++m) {
    const Vector& z = state.z[m];
    const Vector solved = apply_hessian_inverse(problem, config, m, x, z, problem.upper_grad_z(m, x, z), 0.0, nullptr);
    h.col(static_cast<Eigen::Index>(m)) = problem.upper_grad_x(m, x, z) - problem.cross_hessian(m, x, z) * solved;
  }
  return h;
}

}  // namespace moco
