#include "moco/metrics.hpp"

#include <cmath>

#include "moco/errors.hpp"
#include "moco/subproblem.hpp"

namespace moco {

namespace {

LambdaSolveReport tight(const Jacobian& jacobian, double rho) {
  LambdaSolveOptions options;
  options.tol = 1e-10;
  return solve_lambda(jacobian, rho, options);
}

}  // namespace

double pareto_stationarity(const Jacobian& jacobian) {
  if (jacobian.cols() == 0) return 0.0;
  return multi_gradient(jacobian, tight(jacobian, 0.0).weights).squaredNorm();
}

double tracking_error(const Jacobian& tracking, const Jacobian& exact) {
  if (tracking.rows() != exact.rows() || tracking.cols() != exact.cols())
    throw InvalidInput("tracking_error: shape mismatch");
  return (tracking - exact).norm();
}

double direction_bias(const DirectionSampler& sampler, const Vector& x, std::size_t n_sets, const Problem& problem,
                      RngStream& rng) {
  if (n_sets < 1) throw InvalidInput("direction_bias: n_sets must be >= 1");
  const Jacobian exact = problem.jacobian(x);
  const Vector d = multi_gradient(exact, tight(exact, 0.0).weights);
  Vector mean = Vector::Zero(d.size());
  for (std::size_t i = 0; i < n_sets; ++i) mean += sampler(rng);
  mean /= static_cast<double>(n_sets);
  return (mean - d).norm();
}

double delta_m(const std::vector<double>& method, const std::vector<double>& baseline,
               const std::vector<bool>& higher_better) {
  if (method.size() != baseline.size() || method.size() != higher_better.size())
    throw InvalidInput("delta_m: length mismatch");
  if (method.empty()) throw InvalidInput("delta_m: no tasks");
  double total = 0.0;
  for (std::size_t m = 0; m < method.size(); ++m) {
    if (baseline[m] == 0.0) throw InvalidInput("delta_m: baseline entry " + std::to_string(m + 1) + " is zero");
    const double relative = (method[m] - baseline[m]) / baseline[m];
    total += higher_better[m] ? -relative : relative;
  }
  return total / static_cast<double>(method.size());
}

RegularizationGap regularization_gap(const Jacobian& jacobian, double rho) {
  if (!(rho > 0.0)) throw InvalidInput("regularization_gap: rho must be > 0");
  const auto m = static_cast<double>(jacobian.cols());
  const double bound = 0.5 * rho * (1.0 - 1.0 / m);
  const double regularized = multi_gradient(jacobian, tight(jacobian, rho).weights).squaredNorm();
  const double plain = multi_gradient(jacobian, tight(jacobian, 0.0).weights).squaredNorm();
  return {regularized - plain, bound};
}

}  // namespace moco
