#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "moco/linalg.hpp"
#include "moco/problems.hpp"
#include "moco/rng.hpp"

namespace moco {

/// min over the simplex of ||J lambda||^2. Zero exactly at Pareto-stationary points.
double pareto_stationarity(const Jacobian& jacobian);

/// Frobenius norm of Y - J.
double tracking_error(const Jacobian& tracking, const Jacobian& exact);

/// Draws one stochastic direction at the sampler's iterate.
using DirectionSampler = std::function<Vector(RngStream&)>;

/// || mean of n_sets sampled directions - d(x) ||, with d(x) = J(x) lambda*(x)
/// from exact gradients and no regularisation.
double direction_bias(const DirectionSampler& sampler, const Vector& x, std::size_t n_sets, const Problem& problem,
                      RngStream& rng);

/// Average signed relative drop (1/M) sum (-1)^l (A_m - B_m) / B_m, l = 1 when
/// higher is better. Returned as a fraction.
double delta_m(const std::vector<double>& method, const std::vector<double>& baseline,
               const std::vector<bool>& higher_better);

struct RegularizationGap {
  double gap;
  double bound;
};

/// gap = ||J lambda*_rho||^2 - ||J lambda*||^2, bound = (rho / 2)(1 - 1/M).
RegularizationGap regularization_gap(const Jacobian& jacobian, double rho);

struct BiasRow {
  std::size_t k = 0;
  std::uint64_t samples_used = 0;
  double bias = 0.0;
};

struct BiasReport {
  std::string method;
  std::vector<BiasRow> rows;
};

}  // namespace moco
