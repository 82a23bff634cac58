#pragma once

#include <cstddef>
#include <optional>

#include "moco/linalg.hpp"

namespace moco {

/// Result of the simplex-constrained least-norm weight problem
///   min_{lambda in simplex} ||J lambda||^2 + (rho / 2) ||lambda||^2.
struct LambdaSolveReport {
  SimplexWeights weights;
  double objective_value;  ///< ||J w||^2 + (rho/2)||w||^2 at `weights`
  std::size_t iterations;
  bool converged;          ///< projected-gradient residual fell below tol
};

struct LambdaSolveOptions {
  double tol = 1e-8;
  std::size_t max_iters = 100000;
  /// Starting point; uniform weights when empty.
  std::optional<SimplexWeights> warm_start;
};

/// Accelerated projected gradient descent with adaptive restart. Stops when
/// ||w - P(w - grad / L)|| * L <= tol, the simplex projected-gradient residual
/// at the current iterate. Exhausting max_iters yields converged = false.
LambdaSolveReport solve_lambda(const Jacobian& jacobian, double rho,
                               const LambdaSolveOptions& options = {});

/// Closed-form minimiser over [0, 1] of ||c g1 + (1 - c) g2||^2, the weight on
/// g1. Returns 0.5 when g1 == g2.
double solve_lambda_closed_form_2(const Vector& g1, const Vector& g2);

/// One projected step lambda <- P_simplex(lambda - gamma (Y^T Y + rho I) lambda).
SimplexWeights lambda_step_regularized(const SimplexWeights& lambda, const Jacobian& tracking,
                                       double rho, double gamma);

/// Softmax variant of the same step: softmax(lambda - gamma (Y^T Y + rho I) lambda).
SimplexWeights lambda_step_softmax(const SimplexWeights& lambda, const Jacobian& tracking,
                                   double rho, double gamma);

/// The multi-gradient J lambda.
Vector multi_gradient(const Jacobian& jacobian, const SimplexWeights& lambda);

}  // namespace moco
