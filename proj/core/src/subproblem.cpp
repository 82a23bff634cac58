#include "moco/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moco/errors.hpp"

namespace moco {

namespace {

void require_finite(const Jacobian& j, const char* where) {
  if (j.cols() < 1) throw InvalidInput(std::string(where) + ": Jacobian needs at least one column");
  if (!j.allFinite()) throw InvalidInput(std::string(where) + ": non-finite Jacobian entry");
}

double objective(const Matrix& gram, double rho, const Vector& w) {
  return w.dot(gram * w) + 0.5 * rho * w.squaredNorm();
}

}  // namespace

LambdaSolveReport solve_lambda(const Jacobian& jacobian, double rho,
                               const LambdaSolveOptions& options) {
  require_finite(jacobian, "solve_lambda");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidInput("solve_lambda: rho must be finite and >= 0");
  if (!(options.tol > 0.0)) throw InvalidInput("solve_lambda: tol must be positive");

  const auto m = jacobian.cols();
  const Matrix gram = jacobian.transpose() * jacobian;
  Vector w = options.warm_start ? options.warm_start->values() : SimplexWeights::uniform(static_cast<std::size_t>(m)).values();
  if (w.size() != m) throw InvalidInput("solve_lambda: warm start has wrong length");

  // Gradient of the objective is 2 G w + rho w; its Lipschitz constant is
  // 2 ||G||_2 + rho.
  const double gram_norm = m == 1 ? gram(0, 0) : Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double lipschitz = 2.0 * std::max(gram_norm, 0.0) + rho;
  if (m == 1 || lipschitz <= 0.0) {
    // Singleton simplex, or J = 0 with rho = 0: every feasible point is optimal.
    SimplexWeights weights(w);
    return {weights, objective(gram, rho, w), 0, true};
  }
  const double step = 1.0 / lipschitz;
  auto gradient = [&](const Vector& v) -> Vector { return 2.0 * (gram * v) + rho * v; };
  auto residual = [&](const Vector& v) {
    const Vector moved = project_simplex(v - step * gradient(v)).values();
    return (v - moved).norm() * lipschitz;
  };

  Vector lookahead = w;
  double momentum = 1.0;
  std::size_t iteration = 0;
  bool converged = residual(w) <= options.tol;
  while (!converged && iteration < options.max_iters) {
    ++iteration;
    Vector next = project_simplex(lookahead - step * gradient(lookahead)).values();
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    // Gradient-based restart keeps the accelerated scheme monotone enough on
    // these tiny, often rank-deficient problems.
    if ((lookahead - next).dot(next - w) > 0.0) {
      lookahead = next;
      momentum = 1.0;
    } else {
      lookahead = next + ((momentum - 1.0) / next_momentum) * (next - w);
      momentum = next_momentum;
    }
    w = std::move(next);
    converged = residual(w) <= options.tol;
  }

  // Re-project to strip rounding drift before wrapping in the strong type.
  SimplexWeights weights = project_simplex(w);
  const double value = objective(gram, rho, weights.values());
  return {weights, std::max(value, 0.0), iteration, converged};
}

double solve_lambda_closed_form_2(const Vector& g1, const Vector& g2) {
  if (g1.size() != g2.size()) throw InvalidInput("solve_lambda_closed_form_2: gradient lengths differ");
  const Vector diff = g1 - g2;
  const double denom = diff.squaredNorm();
  if (denom == 0.0) return 0.5;
  const double raw = (g2 - g1).dot(g2) / denom;
  return std::clamp(raw, 0.0, 1.0);
}

namespace {

Vector raw_lambda_update(const SimplexWeights& lambda, const Jacobian& tracking, double rho, double gamma) {
  if (tracking.cols() != static_cast<Eigen::Index>(lambda.size())) {
    throw InvalidInput("lambda step: tracking matrix has " + std::to_string(tracking.cols()) +
                       " columns, weights have length " + std::to_string(lambda.size()));
  }
  const Vector& w = lambda.values();
  return w - gamma * (tracking.transpose() * (tracking * w) + rho * w);
}

}  // namespace

SimplexWeights lambda_step_regularized(const SimplexWeights& lambda, const Jacobian& tracking,
                                       double rho, double gamma) {
  return project_simplex(raw_lambda_update(lambda, tracking, rho, gamma));
}

SimplexWeights lambda_step_softmax(const SimplexWeights& lambda, const Jacobian& tracking,
                                   double rho, double gamma) {
  return SimplexWeights(softmax(raw_lambda_update(lambda, tracking, rho, gamma)));
}

Vector multi_gradient(const Jacobian& jacobian, const SimplexWeights& lambda) {
  return matvec(jacobian, lambda.values());
}

}  // namespace moco
