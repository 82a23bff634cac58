#include <cmath>

#include "doctest.h"
#include "moco/errors.hpp"
#include "moco/subproblem.hpp"
#include "support/oracles.hpp"

using namespace moco;

namespace {

Jacobian cols2(double a0, double a1, double b0, double b1) {
  Jacobian j(2, 2);
  j << a0, b0, a1, b1;
  return j;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE("subproblem") {
  TEST_CASE("solve_lambda examples") {
    const LambdaSolveReport opposed = solve_lambda(cols2(1, 0, -1, 0), 0.0);
    CHECK(opposed.converged);
    CHECK(opposed.weights[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(opposed.objective_value == doctest::Approx(0.0).epsilon(1e-12));

    const LambdaSolveReport same = solve_lambda(cols2(0.3, -2.0, 0.3, -2.0), 0.1);
    CHECK(same.weights[0] == doctest::Approx(0.5).epsilon(1e-8));

    const Jacobian j = cols2(2, 0, 0, 1);
    const LambdaSolveReport r = solve_lambda(j, 0.0, {1e-10});
    const double grid = oracle::grid_weight_2(j, 0.0, 1000000);
    CHECK(std::abs(r.weights[0] - grid) <= 1e-6);
    CHECK(r.weights[0] == doctest::Approx(0.2).epsilon(1e-8));
    CHECK((multi_gradient(j, r.weights) - vec2(0.4, 0.8)).norm() < 1e-8);
    CHECK(r.objective_value == doctest::Approx(0.8).epsilon(1e-9));
  }

  TEST_CASE("solve_lambda reports non-convergence instead of throwing") {
    RngStream rng(3);
    const Jacobian j = oracle::random_jacobian(rng, 10, 5);
    LambdaSolveOptions options;
    options.tol = 1e-14;
    options.max_iters = 2;
    const LambdaSolveReport r = solve_lambda(j, 0.0, options);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
    CHECK(SimplexWeights::satisfies_invariants(r.weights.values()));
  }

  TEST_CASE("solve_lambda input checks") {
    Jacobian bad = cols2(1, 0, 0, 1);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(solve_lambda(bad, 0.0), InvalidInput);
    CHECK_THROWS_AS(solve_lambda(cols2(1, 0, 0, 1), -1.0), InvalidInput);
    const LambdaSolveReport single = solve_lambda(Jacobian::Ones(3, 1), 0.0);
    CHECK(single.weights[0] == 1.0);
    CHECK(single.objective_value == doctest::Approx(3.0));
  }

  TEST_CASE("closed form for two objectives") {
    CHECK(solve_lambda_closed_form_2(vec2(1, 0), vec2(0, 1)) == doctest::Approx(0.5));
    CHECK(solve_lambda_closed_form_2(vec2(1, 0), vec2(3, 0)) == 1.0);
    CHECK(solve_lambda_closed_form_2(vec2(2, 0), vec2(0, 1)) == doctest::Approx(0.2));
    CHECK(solve_lambda_closed_form_2(vec2(2, 0), vec2(0, 1)) ==
          doctest::Approx(solve_lambda(cols2(2, 0, 0, 1), 0.0, {1e-10}).weights[0]).epsilon(1e-8));
    CHECK(solve_lambda_closed_form_2(vec2(1, 1), vec2(1, 1)) == 0.5);
    CHECK(solve_lambda_closed_form_2(vec2(3, 0), vec2(1, 0)) == 0.0);
  }

  TEST_CASE("lambda_step_regularized examples") {
    const SimplexWeights lambda(vec2(0.3, 0.7));
    CHECK(lambda_step_regularized(lambda, Jacobian::Zero(3, 2), 0.0, 5.0).values() == lambda.values());
    CHECK(lambda_step_regularized(lambda, cols2(1, 2, 3, 4), 0.0, 0.0).values() == lambda.values());
    const SimplexWeights e0 = SimplexWeights::vertex(2, 0);
    const Vector stepped = lambda_step_regularized(e0, cols2(1, 0, 0, 1), 0.0, 1.0).values();
    CHECK((stepped - vec2(0.5, 0.5)).norm() < 1e-15);
    CHECK_THROWS_AS(lambda_step_regularized(e0, Jacobian::Zero(2, 3), 0.0, 1.0), InvalidInput);
  }

  TEST_CASE("lambda_step_softmax examples") {
    const SimplexWeights lambda(vec2(0.3, 0.7));
    CHECK((lambda_step_softmax(lambda, Jacobian::Zero(2, 2), 0.0, 1.0).values() - softmax(lambda.values())).norm() <
          1e-15);
    const SimplexWeights u = SimplexWeights::uniform(3);
    const Vector out = lambda_step_softmax(u, Jacobian::Zero(4, 3), 0.0, 1.0).values();
    CHECK((out - Vector::Constant(3, 1.0 / 3.0)).norm() < 1e-15);
    // raw update (ln 3, 0): rho = 0, Y = 0 and lambda itself must be (ln 3, 0),
    // which is not on the simplex, so go through the softmax directly.
    CHECK((softmax(vec2(std::log(3.0), 0.0)) - vec2(0.75, 0.25)).norm() < 1e-15);
    const Vector strong = lambda_step_softmax(lambda, cols2(10, 0, 0, 0.1), 0.0, 1.0).values();
    CHECK((strong.array() > 0.0).all());
  }

  TEST_CASE("multi_gradient examples") {
    const Jacobian j = cols2(2, 0, 0, 1);
    CHECK(multi_gradient(j, SimplexWeights::vertex(2, 1)) == vec2(0, 1));
    CHECK(multi_gradient(cols2(1, 3, -1, -3), SimplexWeights::uniform(2)).norm() == 0.0);
    CHECK((multi_gradient(j, SimplexWeights(vec2(0.2, 0.8))) - vec2(0.4, 0.8)).norm() < 1e-15);
    CHECK_THROWS_AS(multi_gradient(j, SimplexWeights::uniform(3)), InvalidInput);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("min-norm optimality against vertices and sampled weights") {
    RngStream rng(101);
    for (std::size_t m : {2u, 3u, 5u}) {
      for (std::size_t d : {2u, 10u}) {
        for (int trial = 0; trial < 20; ++trial) {
          const Jacobian j = oracle::random_jacobian(rng, d, m);
          const LambdaSolveReport r = solve_lambda(j, 0.0);
          REQUIRE(r.converged);
          const double best = multi_gradient(j, r.weights).norm();
          for (std::size_t e = 0; e < m; ++e)
            REQUIRE(best <= multi_gradient(j, SimplexWeights::vertex(m, e)).norm() + 1e-8);
          for (int s = 0; s < 1000; ++s) {
            const Vector w = oracle::random_simplex(rng, m);
            REQUIRE(best <= (j * w).norm() + 1e-8);
          }
        }
      }
    }
  }

  TEST_CASE("closed form agrees with the iterative solver") {
    RngStream rng(202);
    for (int i = 0; i < 1000; ++i) {
      const Jacobian j = oracle::random_jacobian(rng, 1 + rng.below(6), 2);
      const double closed = solve_lambda_closed_form_2(j.col(0), j.col(1));
      const double iterative = solve_lambda(j, 0.0, {1e-10}).weights[0];
      REQUIRE(std::abs(closed - iterative) <= 1e-6);
    }
  }

  TEST_CASE("regularisation gap stays within (rho/2)(1 - 1/M)") {
    RngStream rng(303);
    for (double rho : {1e-3, 1e-2, 1e-1}) {
      for (std::size_t m : {2u, 3u, 5u}) {
        for (int i = 0; i < 200; ++i) {
          const Jacobian j = oracle::random_jacobian(rng, 4, m);
          const double plain = solve_lambda(j, 0.0, {1e-12}).objective_value;
          const SimplexWeights reg = solve_lambda(j, rho, {1e-12}).weights;
          const double gap = multi_gradient(j, reg).squaredNorm() - plain;
          REQUIRE(gap >= -1e-9);
          REQUIRE(gap <= 0.5 * rho * (1.0 - 1.0 / static_cast<double>(m)) + 1e-8);
        }
      }
    }
  }

  TEST_CASE("min-norm direction is a descent direction for every combination") {
    RngStream rng(404);
    for (int i = 0; i < 100; ++i) {
      const std::size_t m = 2 + rng.below(4);
      const Jacobian j = oracle::random_jacobian(rng, 3, m);
      const Vector d = multi_gradient(j, solve_lambda(j, 0.0, {1e-12}).weights);
      for (int s = 0; s < 100; ++s) {
        const Vector w = oracle::random_simplex(rng, m);
        REQUIRE(d.dot(j * w) >= d.squaredNorm() - 1e-8);
      }
    }
  }

  TEST_CASE("regularised weights are Lipschitz in the Jacobian") {
    // The objective is rho-strongly convex and its gradient moves by at most
    // 2 (||J|| + ||J'||) ||J - J'||, which bounds the ratio below by 4.
    RngStream rng(505);
    const double rho = 0.1;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Jacobian j = oracle::random_jacobian(rng, 3, 3);
      const Jacobian jp = j + oracle::random_jacobian(rng, 3, 3, std::pow(10.0, -3.0 * rng.uniform()));
      const Vector a = solve_lambda(j, rho, {1e-12}).weights.values();
      const Vector b = solve_lambda(jp, rho, {1e-12}).weights.values();
      double colsum = 0.0;
      for (Eigen::Index c = 0; c < 3; ++c) colsum += std::max(j.col(c).norm(), jp.col(c).norm());
      const double ratio = (a - b).norm() / (colsum / rho * (j - jp).norm());
      worst = std::max(worst, ratio);
    }
    CHECK(worst <= 4.0);
  }
}
