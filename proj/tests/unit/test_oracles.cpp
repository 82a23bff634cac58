#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "moco/errors.hpp"
#include "moco/experiment.hpp"
#include "moco/oracles.hpp"
#include "moco/solvers.hpp"
#include "support/oracles.hpp"

using namespace moco;

namespace {

BilevelMOO small_bilevel(std::uint64_t seed, std::size_t objectives = 2, std::size_t dim = 3) {
  InstanceSpec spec;
  spec.objectives = objectives;
  spec.dim = dim;
  spec.mu = 0.5;
  spec.lipschitz = 1.0;
  spec.seed = seed;
  return BilevelMOO::random(spec);
}

Vector point(std::size_t dim, double offset) { return Vector::LinSpaced(static_cast<Eigen::Index>(dim), offset, 1.0); }

}  // namespace

TEST_SUITE("oracles") {
  TEST_CASE("sample_jacobian") {
    const QuadraticMOO q = QuadraticMOO::random({});
    const Vector x = point(2, -0.5);
    RngStream rng(1);
    CHECK(sample_jacobian(q, x, NoiseModel::none(), rng) == q.jacobian(x));
    CHECK(sample_jacobian(q, x, NoiseModel::gaussian(0.0), rng) == q.jacobian(x));
    RngStream a(7);
    RngStream b(7);
    CHECK(sample_jacobian(q, x, NoiseModel::gaussian(1.0), a) == sample_jacobian(q, x, NoiseModel::gaussian(1.0), b));
    CHECK_THROWS_AS(sample_jacobian(q, x, NoiseModel::gaussian(-1.0), rng), InvalidInput);
    CHECK_THROWS_AS(sample_jacobian(q, x, NoiseModel::gaussian(1.0, 0), rng), InvalidInput);
  }

  TEST_CASE("huge batches average to the exact Jacobian") {
    const QuadraticMOO q = QuadraticMOO::random({});
    const Vector x = point(2, 0.2);
    const NoiseModel noise = NoiseModel::gaussian(1.0, 1000000);
    RngStream rng(2);
    Jacobian sum = Jacobian::Zero(2, 2);
    const int draws = 1000;
    for (int i = 0; i < draws; ++i) sum += sample_jacobian(q, x, noise, rng);
    const double stderr_entry = noise.effective_std() / std::sqrt(static_cast<double>(draws));
    CHECK(((sum / draws - q.jacobian(x)).array().abs() <= 4.0 * stderr_entry).all());
  }

  TEST_CASE("inner_sgd_step") {
    const BilevelMOO b = small_bilevel(3);
    const Vector x = point(3, -1.0);
    RngStream rng(4);
    const Vector star = b.lower_solution(0, x);
    CHECK(inner_sgd_step(b, star, x, 0, 0.3, NoiseModel::none(), rng) == star);
    const Vector jumped = inner_sgd_step(b, Vector::Zero(static_cast<Eigen::Index>(b.lower_dim(1))), x, 1, 1.0,
                                         NoiseModel::none(), rng);
    CHECK((jumped - b.lower_solution(1, x)).norm() <= 1e-15);
    CHECK_THROWS_AS(inner_sgd_step(b, star, x, 0, 0.0, NoiseModel::none(), rng), InvalidInput);
  }

  TEST_CASE("Robbins-Monro inner steps reach error of order 1/T") {
    const BilevelMOO b = small_bilevel(5);
    const Vector x = point(3, 0.0);
    const NoiseModel noise = NoiseModel::gaussian(0.5);
    std::vector<double> log_t, log_err;
    for (std::size_t t_steps : {4u, 16u, 64u, 256u}) {
      RngStream rng(t_steps);
      double err = 0.0;
      const int reps = 2000;
      for (int r = 0; r < reps; ++r) {
        Vector z = Vector::Constant(3, 2.0);
        for (std::size_t t = 1; t <= t_steps; ++t) z = inner_sgd_step(b, z, x, 0, 1.0 / static_cast<double>(t), noise, rng);
        err += (z - b.lower_solution(0, x)).squaredNorm();
      }
      err /= reps;
      // 4 C^2 / (mu^2 T) with C^2 the gradient-noise second moment.
      CHECK(err <= 4.0 * 3.0 * 0.25 / static_cast<double>(t_steps));
      log_t.push_back(std::log(static_cast<double>(t_steps)));
      log_err.push_back(std::log(err));
    }
    CHECK(fit_slope(log_t, log_err) == doctest::Approx(-1.0).epsilon(0.15));
  }

  TEST_CASE("Neumann series") {
    RngStream rng(6);
    const Vector v = point(4, -2.0);
    CHECK(neumann_hessian_inverse_apply(Matrix::Identity(4, 4), v, 5, 1.0, 0.0, rng) == v);
    CHECK(neumann_hessian_inverse_apply(Matrix::Identity(4, 4), Vector::Zero(4), 5, 0.5, 0.0, rng).norm() == 0.0);

    const Matrix q = random_orthogonal(4, rng);
    Vector eig(4);
    eig << 0.5, 1.0, 2.0, 3.0;
    const Matrix h = q * eig.asDiagonal() * q.transpose();
    const Vector approx = neumann_hessian_inverse_apply(h, v, 200, 1.0 / 3.0, 0.0, rng);
    const Vector exact = h.ldlt().solve(v);
    CHECK((approx - exact).norm() <= 1e-4 * exact.norm());

    // Truncation bias bound (1 - c mu)^N / mu ||v||.
    const Vector short_series = neumann_hessian_inverse_apply(h, v, 10, 1.0 / 3.0, 0.0, rng);
    CHECK((short_series - exact).norm() <= std::pow(1.0 - 0.5 / 3.0, 10) / 0.5 * v.norm() + 1e-12);

    CHECK_THROWS_AS(neumann_hessian_inverse_apply(h, v, 50, 1.0, 0.0, rng), NumericDivergence);
    CHECK_THROWS_AS(neumann_hessian_inverse_apply(h, v, 0, 0.1, 0.0, rng), InvalidInput);
  }

  TEST_CASE("nested estimate at the lower-level optimum is the true hypergradient") {
    const BilevelMOO b = small_bilevel(7, 3, 4);
    const Vector x = point(4, -0.3);
    NestedOracleConfig config;
    config.hessian_inverse.kind = HessianInverseSpec::Kind::Exact;
    NestedStreams streams(1, 3);
    const NestedEstimate est = nested_gradient_estimate(b, config, InnerState::at_solution(b, x), x, 0.1, streams);
    CHECK((est.h - bilevel_true_grad(b, x)).norm() <= 1e-12);
    CHECK((nested_conditional_mean(b, config, est.state, x) - bilevel_true_grad(b, x)).norm() <= 1e-12);

    config.inner_steps = 0;
    CHECK_THROWS_AS(config.validate(), InvalidInput);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("sampled Jacobians are unbiased") {
    InstanceSpec spec;
    spec.objectives = 3;
    spec.dim = 4;
    spec.seed = 2;
    const QuadraticMOO q = QuadraticMOO::random(spec);
    const Vector x = point(4, -1.0);
    const NoiseModel noise = NoiseModel::gaussian(1.0);
    RngStream rng(8);
    Jacobian sum = Jacobian::Zero(4, 3);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) sum += sample_jacobian(q, x, noise, rng);
    const double se = 1.0 / std::sqrt(static_cast<double>(draws));
    CHECK(((sum / draws - q.jacobian(x)).array().abs() <= 5.0 * se).all());
  }

  TEST_CASE("nested estimator variance stays bounded along a run") {
    const BilevelMOO b = small_bilevel(9);
    const Vector x = point(3, 0.5);
    NestedOracleConfig config;
    config.noise = NoiseModel::gaussian(0.3);
    config.hessian_sigma = 0.05;
    NestedGradientOracle oracle(b, config, InnerState::zeros(b), 11);
    double first = 0.0;
    double second = 0.0;
    const int steps = 10000;
    for (int k = 0; k < steps; ++k) {
      const Jacobian h = oracle.sample(x, 0.1);
      const double dev = (h - oracle.conditional_mean(x)).squaredNorm();
      (k < steps / 2 ? first : second) += dev;
    }
    first /= steps / 2;
    second /= steps / 2;
    CHECK(first < 10.0);
    CHECK(second < 10.0);
    CHECK(second / first == doctest::Approx(1.0).epsilon(0.25));
  }

  TEST_CASE("noiseless warm starts approach the lower-level solution monotonically") {
    const BilevelMOO b = small_bilevel(10);
    const Vector x = point(3, -0.8);
    for (double eta : {0.1, 0.5, 1.0}) {
      NestedOracleConfig config;
      config.inner_schedule.kind = InnerSchedule::Kind::Constant;
      config.inner_schedule.eta = eta;
      NestedGradientOracle oracle(b, config, InnerState::zeros(b), 1);
      double previous = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 50; ++k) {
        oracle.sample(x, 0.1);
        const double dist = (oracle.state().z[0] - b.lower_solution(0, x)).norm();
        REQUIRE(dist <= previous);
        previous = dist;
      }
    }
  }

  TEST_CASE("nested oracle replays bit-identically") {
    const BilevelMOO b = small_bilevel(12);
    NestedOracleConfig config;
    config.noise = NoiseModel::gaussian(1.0);
    config.hessian_sigma = 0.1;
    config.inner_steps = 3;
    NestedGradientOracle a(b, config, InnerState::zeros(b), 99);
    NestedGradientOracle c(b, config, InnerState::zeros(b), 99);
    Vector x = point(3, 0.0);
    for (int k = 0; k < 200; ++k) {
      const Jacobian ha = a.sample(x, 0.2);
      REQUIRE(ha == c.sample(x, 0.2));
      x -= 0.01 * ha.col(0);
    }
  }
}
