#include <cmath>

#include "doctest.h"
#include "moco/errors.hpp"
#include "moco/metrics.hpp"
#include "moco/problems.hpp"
#include "support/oracles.hpp"

using namespace moco;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector toy_values(const Vector& x, ToyVariant variant) {
  const auto f = toy_eval(x, variant);
  return vec2(f[0], f[1]);
}

double rel_err(const Jacobian& a, const Jacobian& b) { return (a - b).norm() / std::max(b.norm(), 1.0); }

// Kinks of the toy problem: |s| and |s + 2| inside the logs, and x2 = 0.
bool near_toy_kink(const Vector& x, double margin) {
  const double s = 0.5 * (-x(0) - 7.0) - std::tanh(-x(1));
  return std::abs(s) < margin || std::abs(s + 2.0) < margin || std::abs(x(1)) < margin;
}

}  // namespace

TEST_SUITE("problems") {
  // Reference values come from a symbolic transcription of the toy formulas
  // evaluated at 20 significant digits (sympy), independent of this code.
  TEST_CASE("toy values and gradients at the protocol starts") {
    const auto f = toy_eval(vec2(-8.5, 7.5));
    CHECK(f[0] == doctest::Approx(6.5523634077713272893).epsilon(1e-13));
    CHECK(f[1] == doctest::Approx(7.3136610565885954281).epsilon(1e-13));
    const Jacobian g = toy_grad(vec2(-8.5, 7.5));
    CHECK(g(0, 0) == doctest::Approx(-0.28539851198351837401).epsilon(1e-12));
    CHECK(g(1, 0) == doctest::Approx(0.0072487202260298839845).epsilon(1e-12));
    CHECK(g(0, 1) == doctest::Approx(-0.13318594742582192693).epsilon(1e-12));
    CHECK(g(1, 1) == doctest::Approx(0.0080904716476340292736).epsilon(1e-12));

    const auto f5 = toy_eval(vec2(-8.5, 5.0));
    CHECK(f5[0] == doctest::Approx(6.4717595366445616120).epsilon(1e-13));
    CHECK(f5[1] == doctest::Approx(7.2237251109116997287).epsilon(1e-13));

    const auto f3 = toy_eval(vec2(10.0, -8.0));
    CHECK(f3[0] == doctest::Approx(-19.087189625016180536).epsilon(1e-13));
    CHECK(f3[1] == doctest::Approx(8.8940307676776966898).epsilon(1e-13));
    const Jacobian g3 = toy_grad(vec2(10.0, -8.0));
    CHECK(g3(0, 0) == doctest::Approx(0.59959757984344022628).epsilon(1e-12));
    CHECK(g3(1, 0) == doctest::Approx(0.012806079022897315204).epsilon(1e-12));
    CHECK(g3(0, 1) == doctest::Approx(3.3977196191128279489).epsilon(1e-12));
    CHECK(g3(1, 1) == doctest::Approx(-0.0059672305394652411159).epsilon(1e-12));

    const auto f4 = toy_eval(vec2(3.0, -2.0));
    CHECK(f4[0] == doctest::Approx(-13.739158573441998582).epsilon(1e-13));
    CHECK(f4[1] == doctest::Approx(-7.3417676634135735215).epsilon(1e-13));
  }

  TEST_CASE("literal toy variant") {
    const auto f = toy_eval(vec2(10.0, -8.0), ToyVariant::Literal);
    CHECK(f[0] == doctest::Approx(-15.849362693861603315).epsilon(1e-13));
    CHECK(f[1] == doctest::Approx(12.131857698832273912).epsilon(1e-13));
    const Jacobian g = toy_grad(vec2(10.0, -8.0), ToyVariant::Literal);
    CHECK(g(0, 0) == doctest::Approx(0.95935612774950436204).epsilon(1e-12));
    CHECK(g(1, 0) == doctest::Approx(0.010633738916395362258).epsilon(1e-12));
    CHECK(g(0, 1) == doctest::Approx(3.7574781670188920847).epsilon(1e-12));
    CHECK(g(1, 1) == doctest::Approx(-0.0081395706459671940614).epsilon(1e-12));
    const auto f4 = toy_eval(vec2(3.0, -2.0), ToyVariant::Literal);
    CHECK(f4[0] == doctest::Approx(-13.091803540879598427).epsilon(1e-13));
    CHECK(f4[1] == doctest::Approx(-6.6944126308511733666).epsilon(1e-13));
    // Where p2 = 0 the variants coincide.
    CHECK(toy_eval(vec2(-8.5, 7.5), ToyVariant::Literal) == toy_eval(vec2(-8.5, 7.5)));
  }

  TEST_CASE("toy branch weights") {
    CHECK(toy_eval(vec2(0.0, 0.0))[0] == 0.0);
    CHECK(toy_eval(vec2(0.0, 0.0))[1] == 0.0);
    CHECK(std::tanh(0.5 * 20.0) == doctest::Approx(1.0).epsilon(1e-8));
    // At x2 = 20 only the p1 terms are active, so the r-variants agree.
    const Jacobian a = toy_grad(vec2(0.0, 20.0));
    const Jacobian b = toy_grad(vec2(0.0, 20.0), ToyVariant::Literal);
    CHECK((a - b).norm() <= 1e-12);
    CHECK(std::abs(a(1, 0)) <= 1e-6);
    CHECK(std::abs(a(1, 1)) <= 1e-6);
  }

  TEST_CASE("q-offset symmetry in the p1 region") {
    // With p2 = 0, shifting s by 2 is the same as shifting x1 by 4.
    for (double x1 : {-9.0, -3.0, 0.5, 6.0}) {
      for (double x2 : {0.5, 2.0, 7.5}) {
        CHECK(toy_eval(vec2(x1, x2))[1] == doctest::Approx(toy_eval(vec2(x1 - 4.0, x2))[0]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("quadratic examples") {
    RngStream rng(1);
    InstanceSpec spec;
    spec.objectives = 3;
    spec.dim = 4;
    spec.seed = 8;
    const QuadraticMOO q = QuadraticMOO::random(spec);
    const auto [values, jac] = quadratic_eval_grad(q, q.centers()[1]);
    CHECK(values(1) == 0.0);
    CHECK(jac.col(1).norm() == 0.0);

    const QuadraticMOO id({Matrix::Identity(3, 3)}, {Vector::Zero(3)});
    const Vector x = Vector::LinSpaced(3, -1.0, 2.0);
    CHECK(id.values(x)(0) == doctest::Approx(0.5 * x.squaredNorm()));
    CHECK(id.jacobian(x).col(0) == x);
    CHECK_THROWS_AS(q.values(Vector::Zero(3)), InvalidInput);
  }

  TEST_CASE("quadratic instances are symmetric with the requested spectrum") {
    InstanceSpec spec;
    spec.objectives = 4;
    spec.dim = 6;
    spec.mu = 0.5;
    spec.lipschitz = 2.0;
    spec.seed = 99;
    const QuadraticMOO q = QuadraticMOO::random(spec);
    for (const Matrix& a : q.matrices()) {
      CHECK((a - a.transpose()).norm() <= 1e-12);
      const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues();
      CHECK(eig.minCoeff() >= 0.5 - 1e-12);
      CHECK(eig.maxCoeff() <= 2.0 + 1e-12);
    }
  }

  TEST_CASE("bilevel examples") {
    const BilevelMOO id({Matrix::Identity(2, 2)}, {Vector::Zero(2)});
    const Vector x = vec2(0.7, -1.2);
    CHECK((bilevel_true_grad(id, x).col(0) - x).norm() <= 1e-15);

    InstanceSpec spec;
    spec.objectives = 2;
    spec.dim = 3;
    spec.seed = 4;
    const BilevelMOO b = BilevelMOO::random(spec);
    const Vector xs = Vector::LinSpaced(3, 0.1, 0.9);
    const BilevelMOO hit({b.maps()[0]}, {b.maps()[0] * xs});
    CHECK(bilevel_true_grad(hit, xs).col(0).norm() <= 1e-14);
    CHECK(b.lower_solution(1, xs) == b.maps()[1] * xs);
  }

  TEST_CASE("finite differences") {
    const Vector c = Vector::LinSpaced(4, -2.0, 3.0);
    auto linear = [&](const Vector& x) {
      Vector out(1);
      out << c.dot(x);
      return out;
    };
    CHECK((finite_difference_jacobian(linear, Vector::Ones(4), 1e-3).col(0) - c).norm() <= 1e-10);
    CHECK_THROWS_AS(finite_difference_jacobian(linear, Vector::Ones(4), 0.0), InvalidInput);

    // Richardson: halving h cuts the error of a smooth map by about four.
    InstanceSpec spec;
    spec.objectives = 2;
    spec.dim = 3;
    spec.seed = 5;
    const QuadraticMOO q = QuadraticMOO::random(spec);
    auto cubic = [&](const Vector& x) { return Vector((q.values(x).array() * x.sum()).matrix()); };
    const Vector x0 = Vector::LinSpaced(3, 0.3, 1.1);
    auto exact = [&](const Vector& x) {
      Jacobian j = q.jacobian(x) * x.sum();
      for (Eigen::Index m = 0; m < 2; ++m) j.col(m) += Vector::Constant(3, q.values(x)(m));
      return j;
    };
    const double e1 = (finite_difference_jacobian(cubic, x0, 1e-2) - exact(x0)).norm();
    const double e2 = (finite_difference_jacobian(cubic, x0, 5e-3) - exact(x0)).norm();
    CHECK(e2 < e1 / 3.0);
  }

  TEST_CASE("gradient bounds dominate gradients on the region") {
    InstanceSpec spec;
    spec.objectives = 3;
    spec.dim = 5;
    spec.seed = 12;
    spec.region_radius = 4.0;
    const QuadraticMOO q = QuadraticMOO::random(spec);
    const BilevelMOO b = BilevelMOO::random(spec);
    RngStream rng(6);
    for (int i = 0; i < 200; ++i) {
      Vector x(5);
      for (Eigen::Index k = 0; k < 5; ++k) x(k) = rng.normal();
      x *= 4.0 * rng.uniform() / x.norm();
      for (Eigen::Index m = 0; m < 3; ++m) {
        CHECK(q.jacobian(x).col(m).norm() <= q.gradient_bounds()(m) + 1e-12);
        CHECK(b.jacobian(x).col(m).norm() <= b.gradient_bounds()(m) + 1e-12);
      }
    }
  }
}

TEST_SUITE("properties") {
  TEST_CASE("toy gradient matches central differences away from kinks") {
    RngStream rng(31);
    for (ToyVariant variant : {ToyVariant::Corrected, ToyVariant::Literal}) {
      int checked = 0;
      while (checked < 200) {
        const Vector x = vec2(20.0 * rng.uniform() - 10.0, 20.0 * rng.uniform() - 10.0);
        if (near_toy_kink(x, 1e-3)) continue;
        const Jacobian fd =
            oracle::central_difference([&](const Vector& p) { return toy_values(p, variant); }, x, 1e-5);
        REQUIRE(rel_err(fd, toy_grad(x, variant)) <= 1e-4);
        ++checked;
      }
    }
  }

  TEST_CASE("quadratic and bilevel gradients match central differences") {
    RngStream rng(32);
    for (int inst = 0; inst < 5; ++inst) {
      InstanceSpec spec;
      spec.objectives = 2 + static_cast<std::size_t>(inst % 3);
      spec.dim = 2 + static_cast<std::size_t>(inst);
      spec.seed = 100 + static_cast<std::uint64_t>(inst);
      const QuadraticMOO q = QuadraticMOO::random(spec);
      const BilevelMOO b = BilevelMOO::random(spec);
      for (int i = 0; i < 100; ++i) {
        Vector x(static_cast<Eigen::Index>(spec.dim));
        for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = 3.0 * rng.normal();
        const Jacobian fq = oracle::central_difference([&](const Vector& p) { return q.values(p); }, x, 1e-5);
        REQUIRE(rel_err(fq, q.jacobian(x)) <= 1e-6);
        const Jacobian fb = oracle::central_difference([&](const Vector& p) { return b.values(p); }, x, 1e-5);
        REQUIRE(rel_err(fb, bilevel_true_grad(b, x)) <= 1e-6);
        REQUIRE(rel_err(finite_difference_jacobian([&](const Vector& p) { return q.values(p); }, x, 1e-5), fq) <=
                1e-12);
      }
    }
  }

  TEST_CASE("bilevel hypergradient equals the reduced single-level gradient") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      InstanceSpec spec;
      spec.objectives = 3;
      spec.dim = 4;
      spec.seed = seed;
      const BilevelMOO b = BilevelMOO::random(spec);
      RngStream rng(seed + 1000);
      Vector x(4);
      for (Eigen::Index k = 0; k < 4; ++k) x(k) = rng.normal();
      const Jacobian j = bilevel_true_grad(b, x);
      for (std::size_t m = 0; m < 3; ++m) {
        const Vector reduced = b.maps()[m].transpose() * (b.maps()[m] * x - b.targets()[m]);
        REQUIRE((j.col(static_cast<Eigen::Index>(m)) - reduced).norm() <= 1e-12 * std::max(1.0, reduced.norm()));
      }
      REQUIRE((b.jacobian(x) - j).norm() <= 1e-12);
    }
  }

  TEST_CASE("one-dimensional quadratic pairs are stationary exactly between the centres") {
    RngStream rng(33);
    for (int i = 0; i < 50; ++i) {
      Matrix a1(1, 1), a2(1, 1);
      a1 << 0.5 + rng.uniform();
      a2 << 0.5 + rng.uniform();
      Vector b1(1), b2(1);
      b1 << rng.normal();
      b2 << b1(0) + 0.1 + rng.uniform();
      const QuadraticMOO q({a1, a2}, {b1, b2});
      for (int t = 0; t <= 10; ++t) {
        Vector x(1);
        x << b1(0) + (b2(0) - b1(0)) * t / 10.0;
        REQUIRE(pareto_stationarity(q.jacobian(x)) <= 1e-8);
      }
      Vector left(1), right(1);
      left << b1(0) - 0.05;
      right << b2(0) + 0.05;
      REQUIRE(pareto_stationarity(q.jacobian(left)) > 0.0);
      REQUIRE(pareto_stationarity(q.jacobian(right)) > 0.0);
    }
  }
}
