#include "moco/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moco/errors.hpp"

namespace moco {

namespace {

void require_dim(const Vector& x, std::size_t d, const char* where) {
  if (static_cast<std::size_t>(x.size()) != d) {
    throw InvalidInput(std::string(where) + ": expected dimension " + std::to_string(d) + ", got " +
                       std::to_string(x.size()));
  }
}

double sech2(double t) {
  const double th = std::tanh(t);
  return 1.0 - th * th;
}

// log(max(|u|, floor)) and its derivative in u. At |u| == floor the |u| branch
// is taken (positive side of the max).
double guarded_log(double u) { return std::log(std::max(std::abs(u), kToyLogFloor)); }
double guarded_log_slope(double u) { return std::abs(u) >= kToyLogFloor ? 1.0 / u : 0.0; }

struct ToyParts {
  double s;
  double q1, q2, r1, r2, p1, p2;
  // Gradients with respect to (x1, x2).
  Eigen::Vector2d dq1, dq2, dr1, dr2, dp1, dp2;
};

ToyParts toy_parts(const Vector& x, ToyVariant variant) {
  require_dim(x, 2, "toy problem");
  const double x1 = x(0);
  const double x2 = x(1);
  ToyParts t{};
  t.s = 0.5 * (-x1 - 7.0) - std::tanh(-x2);
  const Eigen::Vector2d ds(-0.5, sech2(x2));
  t.q1 = guarded_log(t.s) + 6.0;
  t.q2 = guarded_log(t.s + 2.0) + 6.0;
  t.dq1 = guarded_log_slope(t.s) * ds;
  t.dq2 = guarded_log_slope(t.s + 2.0) * ds;

  // Second quadratic term: 0.1 (-x2 - 8)^2 (corrected) or 0.1 (-x1 - 8)^2.
  const bool literal = variant == ToyVariant::Literal;
  const double tail_arg = literal ? (-x1 - 8.0) : (-x2 - 8.0);
  const double tail = 0.1 * tail_arg * tail_arg;
  const Eigen::Vector2d dtail = literal ? Eigen::Vector2d(-0.2 * tail_arg, 0.0) : Eigen::Vector2d(0.0, -0.2 * tail_arg);
  t.r1 = ((-x1 + 7.0) * (-x1 + 7.0) + tail) / 10.0 - 20.0;
  t.r2 = ((-x1 - 7.0) * (-x1 - 7.0) + tail) / 10.0 - 20.0;
  t.dr1 = (Eigen::Vector2d(-2.0 * (-x1 + 7.0), 0.0) + dtail) / 10.0;
  t.dr2 = (Eigen::Vector2d(-2.0 * (-x1 - 7.0), 0.0) + dtail) / 10.0;

  const double up = std::tanh(0.5 * x2);
  const double down = std::tanh(-0.5 * x2);
  t.p1 = std::max(up, 0.0);
  t.p2 = std::max(down, 0.0);
  t.dp1 = up >= 0.0 ? Eigen::Vector2d(0.0, 0.5 * sech2(0.5 * x2)) : Eigen::Vector2d::Zero();
  t.dp2 = down >= 0.0 ? Eigen::Vector2d(0.0, -0.5 * sech2(0.5 * x2)) : Eigen::Vector2d::Zero();
  return t;
}

}  // namespace

std::array<double, 2> toy_eval(const Vector& x, ToyVariant variant) {
  const ToyParts t = toy_parts(x, variant);
  return {t.p1 * t.q1 + t.p2 * t.r1, t.p1 * t.q2 + t.p2 * t.r2};
}

Jacobian toy_grad(const Vector& x, ToyVariant variant) {
  const ToyParts t = toy_parts(x, variant);
  Jacobian j(2, 2);
  j.col(0) = t.q1 * t.dp1 + t.p1 * t.dq1 + t.r1 * t.dp2 + t.p2 * t.dr1;
  j.col(1) = t.q2 * t.dp1 + t.p1 * t.dq2 + t.r2 * t.dp2 + t.p2 * t.dr2;
  return j;
}

Vector ToyProblem::values(const Vector& x) const {
  const auto f = toy_eval(x, variant_);
  return Eigen::Vector2d(f[0], f[1]);
}

// ---------------------------------------------------------------------------

Matrix random_orthogonal(std::size_t n, RngStream& rng) {
  const auto size = static_cast<Eigen::Index>(n);
  Matrix g(size, size);
  for (Eigen::Index c = 0; c < size; ++c)
    for (Eigen::Index r = 0; r < size; ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(size, size);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < size; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

namespace {

Matrix random_spd(std::size_t n, double mu, double lipschitz, RngStream& rng) {
  const Matrix q = random_orthogonal(n, rng);
  Vector diag(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < diag.size(); ++i) diag(i) = mu + (lipschitz - mu) * rng.uniform();
  Matrix a = q * diag.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

Vector random_center(std::size_t n, double scale, RngStream& rng) {
  Vector b(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = scale * rng.normal();
  return b;
}

void validate_spec(const InstanceSpec& spec) {
  if (spec.objectives < 1) throw InvalidInput("instance: objectives must be >= 1");
  if (spec.dim < 1) throw InvalidInput("instance: dim must be >= 1");
  if (!(spec.mu > 0.0) || !(spec.lipschitz >= spec.mu)) throw InvalidInput("instance: need 0 < mu <= L");
  if (!(spec.center_scale >= 0.0)) throw InvalidInput("instance: center_scale must be >= 0");
}

double spectral_norm(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

}  // namespace

QuadraticMOO::QuadraticMOO(std::vector<Matrix> a, std::vector<Vector> b, double region_radius)
    : a_(std::move(a)), b_(std::move(b)), region_radius_(region_radius) {
  if (a_.empty() || a_.size() != b_.size()) throw InvalidInput("QuadraticMOO: need matching, nonempty A and b lists");
  const auto d = b_.front().size();
  if (d < 1) throw InvalidInput("QuadraticMOO: dimension must be >= 1");
  for (std::size_t m = 0; m < a_.size(); ++m) {
    if (a_[m].rows() != d || a_[m].cols() != d || b_[m].size() != d)
      throw InvalidInput("QuadraticMOO: objective " + std::to_string(m) + " has inconsistent dimensions");
    if (!a_[m].allFinite() || !b_[m].allFinite()) throw InvalidInput("QuadraticMOO: non-finite entries");
    if ((a_[m] - a_[m].transpose()).norm() > 1e-12) throw InvalidInput("QuadraticMOO: A_m must be symmetric");
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(a_[m], Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (!(min_eig > 0.0)) throw InvalidInput("QuadraticMOO: A_m must be positive definite");
  }
}

QuadraticMOO QuadraticMOO::random(const InstanceSpec& spec) {
  validate_spec(spec);
  RngStream rng(spec.seed);
  std::vector<Matrix> a;
  std::vector<Vector> b;
  for (std::size_t m = 0; m < spec.objectives; ++m) {
    a.push_back(random_spd(spec.dim, spec.mu, spec.lipschitz, rng));
    b.push_back(random_center(spec.dim, spec.center_scale, rng));
  }
  return QuadraticMOO(std::move(a), std::move(b), spec.region_radius);
}

Vector QuadraticMOO::values(const Vector& x) const {
  require_dim(x, dim(), "QuadraticMOO::values");
  Vector f(static_cast<Eigen::Index>(a_.size()));
  for (std::size_t m = 0; m < a_.size(); ++m) {
    const Vector r = x - b_[m];
    f(static_cast<Eigen::Index>(m)) = 0.5 * r.dot(a_[m] * r);
  }
  return f;
}

Jacobian QuadraticMOO::jacobian(const Vector& x) const {
  require_dim(x, dim(), "QuadraticMOO::jacobian");
  Jacobian j(x.size(), static_cast<Eigen::Index>(a_.size()));
  for (std::size_t m = 0; m < a_.size(); ++m) j.col(static_cast<Eigen::Index>(m)) = a_[m] * (x - b_[m]);
  return j;
}

Vector QuadraticMOO::gradient_bounds() const {
  Vector bounds(static_cast<Eigen::Index>(a_.size()));
  for (std::size_t m = 0; m < a_.size(); ++m)
    bounds(static_cast<Eigen::Index>(m)) = spectral_norm(a_[m]) * (region_radius_ + b_[m].norm());
  return bounds;
}

std::pair<Vector, Jacobian> quadratic_eval_grad(const QuadraticMOO& problem, const Vector& x) {
  return {problem.values(x), problem.jacobian(x)};
}

// ---------------------------------------------------------------------------

BilevelMOO::BilevelMOO(std::vector<Matrix> a, std::vector<Vector> b, double region_radius)
    : a_(std::move(a)), b_(std::move(b)), region_radius_(region_radius) {
  if (a_.empty() || a_.size() != b_.size()) throw InvalidInput("BilevelMOO: need matching, nonempty A and b lists");
  const auto d = a_.front().cols();
  if (d < 1) throw InvalidInput("BilevelMOO: dimension must be >= 1");
  for (std::size_t m = 0; m < a_.size(); ++m) {
    if (a_[m].cols() != d || a_[m].rows() < 1 || b_[m].size() != a_[m].rows())
      throw InvalidInput("BilevelMOO: objective " + std::to_string(m) + " has inconsistent dimensions");
    if (!a_[m].allFinite() || !b_[m].allFinite()) throw InvalidInput("BilevelMOO: non-finite entries");
  }
}

BilevelMOO BilevelMOO::random(const InstanceSpec& spec) {
  validate_spec(spec);
  RngStream rng(spec.seed);
  std::vector<Matrix> a;
  std::vector<Vector> b;
  for (std::size_t m = 0; m < spec.objectives; ++m) {
    a.push_back(random_spd(spec.dim, spec.mu, spec.lipschitz, rng));
    b.push_back(random_center(spec.dim, spec.center_scale, rng));
  }
  return BilevelMOO(std::move(a), std::move(b), spec.region_radius);
}

Vector BilevelMOO::values(const Vector& x) const {
  require_dim(x, dim(), "BilevelMOO::values");
  Vector f(static_cast<Eigen::Index>(a_.size()));
  for (std::size_t m = 0; m < a_.size(); ++m)
    f(static_cast<Eigen::Index>(m)) = 0.5 * (a_[m] * x - b_[m]).squaredNorm();
  return f;
}

Jacobian BilevelMOO::jacobian(const Vector& x) const { return bilevel_true_grad(*this, x); }

Vector BilevelMOO::gradient_bounds() const {
  Vector bounds(static_cast<Eigen::Index>(a_.size()));
  for (std::size_t m = 0; m < a_.size(); ++m) {
    const double s = spectral_norm(a_[m]);
    bounds(static_cast<Eigen::Index>(m)) = s * (s * region_radius_ + b_[m].norm());
  }
  return bounds;
}

Vector BilevelMOO::lower_solution(std::size_t m, const Vector& x) const { return a_.at(m) * x; }

Vector BilevelMOO::lower_grad_z(std::size_t m, const Vector& x, const Vector& z) const {
  return z - a_.at(m) * x;
}

Vector BilevelMOO::upper_grad_x(std::size_t, const Vector& x, const Vector&) const {
  return Vector::Zero(x.size());
}

Vector BilevelMOO::upper_grad_z(std::size_t m, const Vector&, const Vector& z) const { return z - b_.at(m); }

Matrix BilevelMOO::cross_hessian(std::size_t m, const Vector&, const Vector&) const {
  return -a_.at(m).transpose();
}

Matrix BilevelMOO::lower_hessian(std::size_t m, const Vector&, const Vector&) const {
  const auto p = a_.at(m).rows();
  return Matrix::Identity(p, p);
}

Jacobian bilevel_true_grad(const BilevelMOO& problem, const Vector& x) {
  require_dim(x, problem.dim(), "bilevel_true_grad");
  Jacobian j(x.size(), static_cast<Eigen::Index>(problem.num_objectives()));
  for (std::size_t m = 0; m < problem.num_objectives(); ++m) {
    const Vector z = problem.lower_solution(m, x);
    const Vector inner = problem.lower_hessian(m, x, z).ldlt().solve(problem.upper_grad_z(m, x, z));
    j.col(static_cast<Eigen::Index>(m)) = problem.upper_grad_x(m, x, z) - problem.cross_hessian(m, x, z) * inner;
  }
  return j;
}

Jacobian finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidInput("finite_difference_jacobian: h must be positive");
  const Vector f0 = f(x);
  Jacobian j(x.size(), f0.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const Vector up = f(probe);
    probe(i) = x(i) - h;
    const Vector down = f(probe);
    probe(i) = x(i);
    j.row(i) = ((up - down) / (2.0 * h)).transpose();
  }
  return j;
}

}  // namespace moco
