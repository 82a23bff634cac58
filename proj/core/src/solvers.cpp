#include "moco/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "moco/errors.hpp"

namespace moco {

namespace {

struct MethodName {
  Method method;
  const char* name;
};

constexpr MethodName kMethodNames[] = {
    {Method::Mgda, "mgda"},         {Method::Smg, "smg"},       {Method::SmgGrowingBatch, "smg-growing"},
    {Method::MoCo, "moco"},         {Method::MoCoNested, "moco-nested"},
    {Method::PCGrad, "pcgrad"},     {Method::CAGrad, "cagrad"},
};

LambdaSolveOptions tight_solve() {
  LambdaSolveOptions o;
  o.tol = 1e-10;
  return o;
}

}  // namespace

std::string to_string(Method method) {
  for (const auto& entry : kMethodNames)
    if (entry.method == method) return entry.name;
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  for (const auto& entry : kMethodNames)
    if (name == entry.name) return entry.method;
  return std::nullopt;
}

std::vector<std::string> method_names() {
  std::vector<std::string> out;
  for (const auto& entry : kMethodNames) out.emplace_back(entry.name);
  return out;
}

// ---------------------------------------------------------------------------

Direction mgda_direction(const Jacobian& jacobian) {
  const LambdaSolveReport report = solve_lambda(jacobian, 0.0, tight_solve());
  return {multi_gradient(jacobian, report.weights), report.weights.values()};
}

Direction smg_direction(const Jacobian& sampled) {
  if (sampled.cols() == 2) {
    const double c = solve_lambda_closed_form_2(sampled.col(0), sampled.col(1));
    const Vector w = Eigen::Vector2d(c, 1.0 - c);
    return {sampled * w, w};
  }
  return mgda_direction(sampled);
}

Direction pcgrad_direction(const Jacobian& jacobian, RngStream& rng) {
  const auto m = jacobian.cols();
  if (m < 1) throw InvalidInput("pcgrad_direction: empty Jacobian");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  Vector total = Vector::Zero(jacobian.rows());
  for (Eigen::Index i = 0; i < m; ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::size_t a = order.size() - 1; a > 0; --a) std::swap(order[a], order[rng.below(a + 1)]);
    Vector g = jacobian.col(i);
    for (const Eigen::Index j : order) {
      const double dot = g.dot(jacobian.col(j));
      const double norm_sq = jacobian.col(j).squaredNorm();
      if (dot < 0.0 && norm_sq > 0.0) g -= (dot / norm_sq) * jacobian.col(j);
    }
    total += g;
  }
  const Vector weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
  return {total / static_cast<double>(m), weights};
}

CagradDual cagrad_dual(const Jacobian& jacobian, double c) {
  if (!(c >= 0.0)) throw InvalidInput("cagrad: c must be >= 0");
  const auto m = jacobian.cols();
  if (m < 1) throw InvalidInput("cagrad: empty Jacobian");
  const Matrix gram = jacobian.transpose() * jacobian;
  const Vector mean_grad = jacobian.rowwise().mean();
  const Vector linear = jacobian.transpose() * mean_grad;
  const double kappa = c * mean_grad.norm();
  const double eps = 1e-14 * (1.0 + gram.trace());

  auto value = [&](const Vector& w) { return w.dot(linear) + kappa * std::sqrt(std::max(w.dot(gram * w), 0.0) + eps); };
  auto gradient = [&](const Vector& w) -> Vector {
    return linear + (kappa / std::sqrt(std::max(w.dot(gram * w), 0.0) + eps)) * (gram * w);
  };

  Vector w = SimplexWeights::uniform(static_cast<std::size_t>(m)).values();
  if (m == 1) return {SimplexWeights(w), value(w)};

  const double scale = std::max(gram.norm(), 1e-300);
  double step = 1.0 / scale;
  double current = value(w);
  for (int iter = 0; iter < 20000; ++iter) {
    const Vector g = gradient(w);
    Vector candidate;
    double candidate_value = 0.0;
    // Backtracking on the projected-gradient sufficient-decrease condition.
    for (int tries = 0; tries < 60; ++tries) {
      candidate = project_simplex(w - step * g).values();
      candidate_value = value(candidate);
      const Vector delta = candidate - w;
      if (candidate_value <= current + g.dot(delta) + delta.squaredNorm() / (2.0 * step) + 1e-18) break;
      step *= 0.5;
    }
    const double moved = (candidate - w).norm();
    w = std::move(candidate);
    current = candidate_value;
    if (moved < 1e-13) break;
    step *= 1.5;
  }
  return {project_simplex(w), current};
}

Direction cagrad_direction(const Jacobian& jacobian, double c) {
  const CagradDual dual = cagrad_dual(jacobian, c);
  const Vector mean_grad = jacobian.rowwise().mean();
  const Vector gw = jacobian * dual.weights.values();
  const double gw_norm = gw.norm();
  Vector d = mean_grad;
  if (c > 0.0 && gw_norm > 0.0) d += (c * mean_grad.norm() / gw_norm) * gw;
  return {d / (1.0 + c), dual.weights.values()};
}

Vector mgda_step(const Vector& x, const Problem& problem, double alpha) {
  return x - alpha * mgda_direction(problem.jacobian(x)).vector;
}

Vector smg_step(const Vector& x, const Problem& problem, double alpha, const NoiseModel& noise, RngStream& rng) {
  return x - alpha * smg_direction(sample_jacobian(problem, x, noise, rng)).vector;
}

Vector pcgrad_step(const Vector& x, const Problem& problem, double alpha, const NoiseModel& noise, RngStream& rng) {
  const Jacobian j = sample_jacobian(problem, x, noise, rng);
  return x - alpha * pcgrad_direction(j, rng).vector;
}

Vector cagrad_step(const Vector& x, const Problem& problem, double alpha, double c, const NoiseModel& noise,
                   RngStream& rng) {
  return x - alpha * cagrad_direction(sample_jacobian(problem, x, noise, rng), c).vector;
}

// ---------------------------------------------------------------------------

NestedGradientOracle::NestedGradientOracle(const BilevelMOO& problem, NestedOracleConfig config, InnerState initial,
                                           std::uint64_t seed)
    : problem_(problem), config_(config), state_(std::move(initial)), streams_(seed, problem.num_objectives()) {
  config_.validate();
}

Jacobian NestedGradientOracle::sample(const Vector& x, double beta) {
  NestedEstimate estimate = nested_gradient_estimate(problem_, config_, std::move(state_), x, beta, streams_);
  state_ = std::move(estimate.state);
  return std::move(estimate.h);
}

Jacobian NestedGradientOracle::conditional_mean(const Vector& x) const {
  return nested_conditional_mean(problem_, config_, state_, x);
}

// ---------------------------------------------------------------------------

MoCoState MoCoState::initial(Vector x0, const Jacobian& first_sample, Vector caps) {
  if (first_sample.rows() != x0.size() || first_sample.cols() != caps.size())
    throw InvalidInput("MoCoState::initial: dimension mismatch");
  Jacobian y = first_sample;
  for (Eigen::Index m = 0; m < y.cols(); ++m) y.col(m) = project_ball(y.col(m), caps(m));
  const auto objectives = static_cast<std::size_t>(first_sample.cols());
  return {std::move(x0), std::move(y), SimplexWeights::uniform(objectives), 0, std::move(caps)};
}

Jacobian tracking_update(const Jacobian& tracking, const Jacobian& h, double beta, const Vector& caps) {
  if (tracking.rows() != h.rows() || tracking.cols() != h.cols() || caps.size() != tracking.cols())
    throw InvalidInput("tracking_update: dimension mismatch");
  Jacobian out(tracking.rows(), tracking.cols());
  for (Eigen::Index m = 0; m < tracking.cols(); ++m) {
    out.col(m) = project_ball(tracking.col(m) - beta * (tracking.col(m) - h.col(m)), caps(m));
  }
  return out;
}

SimplexWeights moco_lambda_update(const SimplexWeights& lambda, const Jacobian& tracking, double rho, double gamma,
                                  const MoCoOptions& options) {
  SimplexWeights w = lambda;
  for (std::size_t i = 0; i < std::max<std::size_t>(options.lambda_steps, 1); ++i) {
    w = options.projection == LambdaProjection::Softmax ? lambda_step_softmax(w, tracking, rho, gamma)
                                                        : lambda_step_regularized(w, tracking, rho, gamma);
  }
  return w;
}

MoCoStep moco_update(const MoCoState& state, const Jacobian& h, const StepValues& steps, const MoCoOptions& options) {
  MoCoState next = state;
  next.tracking = tracking_update(state.tracking, h, steps.beta, state.caps);
  Vector direction;
  if (options.lagged_updates) {
    next.lambda = moco_lambda_update(state.lambda, state.tracking, steps.rho, steps.gamma, options);
    direction = state.direction();
  } else {
    next.lambda = moco_lambda_update(state.lambda, next.tracking, steps.rho, steps.gamma, options);
    direction = next.tracking * next.lambda.values();
  }
  next.x = state.x - steps.alpha * direction;
  next.k = state.k + 1;
  return {std::move(next), std::move(direction), h};
}

MoCoState moco_step(const MoCoState& state, GradientOracle& oracle, const StepSchedule& schedule, std::size_t horizon,
                    const MoCoOptions& options) {
  const StepValues steps = schedule.at(state.k + 1, horizon);
  const Jacobian h = oracle.sample(state.x, steps.beta);
  return moco_update(state, h, steps, options).state;
}

// ---------------------------------------------------------------------------

void RunSpec::validate(const Problem& problem) const {
  if (iterations < 1) throw InvalidInput("K must be >= 1");
  if (record_every < 1) throw InvalidInput("record_every must be >= 1");
  if (static_cast<std::size_t>(x0.size()) != problem.dim())
    throw InvalidInput("x0 has dimension " + std::to_string(x0.size()) + ", problem expects " +
                       std::to_string(problem.dim()));
  if (!x0.allFinite()) throw InvalidInput("x0 must be finite");
  noise.validate();
  schedule.validate();
  if (!(cagrad_c >= 0.0)) throw InvalidInput("cagrad c must be >= 0");
  if (batch_growth_every < 1) throw InvalidInput("batch_growth_every must be >= 1");
  if (caps && static_cast<std::size_t>(caps->size()) != problem.num_objectives())
    throw InvalidInput("caps must have one entry per objective");
  if (caps && caps->minCoeff() < 0.0) throw InvalidInput("caps must be >= 0");
  if (method == Method::MoCoNested) {
    if (dynamic_cast<const BilevelMOO*>(&problem) == nullptr)
      throw InvalidInput("moco-nested requires the bilevel problem");
    nested.validate();
  }
}

namespace {
enum StreamTag : std::uint64_t { kSamples = 1, kOrder = 2, kNested = 3 };
}

MethodRunner::MethodRunner(const Problem& problem, RunSpec spec)
    : problem_(problem),
      spec_(std::move(spec)),
      x_(spec_.x0),
      sample_rng_(RngStream(spec_.seed).substream(kSamples)),
      order_rng_(RngStream(spec_.seed).substream(kOrder)) {
  spec_.validate(problem_);
  if (spec_.method == Method::MoCo || spec_.method == Method::MoCoNested) {
    const Vector caps = spec_.caps ? *spec_.caps : problem_.gradient_bounds();
    if (spec_.method == Method::MoCoNested) {
      const auto& bilevel = dynamic_cast<const BilevelMOO&>(problem_);
      auto nested = std::make_unique<NestedGradientOracle>(bilevel, spec_.nested, InnerState::zeros(bilevel),
                                                           RngStream(spec_.seed).substream(kNested).next_u64());
      nested_ = nested.get();
      oracle_ = std::move(nested);
    } else {
      oracle_ = std::make_unique<SampledOracle>(problem_, spec_.noise, sample_rng_);
    }
    const double beta0 = spec_.schedule.at(1, spec_.iterations).beta;
    const Jacobian first = oracle_->sample(x_, beta0);
    samples_used_ += oracle_->samples_per_call();
    moco_ = MoCoState::initial(x_, first, caps);
  }
}

MethodRunner::~MethodRunner() = default;

std::size_t MethodRunner::current_batch() const {
  if (spec_.method == Method::SmgGrowingBatch) return spec_.noise.batch_size * (1 + k_ / spec_.batch_growth_every);
  return spec_.noise.batch_size;
}

const Direction& MethodRunner::step() {
  const StepValues steps = spec_.schedule.at(k_ + 1, spec_.iterations);
  switch (spec_.method) {
    case Method::Mgda: {
      last_sample_ = problem_.jacobian(x_);
      last_ = mgda_direction(last_sample_);
      break;
    }
    case Method::Smg:
    case Method::SmgGrowingBatch: {
      NoiseModel noise = spec_.noise;
      noise.batch_size = current_batch();
      last_sample_ = sample_jacobian(problem_, x_, noise, sample_rng_);
      samples_used_ += noise.batch_size;
      last_ = smg_direction(last_sample_);
      break;
    }
    case Method::PCGrad: {
      last_sample_ = sample_jacobian(problem_, x_, spec_.noise, sample_rng_);
      samples_used_ += spec_.noise.batch_size;
      last_ = pcgrad_direction(last_sample_, order_rng_);
      break;
    }
    case Method::CAGrad: {
      last_sample_ = sample_jacobian(problem_, x_, spec_.noise, sample_rng_);
      samples_used_ += spec_.noise.batch_size;
      last_ = cagrad_direction(last_sample_, spec_.cagrad_c);
      break;
    }
    case Method::MoCo:
    case Method::MoCoNested: {
      last_sample_ = oracle_->sample(x_, steps.beta);
      samples_used_ += oracle_->samples_per_call();
      MoCoStep result = moco_update(*moco_, last_sample_, steps, spec_.moco);
      last_ = {std::move(result.direction),
               spec_.moco.lagged_updates ? moco_->lambda.values() : result.state.lambda.values()};
      moco_ = std::move(result.state);
      x_ = moco_->x;
      ++k_;
      return last_;
    }
  }
  x_ = x_ - steps.alpha * last_.vector;
  ++k_;
  return last_;
}

Vector MethodRunner::sample_direction(RngStream& rng) const {
  switch (spec_.method) {
    case Method::Mgda:
      return mgda_direction(problem_.jacobian(x_)).vector;
    case Method::Smg:
    case Method::SmgGrowingBatch: {
      NoiseModel noise = spec_.noise;
      noise.batch_size = current_batch();
      return smg_direction(sample_jacobian(problem_, x_, noise, rng)).vector;
    }
    case Method::PCGrad:
      return pcgrad_direction(sample_jacobian(problem_, x_, spec_.noise, rng), rng).vector;
    case Method::CAGrad:
      return cagrad_direction(sample_jacobian(problem_, x_, spec_.noise, rng), spec_.cagrad_c).vector;
    case Method::MoCo:
    case Method::MoCoNested: {
      const StepValues steps = spec_.schedule.at(k_ + 1, spec_.iterations);
      Jacobian h;
      if (nested_ != nullptr) {
        NestedStreams streams(rng.next_u64(), problem_.num_objectives());
        h = nested_gradient_estimate(dynamic_cast<const BilevelMOO&>(problem_), spec_.nested, nested_->state(), x_,
                                     steps.beta, streams)
                .h;
      } else {
        h = sample_jacobian(problem_, x_, spec_.noise, rng);
      }
      return moco_update(*moco_, h, steps, spec_.moco).state.direction();
    }
  }
  return Vector::Zero(x_.size());
}

std::optional<Jacobian> MethodRunner::nested_conditional_mean(const Vector& x) const {
  if (nested_ == nullptr) return std::nullopt;
  return nested_->conditional_mean(x);
}

double MethodRunner::tracking_error_now(const Jacobian& exact) const {
  if (moco_) return (moco_->tracking - exact).norm();
  return 0.0;
}

std::optional<Vector> MethodRunner::pending_direction() const {
  if (moco_ && spec_.moco.lagged_updates) return moco_->direction();
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

struct ExactDiagnostics {
  Vector objectives;
  Jacobian jacobian;
  Vector multi_gradient;
  double stationarity_sq;
  SimplexWeights weights;
};

ExactDiagnostics exact_diagnostics(const Problem& problem, const Vector& x, const std::optional<SimplexWeights>& warm) {
  Jacobian j = problem.jacobian(x);
  if (!j.allFinite()) throw NumericDivergence("non-finite exact Jacobian");
  LambdaSolveOptions options;
  options.tol = 1e-10;
  options.warm_start = warm;
  const LambdaSolveReport report = solve_lambda(j, 0.0, options);
  Vector d = multi_gradient(j, report.weights);
  const double stationarity = d.squaredNorm();
  return {problem.values(x), std::move(j), std::move(d), stationarity, report.weights};
}

bool escaped(const Vector& x, double threshold) { return !x.allFinite() || x.norm() > threshold; }

}  // namespace

TrajectoryRecord run(const Problem& problem, const RunSpec& spec) {
  MethodRunner runner(problem, spec);
  TrajectoryRecord record;
  record.method = to_string(spec.method);
  record.objectives = problem.num_objectives();
  record.dim = problem.dim();

  double sum_stationarity = 0.0;
  double sum_direction = 0.0;
  double sum_tracking = 0.0;
  double sum_nested_bias = 0.0;
  std::optional<SimplexWeights> warm;
  std::size_t completed = 0;

  auto make_row = [&](std::size_t k, const ExactDiagnostics& diag, double tracking, double direction_err,
                      const Vector& lambda, const Vector& x) {
    TrajectoryRow row;
    row.k = k;
    row.objectives = diag.objectives;
    row.stationarity_sq = diag.stationarity_sq;
    row.tracking_err = tracking;
    row.direction_err_sq = direction_err;
    row.lambda = lambda;
    if (spec.keep_path) row.x = x;
    return row;
  };

  try {
    for (std::size_t k = 0; k < spec.iterations; ++k) {
      const Vector x = runner.x();
      const ExactDiagnostics diag = exact_diagnostics(problem, x, warm);
      warm = diag.weights;
      const double pre_tracking = runner.tracking_error_now(diag.jacobian);

      const Direction& used = runner.step();

      double tracking = pre_tracking;
      if (!runner.moco_state()) {
        tracking = spec.method == Method::Mgda ? 0.0 : (runner.last_sample() - diag.jacobian).norm();
      }
      const double direction_err = (diag.multi_gradient - used.vector).squaredNorm();
      if (!std::isfinite(direction_err) || !std::isfinite(tracking) || !diag.objectives.allFinite())
        throw NumericDivergence("non-finite diagnostic at k = " + std::to_string(k));

      sum_stationarity += diag.stationarity_sq;
      sum_direction += direction_err;
      sum_tracking += tracking * tracking;
      if (const auto mean = runner.nested_conditional_mean(x)) sum_nested_bias += (*mean - diag.jacobian).squaredNorm();
      completed = k + 1;

      if (k % spec.record_every == 0) record.rows.push_back(make_row(k, diag, tracking, direction_err, used.weights, x));

      if (escaped(runner.x(), spec.divergence_threshold)) {
        record.summary.diverged = true;
        record.summary.divergence_reason = "iterate left the divergence threshold at k = " + std::to_string(k + 1);
        break;
      }
    }

    if (!record.summary.diverged) {
      const ExactDiagnostics diag = exact_diagnostics(problem, runner.x(), warm);
      double tracking = runner.moco_state() ? runner.tracking_error_now(diag.jacobian)
                                            : (spec.method == Method::Mgda ? 0.0 : (runner.last_sample() - diag.jacobian).norm());
      const Vector direction = runner.pending_direction().value_or(runner.last_direction().vector);
      Vector lambda = runner.moco_state() ? runner.moco_state()->lambda.values() : runner.last_direction().weights;
      const double direction_err = (diag.multi_gradient - direction).squaredNorm();
      if (!std::isfinite(direction_err) || !std::isfinite(tracking) || !diag.objectives.allFinite())
        throw NumericDivergence("non-finite diagnostic at final iterate");
      record.rows.push_back(make_row(spec.iterations, diag, tracking, direction_err, lambda, runner.x()));
      record.summary.final_stationarity_sq = diag.stationarity_sq;
    }
  } catch (const NumericDivergence& e) {
    record.summary.diverged = true;
    record.summary.divergence_reason = e.what();
  }

  record.summary.iterations_completed = completed;
  if (completed > 0) {
    record.summary.mean_stationarity_sq = sum_stationarity / static_cast<double>(completed);
    record.summary.mean_direction_err_sq = sum_direction / static_cast<double>(completed);
    record.summary.mean_tracking_err_sq = sum_tracking / static_cast<double>(completed);
    record.summary.mean_nested_bias_sq = sum_nested_bias / static_cast<double>(completed);
  }
  if (record.summary.diverged && !record.rows.empty())
    record.summary.final_stationarity_sq = record.rows.back().stationarity_sq;
  record.summary.samples_used = runner.samples_used();
  return record;
}

}  // namespace moco
