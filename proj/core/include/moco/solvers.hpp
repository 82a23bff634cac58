#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "moco/linalg.hpp"
#include "moco/oracles.hpp"
#include "moco/problems.hpp"
#include "moco/rng.hpp"
#include "moco/schedule.hpp"
#include "moco/subproblem.hpp"

namespace moco {

enum class Method { Mgda, Smg, SmgGrowingBatch, MoCo, MoCoNested, PCGrad, CAGrad };

std::string to_string(Method method);
std::optional<Method> parse_method(const std::string& name);
std::vector<std::string> method_names();

/// An update direction together with the objective weights that produced it.
struct Direction {
  Vector vector;
  Vector weights;
};

// ---------------------------------------------------------------------------
// Stateless directions and steps
// ---------------------------------------------------------------------------

/// d = J lambda* with lambda* from the unregularised subproblem.
Direction mgda_direction(const Jacobian& jacobian);

/// Weights solved on the sampled Jacobian itself. M = 2 uses the closed form.
Direction smg_direction(const Jacobian& sampled);

/// Gradient surgery: each gradient is projected onto the normal plane of every
/// gradient it conflicts with, visited in a fresh random order, then averaged.
Direction pcgrad_direction(const Jacobian& jacobian, RngStream& rng);

struct CagradDual {
  SimplexWeights weights;
  double objective;
};

/// Dual of the conflict-averse problem:
///   min_{w in simplex} g_w . g_0 + c ||g_0|| ||g_w||,  g_w = J w, g_0 = mean column.
CagradDual cagrad_dual(const Jacobian& jacobian, double c);

/// (g_0 + c ||g_0|| / ||g_w|| g_w) / (1 + c).
Direction cagrad_direction(const Jacobian& jacobian, double c);

Vector mgda_step(const Vector& x, const Problem& problem, double alpha);
Vector smg_step(const Vector& x, const Problem& problem, double alpha, const NoiseModel& noise, RngStream& rng);
Vector pcgrad_step(const Vector& x, const Problem& problem, double alpha, const NoiseModel& noise, RngStream& rng);
Vector cagrad_step(const Vector& x, const Problem& problem, double alpha, double c, const NoiseModel& noise,
                   RngStream& rng);

// ---------------------------------------------------------------------------
// Gradient oracles feeding MoCo
// ---------------------------------------------------------------------------

class GradientOracle {
 public:
  virtual ~GradientOracle() = default;
  /// Stochastic estimate h_k of the Jacobian at x. `beta` is the current
  /// tracking step (used by nested oracles with tied inner steps).
  virtual Jacobian sample(const Vector& x, double beta) = 0;
  /// Samples consumed per call.
  virtual std::uint64_t samples_per_call() const { return 1; }
};

class SampledOracle final : public GradientOracle {
 public:
  SampledOracle(const Problem& problem, NoiseModel noise, RngStream rng)
      : problem_(problem), noise_(noise), rng_(rng) {}

  Jacobian sample(const Vector& x, double) override { return sample_jacobian(problem_, x, noise_, rng_); }
  std::uint64_t samples_per_call() const override { return noise_.batch_size; }

 private:
  const Problem& problem_;
  NoiseModel noise_;
  RngStream rng_;
};

class NestedGradientOracle final : public GradientOracle {
 public:
  NestedGradientOracle(const BilevelMOO& problem, NestedOracleConfig config, InnerState initial, std::uint64_t seed);

  Jacobian sample(const Vector& x, double beta) override;
  std::uint64_t samples_per_call() const override { return config_.inner_steps + 1; }

  const InnerState& state() const { return state_; }
  /// Noise-free estimator value at the current inner iterates.
  Jacobian conditional_mean(const Vector& x) const;

 private:
  const BilevelMOO& problem_;
  NestedOracleConfig config_;
  InnerState state_;
  NestedStreams streams_;
};

// ---------------------------------------------------------------------------
// MoCo
// ---------------------------------------------------------------------------

enum class LambdaProjection { Euclidean, Softmax };

struct MoCoOptions {
  LambdaProjection projection = LambdaProjection::Euclidean;
  /// true: lambda_{k+1} from Y_k and x_{k+1} = x_k - alpha Y_k lambda_k.
  /// false: lambda_{k+1} from Y_{k+1} and x_{k+1} = x_k - alpha Y_{k+1} lambda_{k+1}.
  bool lagged_updates = false;
  /// Weight-update steps per iteration (1 = single projected step).
  std::size_t lambda_steps = 1;
};

struct MoCoState {
  Vector x;
  Jacobian tracking;  ///< Y_k, column m tracks grad f_m(x_k)
  SimplexWeights lambda;
  std::size_t k = 0;
  Vector caps;  ///< per-column norm bounds C_{y,m}

  /// Y_0 = first sample at x_0 (projected onto the caps), lambda_0 uniform.
  static MoCoState initial(Vector x0, const Jacobian& first_sample, Vector caps);

  Vector direction() const { return tracking * lambda.values(); }
};

/// Tracking update Y <- P_caps(Y - beta (Y - h)), column by column.
Jacobian tracking_update(const Jacobian& tracking, const Jacobian& h, double beta, const Vector& caps);

SimplexWeights moco_lambda_update(const SimplexWeights& lambda, const Jacobian& tracking, double rho, double gamma,
                                  const MoCoOptions& options);

struct MoCoStep {
  MoCoState state;
  Vector direction;  ///< the vector the x-update moved along
  Jacobian h;        ///< gradient estimate consumed by the step
};

/// Applies one iteration given the gradient estimate h_k at state.x.
MoCoStep moco_update(const MoCoState& state, const Jacobian& h, const StepValues& steps, const MoCoOptions& options);

/// One full MoCo iteration: draws h_k from the oracle and applies moco_update
/// with schedule values at iteration state.k + 1.
MoCoState moco_step(const MoCoState& state, GradientOracle& oracle, const StepSchedule& schedule,
                    std::size_t horizon, const MoCoOptions& options = {});

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct RunSpec {
  Method method = Method::MoCo;
  StepSchedule schedule;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  NoiseModel noise;
  MoCoOptions moco;
  /// Tracking caps; problem.gradient_bounds() when empty.
  std::optional<Vector> caps;
  double cagrad_c = 0.5;
  /// Growing-batch SMG uses batch 1 + floor(k / batch_growth_every).
  std::size_t batch_growth_every = 10000;
  NestedOracleConfig nested;
  Vector x0;
  double divergence_threshold = 1e8;
  bool keep_path = true;

  void validate(const Problem& problem) const;
};

/// Row for iterate x_k. Diagnostics use exact gradients:
///   stationarity_sq  = min_{lambda} ||grad F(x_k) lambda||^2
///   tracking_err     = ||Y_k - grad F(x_k)||_F (sampled Jacobian for stateless methods)
///   direction_err_sq = ||d(x_k) - D_k||^2, D_k the direction used at x_k
/// The final row (k = K) reuses the most recent direction of stateless methods.
struct TrajectoryRow {
  std::size_t k = 0;
  Vector objectives;
  double stationarity_sq = 0.0;
  double tracking_err = 0.0;
  double direction_err_sq = 0.0;
  Vector lambda;
  Vector x;
};

struct RunSummary {
  std::size_t iterations_completed = 0;
  bool diverged = false;
  std::string divergence_reason;
  double final_stationarity_sq = 0.0;
  /// Averages over the iterates x_0 .. x_{K-1}.
  double mean_stationarity_sq = 0.0;
  double mean_direction_err_sq = 0.0;
  double mean_tracking_err_sq = 0.0;
  /// moco-nested only: mean of ||E[h_k | z_k] - grad F(x_k)||_F^2, the
  /// estimator bias given the inner iterates reached at x_k.
  double mean_nested_bias_sq = 0.0;
  std::uint64_t samples_used = 0;
};

struct TrajectoryRecord {
  std::string method;
  std::size_t objectives = 0;
  std::size_t dim = 0;
  std::vector<TrajectoryRow> rows;
  RunSummary summary;
};

/// Steps any method one iteration at a time and exposes its state for
/// diagnostics. Owns all randomness of the run.
class MethodRunner {
 public:
  MethodRunner(const Problem& problem, RunSpec spec);
  ~MethodRunner();
  MethodRunner(const MethodRunner&) = delete;
  MethodRunner& operator=(const MethodRunner&) = delete;

  /// Advances one iteration; returns the direction used at the pre-step iterate.
  const Direction& step();

  /// A fresh stochastic direction at the current iterate, as the method would
  /// compute it from one new set of samples, without touching the run state.
  Vector sample_direction(RngStream& rng) const;

  const Vector& x() const { return x_; }
  std::size_t k() const { return k_; }
  std::uint64_t samples_used() const { return samples_used_; }
  std::size_t current_batch() const;
  const RunSpec& spec() const { return spec_; }
  const Problem& problem() const { return problem_; }
  const std::optional<MoCoState>& moco_state() const { return moco_; }
  /// Noise-free nested estimator at `x` and the current inner iterates
  /// (MoCoNested only).
  std::optional<Jacobian> nested_conditional_mean(const Vector& x) const;
  /// Tracking error of the method's current Jacobian estimate at x_k.
  double tracking_error_now(const Jacobian& exact) const;
  /// Direction the method will use at x_k, when it is known without sampling.
  std::optional<Vector> pending_direction() const;
  const Direction& last_direction() const { return last_; }
  const Jacobian& last_sample() const { return last_sample_; }

 private:
  const Problem& problem_;
  RunSpec spec_;
  Vector x_;
  std::size_t k_ = 0;
  std::uint64_t samples_used_ = 0;
  RngStream sample_rng_;
  RngStream order_rng_;
  std::optional<MoCoState> moco_;
  std::unique_ptr<GradientOracle> oracle_;
  NestedGradientOracle* nested_ = nullptr;
  Direction last_;
  Jacobian last_sample_;
};

/// Drives `spec.method` for spec.iterations steps, recording a row every
/// record_every iterations (plus the initial and final iterates). Stops early
/// with summary.diverged set if an iterate becomes non-finite or leaves the
/// divergence threshold.
TrajectoryRecord run(const Problem& problem, const RunSpec& spec);

}  // namespace moco
