#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "moco/config.hpp"
#include "moco/metrics.hpp"
#include "moco/solvers.hpp"

namespace moco {

/// One (seed, start) run. Runs are ordered seed-major, then by start index.
struct RunOutcome {
  std::uint64_t seed = 0;
  std::size_t start_index = 0;
  Vector x0;
  TrajectoryRecord record;
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  double wall_seconds = 0.0;

  bool all_diverged() const;
};

/// Runs every (seed, start) pair on a worker pool. Results do not depend on
/// the number of workers.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes per-run <stem>.csv, <stem>.path.csv and <stem>.meta.json plus a
/// timing.json holding the only non-deterministic value (wall time).
void write_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                      const std::filesystem::path& directory);

struct BiasOutcome {
  std::uint64_t seed = 0;
  std::size_t start_index = 0;
  BiasReport report;
  bool diverged = false;
  std::string divergence_reason;
};

/// Walks each run's own trajectory and measures direction_bias with
/// config.bias_sets sample sets every config.bias_every iterations (and at K).
std::vector<BiasOutcome> run_bias_protocol(const ExperimentConfig& config);
void write_bias(const ExperimentConfig& config, const std::vector<BiasOutcome>& outcomes,
                const std::filesystem::path& directory);

struct SweepRow {
  std::string value;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  double final_mean = 0.0;
  double final_stderr = 0.0;
  double running_mean = 0.0;
  double running_stderr = 0.0;
  /// moco-nested only: mean_nested_bias_sq across seeds.
  double nested_bias_mean = 0.0;
  double nested_bias_stderr = 0.0;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;
  /// Least-squares slopes of log(mean) against log(K); only for axis K.
  std::optional<double> final_slope;
  std::optional<double> running_slope;
  /// moco-nested only.
  bool nested = false;
  /// Slope of log(nested bias) against log(axis value), when every value is
  /// positive and the bias is nonzero.
  std::optional<double> nested_bias_slope;
};

/// Runs the template once per value of a numeric key. Throws ConfigError for
/// non-numeric axes or unparsable values.
SweepResult sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<std::string>& values);
std::string render_sweep_csv(const SweepResult& result);
std::string render_sweep_json(const SweepResult& result);

/// Least-squares slope of y on x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs `count` independent jobs on up to `workers` threads (0 = hardware
/// concurrency). job(i) must only touch slot i of any shared output.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace moco
