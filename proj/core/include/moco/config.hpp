#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "moco/oracles.hpp"
#include "moco/problems.hpp"
#include "moco/schedule.hpp"
#include "moco/solvers.hpp"

namespace moco {

/// Every validation problem found in a config, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Flat experiment description. Each member maps to one `key = value` line;
/// see README.md for the full key list.
struct ExperimentConfig {
  // problem
  std::string problem = "toy";  ///< toy | quadratic | bilevel
  ToyVariant toy_variant = ToyVariant::Corrected;
  InstanceSpec instance;
  std::string problem_file;  ///< JSON instance written by `problem dump`
  std::vector<Vector> x0;    ///< starts; empty selects the problem default

  // method
  Method method = Method::MoCo;
  double cagrad_c = 0.5;
  LambdaProjection lambda_projection = LambdaProjection::Euclidean;
  bool lagged_updates = false;
  std::size_t lambda_steps = 1;
  double y_cap = 0.0;  ///< 0 selects the problem's gradient bounds
  std::size_t batch_growth_every = 10000;

  // nested oracle
  std::size_t inner_steps = 1;  ///< 0 selects ceil(1 / beta_K)
  InnerSchedule::Kind inner_schedule = InnerSchedule::Kind::TiedToBeta;
  double inner_eta = 0.5;
  double inner_mu = 1.0;
  HessianInverseSpec::Kind hessian_inverse = HessianInverseSpec::Kind::Neumann;
  std::size_t neumann_depth = 20;
  double neumann_scale = 0.0;
  double hessian_sigma = 0.0;

  // schedule
  std::string schedule = "toy";  ///< toy | theorem1 | theorem2 | theorem3 | constant | table7:<name>
  double rate_a = 1.0, rate_b = 1.0, rate_c = 1.0, rate_r = 1.0;
  double lr0 = 1e-3, lr_decay = 0.05, lr_decay_interval = 1000.0, beta_scale = 5.0, gamma = 0.1;
  double alpha = 1e-3, beta = 0.1, rho = 0.0;

  // run
  std::size_t iterations = 1000;
  std::vector<std::uint64_t> seeds{0};
  NoiseModel::Kind noise_kind = NoiseModel::Kind::None;
  double noise_sigma = 0.0;
  std::size_t noise_batch = 1;
  std::size_t record_every = 1;
  double divergence_threshold = 1e8;
  std::size_t bias_sets = 10;
  std::size_t bias_every = 1000;
  std::size_t workers = 0;  ///< 0 selects the hardware concurrency
  std::string output = "moco-out";

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

/// Parses `key = value` lines ('#' starts a comment). A `preset = <name>` line
/// loads that preset first; other lines override it. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);

/// Canonical text listing every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Sets one key from its textual value. Throws ConfigError.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();
bool is_numeric_key(const std::string& key);

/// Checks cross-field constraints. Throws ConfigError listing all failures.
void validate_config(const ExperimentConfig& config);

std::unique_ptr<Problem> build_problem(const ExperimentConfig& config);
StepSchedule build_schedule(const ExperimentConfig& config);
NoiseModel build_noise(const ExperimentConfig& config);
/// The configured starts, or the problem default when none are given.
std::vector<Vector> resolve_starts(const ExperimentConfig& config, const Problem& problem);
RunSpec build_run_spec(const ExperimentConfig& config, const Problem& problem, std::uint64_t seed, const Vector& x0);

}  // namespace moco
