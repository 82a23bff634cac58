#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace moco {

/// A step size of the form
///   min(cap, scale * K^(-horizon_power) * k^(-iter_power) * exp(-decay * k / decay_interval))
/// where k >= 1 is the iteration and K the horizon.
struct RateSpec {
  double scale = 1.0;
  double horizon_power = 0.0;
  double iter_power = 0.0;
  double decay = 0.0;
  double cap = std::numeric_limits<double>::infinity();
  /// Iterations per unit of `decay`.
  double decay_interval = 1000.0;

  double value(std::size_t k, std::size_t horizon) const;

  friend bool operator==(const RateSpec&, const RateSpec&) = default;
};

struct StepValues {
  double alpha;
  double beta;
  double gamma;
  double rho;
};

/// Step sizes alpha_k (x), beta_k (tracking), gamma_k (weights) and the
/// regularisation rho(K).
struct StepSchedule {
  RateSpec alpha;
  RateSpec beta{1.0, 0.0, 0.0, 0.0, 1.0};
  RateSpec gamma;
  double rho_scale = 0.0;
  double rho_horizon_power = 0.0;

  StepValues at(std::size_t k, std::size_t horizon) const;
  void validate() const;

  /// alpha = a K^-9/10, beta = b K^-1/2, gamma = c K^-2/5, rho = r K^-1/5.
  static StepSchedule theorem1(double a = 1.0, double b = 1.0, double c = 1.0, double r = 1.0);
  /// alpha = a K^-3/5, beta = b K^-2/5, gamma = c K^-1, rho = 0.
  static StepSchedule theorem2(double a = 1.0, double b = 1.0, double c = 1.0);
  /// alpha = a K^-1/2, beta = b K^-1/2, gamma = c K^-3/4, rho = 0.
  static StepSchedule theorem3(double a = 1.0, double b = 1.0, double c = 1.0);
  /// alpha = lr0 exp(-decay k / decay_interval), beta = min(1, beta_scale / sqrt(k)),
  /// gamma constant, rho = 0.
  static StepSchedule toy(double lr0 = 1e-3, double decay = 0.05, double beta_scale = 5.0, double gamma = 0.1,
                          double decay_interval = 1000.0);
  /// Per-experiment hyper-parameter presets: cityscapes, nyuv2, office31,
  /// officehome, mt10. Throws InvalidInput for other names.
  static StepSchedule table7(const std::string& name);
  static StepSchedule constant(double alpha, double beta, double gamma, double rho = 0.0);

  static std::vector<std::string> table7_names();

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;
};

}  // namespace moco
