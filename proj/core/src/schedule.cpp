#include "moco/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "moco/errors.hpp"

namespace moco {

double RateSpec::value(std::size_t k, std::size_t horizon) const {
  const double kk = static_cast<double>(std::max<std::size_t>(k, 1));
  const double big_k = static_cast<double>(std::max<std::size_t>(horizon, 1));
  double v = scale;
  if (horizon_power != 0.0) v *= std::pow(big_k, -horizon_power);
  if (iter_power != 0.0) v *= std::pow(kk, -iter_power);
  if (decay != 0.0) v *= std::exp(-decay * kk / decay_interval);
  return std::min(v, cap);
}

StepValues StepSchedule::at(std::size_t k, std::size_t horizon) const {
  const double big_k = static_cast<double>(std::max<std::size_t>(horizon, 1));
  const double rho = rho_scale == 0.0 ? 0.0 : rho_scale * std::pow(big_k, -rho_horizon_power);
  return {alpha.value(k, horizon), beta.value(k, horizon), gamma.value(k, horizon), rho};
}

void StepSchedule::validate() const {
  for (const RateSpec* r : {&alpha, &beta, &gamma}) {
    if (!(r->scale >= 0.0) || !std::isfinite(r->scale)) throw InvalidInput("schedule: step scales must be finite and >= 0");
    if (!std::isfinite(r->horizon_power) || !std::isfinite(r->iter_power) || !std::isfinite(r->decay))
      throw InvalidInput("schedule: exponents must be finite");
    if (!(r->decay_interval > 0.0)) throw InvalidInput("schedule: decay interval must be > 0");
    if (!(r->cap >= 0.0)) throw InvalidInput("schedule: caps must be >= 0");
  }
  if (!(rho_scale >= 0.0) || !std::isfinite(rho_scale)) throw InvalidInput("schedule: rho must be finite and >= 0");
}

namespace {
RateSpec horizon_rate(double scale, double power) { return {scale, power, 0.0, 0.0, std::numeric_limits<double>::infinity()}; }
RateSpec tracking_rate(double scale, double horizon_power, double iter_power) {
  return {scale, horizon_power, iter_power, 0.0, 1.0};
}
RateSpec fixed(double v) { return {v, 0.0, 0.0, 0.0, std::numeric_limits<double>::infinity()}; }
RateSpec inverse_sqrt(double scale) { return {scale, 0.0, 0.5, 0.0, std::numeric_limits<double>::infinity()}; }
}  // namespace

StepSchedule StepSchedule::theorem1(double a, double b, double c, double r) {
  StepSchedule s;
  s.alpha = horizon_rate(a, 0.9);
  s.beta = tracking_rate(b, 0.5, 0.0);
  s.gamma = horizon_rate(c, 0.4);
  s.rho_scale = r;
  s.rho_horizon_power = 0.2;
  return s;
}

StepSchedule StepSchedule::theorem2(double a, double b, double c) {
  StepSchedule s;
  s.alpha = horizon_rate(a, 0.6);
  s.beta = tracking_rate(b, 0.4, 0.0);
  s.gamma = horizon_rate(c, 1.0);
  return s;
}

StepSchedule StepSchedule::theorem3(double a, double b, double c) {
  StepSchedule s;
  s.alpha = horizon_rate(a, 0.5);
  s.beta = tracking_rate(b, 0.5, 0.0);
  s.gamma = horizon_rate(c, 0.75);
  return s;
}

StepSchedule StepSchedule::toy(double lr0, double decay, double beta_scale, double gamma, double decay_interval) {
  StepSchedule s;
  s.alpha = {lr0, 0.0, 0.0, decay, std::numeric_limits<double>::infinity(), decay_interval};
  s.beta = tracking_rate(beta_scale, 0.0, 0.5);
  s.gamma = fixed(gamma);
  return s;
}

StepSchedule StepSchedule::constant(double alpha, double beta, double gamma, double rho) {
  StepSchedule s;
  s.alpha = fixed(alpha);
  s.beta = {beta, 0.0, 0.0, 0.0, 1.0};
  s.gamma = fixed(gamma);
  s.rho_scale = rho;
  return s;
}

std::vector<std::string> StepSchedule::table7_names() {
  return {"cityscapes", "nyuv2", "office31", "officehome", "mt10"};
}

StepSchedule StepSchedule::table7(const std::string& name) {
  StepSchedule s;
  if (name == "cityscapes") {
    s.alpha = fixed(1e-4);
    s.beta = {0.05, 0.0, 0.5, 0.0, 1.0};
    s.gamma = inverse_sqrt(0.1);
  } else if (name == "nyuv2") {
    s.alpha = fixed(1e-4);
    s.beta = {0.99, 0.0, 0.0, 0.0, 1.0};
    s.gamma = fixed(0.1);
  } else if (name == "office31" || name == "officehome") {
    s.alpha = fixed(1e-4);
    s.beta = {0.5, 0.0, 0.5, 0.0, 1.0};
    s.gamma = inverse_sqrt(0.1);
  } else if (name == "mt10") {
    s.alpha = fixed(3e-4);
    s.beta = {0.99, 0.0, 0.0, 0.0, 1.0};
    s.gamma = fixed(10.0);
  } else {
    throw InvalidInput("unknown table7 preset '" + name + "'");
  }
  return s;
}

}  // namespace moco
