#include "moco/presets.hpp"

#include <string>

#include "moco/record_io.hpp"

namespace moco {

namespace {

struct Preset {
  const char* name;
  const char* description;
  std::string body;
};

// Toy protocol. The learning-rate decay of 0.05 is applied per 10^4
// iterations: read per 10^3 iterations the step budget runs out before even
// noiseless MGDA reaches the Pareto set from (-8.5, 7.5).
std::string toy_body(const std::string& method, bool noisy, const std::string& lr0 = "0.001") {
  std::string text =
      "problem = toy\n"
      "problem.x0 = -8.5,7.5; -8.5,5; 10,-8\n"
      "method = " + method + "\n"
      "method.lagged_updates = true\n"
      "schedule = toy\n"
      "schedule.lr0 = " + lr0 + "\n"
      "schedule.lr_decay = 0.05\n"
      "schedule.lr_decay_interval = 10000\n"
      "schedule.beta_scale = 5\n"
      "schedule.gamma = " + render_real(kToyGamma) + "\n"
      "K = 70000\n"
      "seeds = 0\n"
      "record_every = 100\n"
      "bias.n_sets = 10\n"
      "bias.every = 500\n";
  if (noisy) text += "noise.kind = gaussian\nnoise.sigma = " + render_real(kToyNoiseSigma) + "\n";
  return text;
}

const char* kQuadratic =
    "problem = quadratic\n"
    "problem.objectives = 3\n"
    "problem.dim = 10\n"
    "problem.mu = 0.5\n"
    "problem.L = 2\n"
    "problem.instance_seed = 1\n"
    "noise.kind = gaussian\n"
    "noise.sigma = 1\n"
    "seeds = 0,1,2,3,4\n"
    "record_every = 1000\n";

const char* kBilevel =
    "problem = bilevel\n"
    "problem.objectives = 2\n"
    "problem.dim = 5\n"
    "problem.mu = 0.5\n"
    "problem.L = 1\n"
    "problem.instance_seed = 1\n"
    "method = moco-nested\n"
    "nested.hessian_inverse = neumann\n"
    "nested.neumann_depth = 20\n"
    "noise.kind = gaussian\n"
    "noise.sigma = 0.1\n"
    "seeds = 0,1,2,3,4\n"
    "record_every = 100\n";

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table{
      {"fig1-mgda", "toy protocol, exact gradients, MGDA", toy_body("mgda", false)},
      {"fig1-smg", "toy protocol, noisy gradients, stochastic MGDA", toy_body("smg", true)},
      {"fig1-smg-growing", "toy protocol, stochastic MGDA with batch growing by one every 10000 iterations",
       toy_body("smg-growing", true)},
      {"fig1-pcgrad", "toy protocol, noisy gradients, PCGrad", toy_body("pcgrad", true)},
      {"fig1-cagrad", "toy protocol, noisy gradients, CAGrad (c = 0.5)", toy_body("cagrad", true)},
      {"fig1-moco", "toy protocol, noisy gradients, MoCo with beta_k = 5 / sqrt(k)", toy_body("moco", true)},
      {"bias-toy-moco", "toy bias protocol (initial lr 0.0025), MoCo", toy_body("moco", true, "0.0025")},
      {"bias-toy-smg", "toy bias protocol (initial lr 0.0025), stochastic MGDA", toy_body("smg", true, "0.0025")},
      {"bias-toy-smg-growing", "toy bias protocol (initial lr 0.0025), stochastic MGDA with growing batch",
       toy_body("smg-growing", true, "0.0025")},
      {"lemma3-quadratic", "tracking-error trend on a noisy 10-d, 3-objective quadratic (theorem1 rates)",
       std::string(kQuadratic) + "method = moco\nschedule = theorem1\nK = 100000\n"},
      {"theorem2-quadratic", "MoCo with theorem2 rates on the noisy quadratic",
       std::string(kQuadratic) + "method = moco\nschedule = theorem2\nK = 10000\n"},
      {"theorem3-quadratic", "MoCo with theorem3 rates on the noisy quadratic (sweep K)",
       std::string(kQuadratic) + "method = moco\nschedule = theorem3\nK = 10000\n"},
      // alpha / beta = K^(-2/5) under theorem1, so sweeping K shrinks the ratio.
      {"nested-single-timescale", "nested MoCo, one inner step with eta = beta, Neumann Hessian inverse",
       std::string(kBilevel) + "schedule = theorem1\nnested.inner_steps = 1\nnested.inner_schedule = tied\nK = 1000\n"},
      {"nested-multi-step", "nested MoCo, ceil(1/beta) inner steps with eta_t = 1/(mu t)",
       std::string(kBilevel) +
           "schedule = constant\nschedule.alpha = 0.01\nschedule.beta = 0.1\nschedule.gamma = 0.1\n"
           "nested.inner_steps = 0\nnested.inner_schedule = robbins-monro\nnested.mu = 1\nK = 2000\n"},
  };
  return table;
}

}  // namespace

std::vector<Vector> toy_starts() {
  return {Eigen::Vector2d(-8.5, 7.5), Eigen::Vector2d(-8.5, 5.0), Eigen::Vector2d(10.0, -8.0)};
}

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& p : presets()) out.push_back({p.name, p.description});
  return out;
}

std::string preset_text(const std::string& name) {
  for (const auto& p : presets())
    if (name == p.name) return p.body;
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + std::string(p.name);
  throw ConfigError({"unknown preset '" + name + "' (known: " + known + ")"});
}

ExperimentConfig load_preset(const std::string& name) { return parse_config(preset_text(name)); }

}  // namespace moco
