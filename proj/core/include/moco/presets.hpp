#pragma once

#include <string>
#include <vector>

#include "moco/config.hpp"

namespace moco {

/// Starting points of the two-objective toy protocol.
std::vector<Vector> toy_starts();

/// Gaussian noise level used by the toy presets.
inline constexpr double kToyNoiseSigma = 1.0;
/// Constant weight step of the toy presets, about K^(-3/4) for K = 70000.
inline constexpr double kToyGamma = 3e-4;

struct PresetInfo {
  std::string name;
  std::string description;
};

std::vector<PresetInfo> list_presets();
/// Full config text of a preset. Throws ConfigError for unknown names.
std::string preset_text(const std::string& name);
ExperimentConfig load_preset(const std::string& name);

}  // namespace moco
