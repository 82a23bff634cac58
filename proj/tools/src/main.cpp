// Command-line runner: moco run|bias|sweep|presets|problem.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "moco/config.hpp"
#include "moco/errors.hpp"
#include "moco/experiment.hpp"
#include "moco/presets.hpp"
#include "moco/record_io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kAllDiverged = 3;
constexpr int kIoError = 4;

struct CommonOptions {
  std::string config_path;
  std::string output;
  std::optional<std::size_t> workers;
};

moco::ExperimentConfig load_config(const CommonOptions& options) {
  std::string text = moco::read_text_file(options.config_path);
  moco::ExperimentConfig config = moco::parse_config(text);
  if (const char* env = std::getenv("MOCO_SEED_OVERRIDE"); env != nullptr && *env != '\0') {
    moco::ExperimentConfig probe = config;
    moco::set_config_value(probe, "seeds", env);
    if (probe.seeds.size() != 1) throw moco::ConfigError({"MOCO_SEED_OVERRIDE must be a single integer"});
    config.seeds = probe.seeds;
  }
  if (!options.output.empty()) config.output = options.output;
  if (options.workers) config.workers = *options.workers;
  return config;
}

void print_run_summary(const moco::ExperimentResult& result) {
  std::printf("seed,start,method,final_stationarity_sq,mean_stationarity_sq,samples_used,diverged\n");
  for (const auto& run : result.runs) {
    const auto& s = run.record.summary;
    std::printf("%llu,%zu,%s,%.6e,%.6e,%llu,%s\n", static_cast<unsigned long long>(run.seed), run.start_index,
                run.record.method.c_str(), s.final_stationarity_sq, s.mean_stationarity_sq,
                static_cast<unsigned long long>(s.samples_used), s.diverged ? "yes" : "no");
  }
}

int cmd_run(const CommonOptions& options) {
  const moco::ExperimentConfig config = load_config(options);
  const moco::ExperimentResult result = moco::run_experiment(config);
  moco::write_experiment(config, result, config.output);
  print_run_summary(result);
  return result.all_diverged() ? kAllDiverged : kOk;
}

int cmd_bias(const CommonOptions& options) {
  const moco::ExperimentConfig config = load_config(options);
  const auto outcomes = moco::run_bias_protocol(config);
  moco::write_bias(config, outcomes, config.output);
  std::printf("seed,start,method,k,samples_used,bias,diverged\n");
  bool all_diverged = !outcomes.empty();
  for (const auto& out : outcomes) {
    all_diverged = all_diverged && out.diverged;
    const moco::BiasRow last = out.report.rows.empty() ? moco::BiasRow{} : out.report.rows.back();
    std::printf("%llu,%zu,%s,%zu,%llu,%.6e,%s\n", static_cast<unsigned long long>(out.seed), out.start_index,
                out.report.method.c_str(), last.k, static_cast<unsigned long long>(last.samples_used), last.bias,
                out.diverged ? "yes" : "no");
  }
  return all_diverged ? kAllDiverged : kOk;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> values;
  std::string item;
  for (char ch : text + ",") {
    if (ch == ',' || ch == ' ') {
      if (!item.empty()) values.push_back(item);
      item.clear();
    } else {
      item += ch;
    }
  }
  return values;
}

int cmd_sweep(const CommonOptions& options, const std::string& axis, const std::string& values) {
  const moco::ExperimentConfig config = load_config(options);
  const moco::SweepResult result = moco::sweep(config, axis, split_values(values));
  const std::filesystem::path dir = config.output;
  moco::write_text_file(dir / ("sweep_" + axis + ".csv"), moco::render_sweep_csv(result));
  moco::write_text_file(dir / ("sweep_" + axis + ".json"), moco::render_sweep_json(result));
  std::fputs(moco::render_sweep_csv(result).c_str(), stdout);
  if (result.running_slope)
    std::printf("slope(mean_stationarity) = %.4f\nslope(final_stationarity) = %.4f\n", *result.running_slope,
                *result.final_slope);
  if (result.nested_bias_slope) std::printf("slope(nested_bias) = %.4f\n", *result.nested_bias_slope);
  bool all_diverged = true;
  for (const auto& row : result.rows) all_diverged = all_diverged && row.diverged == row.runs;
  return all_diverged ? kAllDiverged : kOk;
}

int cmd_presets_list() {
  for (const auto& p : moco::list_presets()) std::printf("%-26s %s\n", p.name.c_str(), p.description.c_str());
  return kOk;
}

int cmd_presets_show(const std::string& name) {
  std::fputs(moco::serialize_config(moco::load_preset(name)).c_str(), stdout);
  return kOk;
}

int cmd_problem_dump(const std::string& name, const std::string& output) {
  moco::ExperimentConfig config;
  bool is_preset = false;
  for (const auto& p : moco::list_presets()) is_preset = is_preset || p.name == name;
  if (is_preset) {
    config = moco::load_preset(name);
  } else {
    moco::set_config_value(config, "problem", name);
    moco::validate_config(config);
  }
  const std::string text = moco::problem_to_json(*moco::build_problem(config));
  if (output.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    moco::write_text_file(output, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic multi-objective optimisation experiments"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("config", common.config_path, "Config file (key = value lines)")->required();
    sub->add_option("-o,--output", common.output, "Output directory (overrides the config)");
    sub->add_option("-j,--workers", common.workers, "Worker threads (0 = all cores)");
  };

  auto* run = app.add_subcommand("run", "Run every (seed, start) of a config and write trajectories");
  add_common(run);
  auto* bias = app.add_subcommand("bias", "Measure direction bias along each trajectory");
  add_common(bias);
  auto* sweep = app.add_subcommand("sweep", "Repeat a config over values of one numeric key");
  add_common(sweep);
  std::string axis, values;
  sweep->add_option("--axis", axis, "Config key to vary")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();

  auto* presets = app.add_subcommand("presets", "Built-in experiment presets");
  presets->require_subcommand(1);
  auto* presets_list = presets->add_subcommand("list", "List preset names");
  auto* presets_show = presets->add_subcommand("show", "Print a preset as config text");
  std::string preset_name;
  presets_show->add_option("name", preset_name)->required();

  auto* problem = app.add_subcommand("problem", "Problem instances");
  problem->require_subcommand(1);
  auto* dump = problem->add_subcommand("dump", "Print a problem instance (problem or preset name) as JSON");
  std::string dump_name, dump_output;
  dump->add_option("name", dump_name)->required();
  dump->add_option("-o,--output", dump_output, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(common);
    if (*bias) return cmd_bias(common);
    if (*sweep) return cmd_sweep(common, axis, values);
    if (*presets_list) return cmd_presets_list();
    if (*presets_show) return cmd_presets_show(preset_name);
    if (*dump) return cmd_problem_dump(dump_name, dump_output);
  } catch (const moco::ConfigError& e) {
    for (const auto& message : e.errors()) std::fprintf(stderr, "config error: %s\n", message.c_str());
    return kConfigError;
  } catch (const moco::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIoError;
  } catch (const moco::InvalidInput& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kOk;
}
