#include "moco/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "moco/errors.hpp"
#include "moco/record_io.hpp"

#ifndef MOCO_GIT_DESCRIBE
#define MOCO_GIT_DESCRIBE "unknown"
#endif

namespace moco {

namespace {

using nlohmann::json;

struct Job {
  std::uint64_t seed;
  std::size_t start_index;
};

std::vector<Job> jobs_for(const ExperimentConfig& config, std::size_t starts) {
  std::vector<Job> jobs;
  for (const auto seed : config.seeds)
    for (std::size_t s = 0; s < starts; ++s) jobs.push_back({seed, s});
  return jobs;
}

std::string stem(std::uint64_t seed, std::size_t start_index) {
  return "seed" + std::to_string(seed) + "_start" + std::to_string(start_index);
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
  if (count == 0) return;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

bool ExperimentResult::all_diverged() const {
  return !runs.empty() &&
         std::all_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.record.summary.diverged; });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const auto begin = std::chrono::steady_clock::now();
  const std::unique_ptr<Problem> problem = build_problem(config);
  const std::vector<Vector> starts = resolve_starts(config, *problem);
  const std::vector<Job> jobs = jobs_for(config, starts.size());

  ExperimentResult result;
  result.runs.resize(jobs.size());
  parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    RunOutcome& out = result.runs[i];
    out.seed = job.seed;
    out.start_index = job.start_index;
    out.x0 = starts[job.start_index];
    out.record = run(*problem, build_run_spec(config, *problem, job.seed, out.x0));
  });
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return result;
}

void write_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                      const std::filesystem::path& directory) {
  const std::string config_text = serialize_config(config);
  for (const auto& run : result.runs) {
    const std::string name = stem(run.seed, run.start_index);
    write_text_file(directory / (name + ".csv"), render_csv(run.record));
    write_text_file(directory / (name + ".path.csv"), render_path_csv(run.record));
    const RunSummary& s = run.record.summary;
    json meta;
    meta["config"] = config_text;
    meta["git_describe"] = MOCO_GIT_DESCRIBE;
    meta["method"] = run.record.method;
    meta["seed"] = run.seed;
    meta["start_index"] = run.start_index;
    meta["x0"] = vector_json(run.x0);
    meta["diverged"] = s.diverged;
    meta["divergence_reason"] = s.divergence_reason;
    meta["iterations_completed"] = s.iterations_completed;
    meta["final_stationarity_sq"] = s.final_stationarity_sq;
    meta["mean_stationarity_sq"] = s.mean_stationarity_sq;
    meta["mean_direction_err_sq"] = s.mean_direction_err_sq;
    meta["mean_tracking_err_sq"] = s.mean_tracking_err_sq;
    meta["mean_nested_bias_sq"] = s.mean_nested_bias_sq;
    meta["samples_used"] = s.samples_used;
    write_text_file(directory / (name + ".meta.json"), meta.dump(2) + "\n");
  }
  json timing;
  timing["wall_seconds"] = result.wall_seconds;
  write_text_file(directory / "timing.json", timing.dump(2) + "\n");
}

std::vector<BiasOutcome> run_bias_protocol(const ExperimentConfig& config) {
  validate_config(config);
  const std::unique_ptr<Problem> problem = build_problem(config);
  const std::vector<Vector> starts = resolve_starts(config, *problem);
  const std::vector<Job> jobs = jobs_for(config, starts.size());

  std::vector<BiasOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    BiasOutcome& out = outcomes[i];
    out.seed = job.seed;
    out.start_index = job.start_index;
    out.report.method = to_string(config.method);
    const RunSpec spec = build_run_spec(config, *problem, job.seed, starts[job.start_index]);
    MethodRunner runner(*problem, spec);
    RngStream bias_rng = RngStream(job.seed).substream(0xb1a5).substream(job.start_index);
    const DirectionSampler sampler = [&runner](RngStream& rng) { return runner.sample_direction(rng); };
    try {
      for (std::size_t k = 1; k <= config.iterations; ++k) {
        runner.step();
        if (!runner.x().allFinite() || runner.x().norm() > config.divergence_threshold)
          throw NumericDivergence("iterate left the divergence threshold at k = " + std::to_string(k));
        if (k % config.bias_every != 0 && k != config.iterations) continue;
        const double bias = direction_bias(sampler, runner.x(), config.bias_sets, *problem, bias_rng);
        if (!std::isfinite(bias)) throw NumericDivergence("non-finite bias at k = " + std::to_string(k));
        out.report.rows.push_back({k, runner.samples_used(), bias});
      }
    } catch (const NumericDivergence& e) {
      out.diverged = true;
      out.divergence_reason = e.what();
    }
  });
  return outcomes;
}

void write_bias(const ExperimentConfig& config, const std::vector<BiasOutcome>& outcomes,
                const std::filesystem::path& directory) {
  for (const auto& out : outcomes) {
    const std::string name = "bias_" + stem(out.seed, out.start_index);
    write_text_file(directory / (name + ".csv"), render_bias_csv(out.report));
    json meta;
    meta["config"] = serialize_config(config);
    meta["git_describe"] = MOCO_GIT_DESCRIBE;
    meta["method"] = out.report.method;
    meta["seed"] = out.seed;
    meta["start_index"] = out.start_index;
    meta["n_sets"] = config.bias_sets;
    meta["diverged"] = out.diverged;
    meta["divergence_reason"] = out.divergence_reason;
    write_text_file(directory / (name + ".meta.json"), meta.dump(2) + "\n");
  }
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_slope: need at least two paired points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidInput("fit_slope: x values are all equal");
  return sxy / sxx;
}

SweepResult sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<std::string>& values) {
  if (!is_numeric_key(axis)) throw ConfigError({"sweep axis '" + axis + "' is not a numeric config key"});
  if (values.empty()) throw ConfigError({"sweep needs at least one value"});
  SweepResult result;
  result.axis = axis;
  result.nested = base.method == Method::MoCoNested;
  std::vector<double> log_k, log_final, log_running, log_value, log_bias;
  for (const auto& value : values) {
    ExperimentConfig config = base;
    set_config_value(config, axis, value);
    const ExperimentResult runs = run_experiment(config);
    std::vector<double> finals, running, bias;
    SweepRow row;
    row.value = value;
    row.runs = runs.runs.size();
    for (const auto& run : runs.runs) {
      if (run.record.summary.diverged) {
        ++row.diverged;
        continue;
      }
      finals.push_back(run.record.summary.final_stationarity_sq);
      running.push_back(run.record.summary.mean_stationarity_sq);
      bias.push_back(run.record.summary.mean_nested_bias_sq);
    }
    row.final_mean = mean_of(finals);
    row.final_stderr = stderr_of(finals);
    row.running_mean = mean_of(running);
    row.running_stderr = stderr_of(running);
    if (result.nested) {
      row.nested_bias_mean = mean_of(bias);
      row.nested_bias_stderr = stderr_of(bias);
      const double numeric = std::strtod(value.c_str(), nullptr);
      if (!bias.empty() && numeric > 0.0 && row.nested_bias_mean > 0.0) {
        log_value.push_back(std::log(numeric));
        log_bias.push_back(std::log(row.nested_bias_mean));
      }
    }
    if (axis == "K" && !finals.empty() && row.final_mean > 0.0 && row.running_mean > 0.0) {
      log_k.push_back(std::log(static_cast<double>(config.iterations)));
      log_final.push_back(std::log(row.final_mean));
      log_running.push_back(std::log(row.running_mean));
    }
    result.rows.push_back(std::move(row));
  }
  if (axis == "K" && log_k.size() >= 2 && std::adjacent_find(log_k.begin(), log_k.end(), std::not_equal_to<>()) != log_k.end()) {
    result.final_slope = fit_slope(log_k, log_final);
    result.running_slope = fit_slope(log_k, log_running);
  }
  if (result.nested && log_value.size() == result.rows.size() && log_value.size() >= 2 &&
      std::adjacent_find(log_value.begin(), log_value.end(), std::not_equal_to<>()) != log_value.end())
    result.nested_bias_slope = fit_slope(log_value, log_bias);
  return result;
}

std::string render_sweep_csv(const SweepResult& result) {
  std::string out = result.axis + ",runs,diverged,final_stationarity_mean,final_stationarity_stderr,"
                                  "mean_stationarity_mean,mean_stationarity_stderr";
  out += result.nested ? ",nested_bias_mean,nested_bias_stderr\n" : "\n";
  for (const auto& row : result.rows) {
    out += row.value + ',' + std::to_string(row.runs) + ',' + std::to_string(row.diverged) + ',' +
           render_real(row.final_mean) + ',' + render_real(row.final_stderr) + ',' + render_real(row.running_mean) +
           ',' + render_real(row.running_stderr);
    if (result.nested) out += ',' + render_real(row.nested_bias_mean) + ',' + render_real(row.nested_bias_stderr);
    out += '\n';
  }
  return out;
}

std::string render_sweep_json(const SweepResult& result) {
  json out;
  out["axis"] = result.axis;
  out["rows"] = json::array();
  for (const auto& row : result.rows) {
    json entry = {{"value", row.value},
                  {"runs", row.runs},
                  {"diverged", row.diverged},
                  {"final_stationarity_mean", row.final_mean},
                  {"final_stationarity_stderr", row.final_stderr},
                  {"mean_stationarity_mean", row.running_mean},
                  {"mean_stationarity_stderr", row.running_stderr}};
    if (result.nested) {
      entry["nested_bias_mean"] = row.nested_bias_mean;
      entry["nested_bias_stderr"] = row.nested_bias_stderr;
    }
    out["rows"].push_back(std::move(entry));
  }
  if (result.nested_bias_slope) out["slope_nested_bias"] = *result.nested_bias_slope;
  if (result.final_slope) out["slope_final_stationarity"] = *result.final_slope;
  if (result.running_slope) out["slope_mean_stationarity"] = *result.running_slope;
  return out.dump(2) + "\n";
}

}  // namespace moco
