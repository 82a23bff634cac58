#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "moco/config.hpp"
#include "moco/errors.hpp"
#include "moco/experiment.hpp"
#include "moco/presets.hpp"
#include "moco/record_io.hpp"

using namespace moco;

namespace {

ExperimentConfig small_quadratic() {
  return parse_config(
      "problem = quadratic\nproblem.objectives = 2\nproblem.dim = 3\nmethod = moco\n"
      "schedule = constant\nschedule.alpha = 0.05\nschedule.beta = 0.5\nschedule.gamma = 0.1\n"
      "noise.kind = gaussian\nnoise.sigma = 0.5\nK = 200\nseeds = 0,1,2\nrecord_every = 10\n");
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("parse_config applies keys, comments and presets") {
    const ExperimentConfig c = parse_config("# comment\nK = 50   # trailing\nseeds = 3,4\nmethod = smg\n");
    CHECK(c.iterations == 50);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(c.method == Method::Smg);

    const ExperimentConfig p = parse_config("preset = fig1-moco\nK = 10\n");
    CHECK(p.method == Method::MoCo);
    CHECK(p.iterations == 10);
    CHECK(p.x0.size() == 3);
    CHECK(p.lagged_updates);
    CHECK(p.noise_sigma == kToyNoiseSigma);
  }

  TEST_CASE("parse_config reports every error") {
    CHECK_THROWS_WITH_AS(parse_config("K = 0\n"), "K must be >= 1", ConfigError);
    try {
      parse_config("K = 0\nbogus = 1\nnoise.sigma = -1\nmethod = adam\nno equals sign\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.errors().size() >= 5);
      const auto has = [&](const std::string& needle) {
        return std::any_of(e.errors().begin(), e.errors().end(),
                           [&](const std::string& s) { return s.find(needle) != std::string::npos; });
      };
      CHECK(has("K must be >= 1"));
      CHECK(has("unknown key 'bogus'"));
      CHECK(has("noise.sigma"));
      CHECK(has("method"));
      CHECK(has("line 5"));
    }
    CHECK_THROWS_AS(parse_config("K = 5\nK = 6\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("preset = nope\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("problem = toy\nproblem.x0 = 1,2,3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("method = moco-nested\n"), ConfigError);
  }

  TEST_CASE("serialize_config round-trips generated configs") {
    RngStream rng(17);
    const std::vector<std::string> methods = method_names();
    const std::vector<std::string> schedules{"toy", "theorem1", "theorem2", "theorem3", "constant", "table7:nyuv2"};
    for (int i = 0; i < 100; ++i) {
      ExperimentConfig c;
      c.problem = rng.below(2) == 0 ? "toy" : "quadratic";
      c.instance.dim = 1 + rng.below(6);
      c.instance.objectives = 1 + rng.below(4);
      c.instance.mu = 0.1 + rng.uniform();
      c.instance.lipschitz = c.instance.mu + 3.0 * rng.uniform();
      c.instance.seed = rng.next_u64();
      c.method = *parse_method(methods[rng.below(methods.size())]);
      if (c.method == Method::MoCoNested) c.problem = "bilevel";
      c.schedule = schedules[rng.below(schedules.size())];
      c.lr0 = std::exp(-10.0 * rng.uniform());
      c.gamma = rng.uniform() / 3.0;
      c.alpha = rng.uniform() * 1e-2;
      c.rho = rng.uniform();
      c.iterations = 1 + rng.below(100000);
      c.seeds = {rng.next_u64(), rng.below(10)};
      c.noise_kind = NoiseModel::Kind::Gaussian;
      c.noise_sigma = 1.0 / 3.0 * rng.uniform();
      c.lagged_updates = rng.below(2) == 1;
      c.cagrad_c = rng.uniform();
      const std::size_t dim = c.problem == "toy" ? 2 : c.instance.dim;
      c.x0.clear();
      for (std::size_t s = 0; s < rng.below(3); ++s) {
        Vector x(static_cast<Eigen::Index>(dim));
        for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = 10.0 * rng.normal();
        c.x0.push_back(x);
      }
      const ExperimentConfig back = parse_config(serialize_config(c));
      REQUIRE(back == c);
    }
  }

  TEST_CASE("trajectory CSV round-trips") {
    TrajectoryRecord empty;
    empty.objectives = 2;
    empty.dim = 2;
    const std::string header = render_csv(empty);
    CHECK(header == "k,f_1,f_2,stationarity_sq,tracking_err,direction_err_sq,lambda_1,lambda_2\n");
    CHECK(parse_csv(header).rows.empty());

    const ExperimentConfig c = small_quadratic();
    const auto problem = build_problem(c);
    const TrajectoryRecord record = run(*problem, build_run_spec(c, *problem, 0, resolve_starts(c, *problem)[0]));
    const TrajectoryRecord back = parse_csv(render_csv(record));
    REQUIRE(back.rows.size() == record.rows.size());
    for (std::size_t i = 0; i < record.rows.size(); ++i) {
      CHECK(back.rows[i].k == record.rows[i].k);
      CHECK(back.rows[i].objectives == record.rows[i].objectives);
      CHECK(back.rows[i].stationarity_sq == record.rows[i].stationarity_sq);
      CHECK(back.rows[i].lambda == record.rows[i].lambda);
    }
    CHECK(render_csv(back) == render_csv(record));
    CHECK_THROWS_AS(parse_csv("k,f_1\n1,abc\n"), InvalidInput);
  }

  TEST_CASE("problem JSON round-trips") {
    ExperimentConfig c = small_quadratic();
    const auto q = build_problem(c);
    const auto back = load_problem_json(problem_to_json(*q));
    const Vector x = Vector::Constant(3, 0.3);
    CHECK(back->jacobian(x) == q->jacobian(x));
    CHECK(back->values(x) == q->values(x));
    CHECK_THROWS(load_problem_json("{not json"));
    CHECK_THROWS_AS(read_text_file("/nonexistent/dir/file.txt"), IoError);
  }

  TEST_CASE("run_experiment does not depend on the worker count") {
    ExperimentConfig c = small_quadratic();
    c.workers = 1;
    const ExperimentResult one = run_experiment(c);
    c.workers = 3;
    const ExperimentResult three = run_experiment(c);
    REQUIRE(one.runs.size() == 3);
    REQUIRE(three.runs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(one.runs[i].seed == three.runs[i].seed);
      CHECK(render_csv(one.runs[i].record) == render_csv(three.runs[i].record));
    }
    CHECK_FALSE(one.all_diverged());
  }

  TEST_CASE("run outcomes carry their seed") {
    ExperimentConfig c = small_quadratic();
    c.seeds = {5};
    const ExperimentResult a = run_experiment(c);
    CHECK(a.runs.front().seed == 5);
  }

  TEST_CASE("sweep") {
    ExperimentConfig c = small_quadratic();
    const SweepResult single = sweep(c, "K", {"100"});
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].runs == 3);
    CHECK_FALSE(single.final_slope.has_value());

    const SweepResult forward = sweep(c, "K", {"100", "400"});
    const SweepResult backward = sweep(c, "K", {"400", "100"});
    REQUIRE(forward.final_slope.has_value());
    CHECK(*forward.final_slope == doctest::Approx(*backward.final_slope));
    CHECK(forward.rows[0].final_mean == backward.rows[1].final_mean);
    CHECK(render_sweep_json(forward).find("\"slope_final_stationarity\"") != std::string::npos);
    CHECK(render_sweep_csv(forward).rfind("K,runs,", 0) == 0);

    CHECK_THROWS_AS(sweep(c, "method", {"moco"}), ConfigError);
    CHECK_THROWS_AS(sweep(c, "K", {"abc"}), ConfigError);
  }

  TEST_CASE("fit_slope") {
    CHECK(fit_slope({0, 1, 2}, {1, 3, 5}) == doctest::Approx(2.0));
    CHECK(fit_slope({std::log(10.0), std::log(100.0)}, {std::log(1.0), std::log(0.1)}) == doctest::Approx(-1.0));
  }

  TEST_CASE("growing batch adds one sample per batch_growth_every iterations") {
    ExperimentConfig c = parse_config("preset = fig1-smg-growing\nK = 10001\n");
    const auto problem = build_problem(c);
    MethodRunner runner(*problem, build_run_spec(c, *problem, 0, resolve_starts(c, *problem)[0]));
    CHECK(runner.current_batch() == 1);
    for (int k = 0; k < 10000; ++k) runner.step();
    CHECK(runner.current_batch() == 2);
    CHECK(runner.samples_used() == 10000);
    runner.step();
    CHECK(runner.samples_used() == 10002);
  }

  TEST_CASE("bias protocol: exact-gradient MGDA has zero bias") {
    ExperimentConfig c = parse_config("preset = fig1-mgda\nK = 1000\nbias.every = 250\n");
    const auto outcomes = run_bias_protocol(c);
    REQUIRE(outcomes.size() == 3);
    for (const auto& o : outcomes) {
      CHECK_FALSE(o.diverged);
      REQUIRE(o.report.rows.size() >= 4);
      for (const auto& row : o.report.rows) CHECK(row.bias < 1e-8);
    }
  }

  TEST_CASE("presets") {
    const auto list = list_presets();
    CHECK(list.size() >= 10);
    for (const auto& info : list) {
      INFO(info.name);
      CHECK_NOTHROW(load_preset(info.name));
    }
    const ExperimentConfig moco = load_preset("fig1-moco");
    CHECK(moco.iterations == 70000);
    CHECK(moco.gamma == kToyGamma);
    CHECK(moco.x0.size() == toy_starts().size());
    CHECK_THROWS_AS(preset_text("missing"), ConfigError);
  }

  TEST_CASE("write_experiment produces the documented files") {
    ExperimentConfig c = small_quadratic();
    c.seeds = {0};
    const auto dir = std::filesystem::temp_directory_path() / "moco-harness-test";
    std::filesystem::remove_all(dir);
    write_experiment(c, run_experiment(c), dir);
    std::size_t csv = 0, meta = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 9 && name.substr(name.size() - 9) == ".path.csv") continue;
      if (entry.path().extension() == ".csv") ++csv;
      if (name.size() > 10 && name.substr(name.size() - 10) == ".meta.json") ++meta;
    }
    CHECK(csv == 1);
    CHECK(meta == 1);
    CHECK(std::filesystem::exists(dir / "timing.json"));
    std::filesystem::remove_all(dir);
  }
}
