#include "moco/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "moco/errors.hpp"
#include "moco/presets.hpp"
#include "moco/record_io.hpp"

namespace moco {

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& message) { throw ConfigError({message}); }

std::size_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end)
    fail(key + ": expected a non-negative integer, got '" + text + "'");
  return static_cast<std::size_t>(value);
}

double parse_real(const std::string& key, const std::string& text) {
  if (!text.empty()) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() + text.size() && std::isfinite(value)) return value;
  }
  fail(key + ": expected a finite real number, got '" + text + "'");
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(key + ": expected a boolean (true/false), got '" + text + "'");
}

template <typename E>
E parse_choice(const std::string& key, const std::string& text, const std::vector<std::pair<std::string, E>>& options) {
  std::vector<std::string> names;
  for (const auto& [name, value] : options) {
    if (name == text) return value;
    names.push_back(name);
  }
  fail(key + ": expected one of {" + join(names, ", ") + "}, got '" + text + "'");
}

template <typename E>
std::string choice_name(E value, const std::vector<std::pair<std::string, E>>& options) {
  for (const auto& [name, v] : options)
    if (v == value) return name;
  return "?";
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

const std::vector<std::pair<std::string, ToyVariant>> kVariants{{"corrected", ToyVariant::Corrected},
                                                                {"literal", ToyVariant::Literal}};
const std::vector<std::pair<std::string, LambdaProjection>> kProjections{
    {"euclidean", LambdaProjection::Euclidean}, {"softmax", LambdaProjection::Softmax}};
const std::vector<std::pair<std::string, InnerSchedule::Kind>> kInnerSchedules{
    {"tied", InnerSchedule::Kind::TiedToBeta},
    {"constant", InnerSchedule::Kind::Constant},
    {"robbins-monro", InnerSchedule::Kind::RobbinsMonro}};
const std::vector<std::pair<std::string, HessianInverseSpec::Kind>> kHessian{
    {"neumann", HessianInverseSpec::Kind::Neumann}, {"exact", HessianInverseSpec::Kind::Exact}};
const std::vector<std::pair<std::string, NoiseModel::Kind>> kNoise{{"none", NoiseModel::Kind::None},
                                                                   {"gaussian", NoiseModel::Kind::Gaussian}};

std::vector<std::pair<std::string, Method>> method_choices() {
  std::vector<std::pair<std::string, Method>> out;
  for (const auto& name : method_names()) out.emplace_back(name, *parse_method(name));
  return out;
}

std::vector<Vector> parse_points(const std::string& key, const std::string& text) {
  std::vector<Vector> points;
  if (trim(text).empty()) return points;
  for (const auto& point : split(text, ';')) {
    if (point.empty()) continue;
    const auto coords = split(point, ',');
    Vector v(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_real(key, coords[i]);
    points.push_back(std::move(v));
  }
  return points;
}

std::string render_points(const std::vector<Vector>& points) {
  std::vector<std::string> rendered;
  for (const auto& p : points) {
    std::vector<std::string> coords;
    for (Eigen::Index i = 0; i < p.size(); ++i) coords.push_back(render_real(p(i)));
    rendered.push_back(join(coords, ","));
  }
  return join(rendered, "; ");
}

std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    seeds.push_back(parse_uint(key, item));
  }
  return seeds;
}

enum class Kind { Uint, Real, Other };

struct Field {
  std::string key;
  Kind kind;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define MOCO_UINT(KEY, MEMBER)                                                                         \
  Field {                                                                                              \
    KEY, Kind::Uint, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_uint(KEY, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }                             \
  }
#define MOCO_REAL(KEY, MEMBER)                                                                         \
  Field {                                                                                              \
    KEY, Kind::Real, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_real(KEY, v); }, \
        [](const ExperimentConfig& c) { return render_real(c.MEMBER); }                                \
  }
#define MOCO_CHOICE(KEY, MEMBER, OPTIONS)                                                                          \
  Field {                                                                                                          \
    KEY, Kind::Other, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_choice(KEY, v, OPTIONS); }, \
        [](const ExperimentConfig& c) { return choice_name(c.MEMBER, OPTIONS); }                                   \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      Field{"problem", Kind::Other, [](ExperimentConfig& c, const std::string& v) { c.problem = v; },
            [](const ExperimentConfig& c) { return c.problem; }},
      MOCO_CHOICE("problem.variant", toy_variant, kVariants),
      MOCO_UINT("problem.objectives", instance.objectives),
      MOCO_UINT("problem.dim", instance.dim),
      MOCO_REAL("problem.mu", instance.mu),
      MOCO_REAL("problem.L", instance.lipschitz),
      MOCO_REAL("problem.center_scale", instance.center_scale),
      MOCO_REAL("problem.region_radius", instance.region_radius),
      MOCO_UINT("problem.instance_seed", instance.seed),
      Field{"problem.file", Kind::Other, [](ExperimentConfig& c, const std::string& v) { c.problem_file = v; },
            [](const ExperimentConfig& c) { return c.problem_file; }},
      Field{"problem.x0", Kind::Other,
            [](ExperimentConfig& c, const std::string& v) { c.x0 = parse_points("problem.x0", v); },
            [](const ExperimentConfig& c) { return render_points(c.x0); }},
      Field{"method", Kind::Other,
            [](ExperimentConfig& c, const std::string& v) { c.method = parse_choice("method", v, method_choices()); },
            [](const ExperimentConfig& c) { return to_string(c.method); }},
      MOCO_REAL("method.cagrad_c", cagrad_c),
      MOCO_CHOICE("method.lambda_projection", lambda_projection, kProjections),
      Field{"method.lagged_updates", Kind::Other,
            [](ExperimentConfig& c, const std::string& v) { c.lagged_updates = parse_bool("method.lagged_updates", v); },
            [](const ExperimentConfig& c) { return std::string(c.lagged_updates ? "true" : "false"); }},
      MOCO_UINT("method.lambda_steps", lambda_steps),
      MOCO_REAL("method.y_cap", y_cap),
      MOCO_UINT("method.batch_growth_every", batch_growth_every),
      MOCO_UINT("nested.inner_steps", inner_steps),
      MOCO_CHOICE("nested.inner_schedule", inner_schedule, kInnerSchedules),
      MOCO_REAL("nested.eta", inner_eta),
      MOCO_REAL("nested.mu", inner_mu),
      MOCO_CHOICE("nested.hessian_inverse", hessian_inverse, kHessian),
      MOCO_UINT("nested.neumann_depth", neumann_depth),
      MOCO_REAL("nested.neumann_scale", neumann_scale),
      MOCO_REAL("nested.hessian_sigma", hessian_sigma),
      Field{"schedule", Kind::Other, [](ExperimentConfig& c, const std::string& v) { c.schedule = v; },
            [](const ExperimentConfig& c) { return c.schedule; }},
      MOCO_REAL("schedule.a", rate_a),
      MOCO_REAL("schedule.b", rate_b),
      MOCO_REAL("schedule.c", rate_c),
      MOCO_REAL("schedule.r", rate_r),
      MOCO_REAL("schedule.lr0", lr0),
      MOCO_REAL("schedule.lr_decay", lr_decay),
      MOCO_REAL("schedule.lr_decay_interval", lr_decay_interval),
      MOCO_REAL("schedule.beta_scale", beta_scale),
      MOCO_REAL("schedule.gamma", gamma),
      MOCO_REAL("schedule.alpha", alpha),
      MOCO_REAL("schedule.beta", beta),
      MOCO_REAL("schedule.rho", rho),
      MOCO_UINT("K", iterations),
      Field{"seeds", Kind::Other, [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seeds("seeds", v); },
            [](const ExperimentConfig& c) {
              std::vector<std::string> parts;
              for (auto s : c.seeds) parts.push_back(std::to_string(s));
              return join(parts, ",");
            }},
      MOCO_CHOICE("noise.kind", noise_kind, kNoise),
      MOCO_REAL("noise.sigma", noise_sigma),
      MOCO_UINT("noise.batch", noise_batch),
      MOCO_UINT("record_every", record_every),
      MOCO_REAL("divergence_threshold", divergence_threshold),
      MOCO_UINT("bias.n_sets", bias_sets),
      MOCO_UINT("bias.every", bias_every),
      MOCO_UINT("workers", workers),
      Field{"output", Kind::Other, [](ExperimentConfig& c, const std::string& v) { c.output = v; },
            [](const ExperimentConfig& c) { return c.output; }},
  };
  return table;
}

#undef MOCO_UINT
#undef MOCO_REAL
#undef MOCO_CHOICE

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

bool points_equal(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].size() != b[i].size() || a[i] != b[i]) return false;
  return true;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join(errors, "\n")), errors_(std::move(errors)) {}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  if (!points_equal(a.x0, b.x0)) return false;
  for (const auto& f : fields())
    if (f.key != "problem.x0" && f.get(a) != f.get(b)) return false;
  return true;
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const Field* field = find_field(key);
  if (field == nullptr) fail("unknown key '" + key + "'");
  field->set(config, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

bool is_numeric_key(const std::string& key) {
  const Field* field = find_field(key);
  return field != nullptr && field->kind != Kind::Other;
}

ExperimentConfig parse_config(const std::string& text) {
  std::vector<std::string> errors;
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::optional<std::string> preset;

  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(number) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      errors.push_back("duplicate key '" + key + "'");
      continue;
    }
    if (key == "preset") {
      preset = value;
      continue;
    }
    entries.emplace_back(key, value);
  }

  ExperimentConfig config;
  if (preset) {
    try {
      config = load_preset(*preset);
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.errors().begin(), e.errors().end());
    }
  }
  for (const auto& [key, value] : entries) {
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.errors().begin(), e.errors().end());
    }
  }
  try {
    validate_config(config);
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.errors().begin(), e.errors().end());
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return config;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

void validate_config(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  };

  const bool toy = c.problem == "toy";
  check(toy || c.problem == "quadratic" || c.problem == "bilevel",
        "problem: expected one of {toy, quadratic, bilevel}, got '" + c.problem + "'");
  check(c.iterations >= 1, "K must be >= 1");
  check(!c.seeds.empty(), "seeds must list at least one seed");
  check(c.record_every >= 1, "record_every must be >= 1");
  check(c.bias_sets >= 1, "bias.n_sets must be >= 1");
  check(c.bias_every >= 1, "bias.every must be >= 1");
  check(c.noise_sigma >= 0.0, "noise.sigma must be >= 0");
  check(c.noise_batch >= 1, "noise.batch must be >= 1");
  check(c.instance.objectives >= 1, "problem.objectives must be >= 1");
  check(c.instance.dim >= 1, "problem.dim must be >= 1");
  check(c.instance.mu > 0.0 && c.instance.mu <= c.instance.lipschitz, "problem.mu must satisfy 0 < mu <= L");
  check(c.instance.center_scale >= 0.0, "problem.center_scale must be >= 0");
  check(c.instance.region_radius > 0.0, "problem.region_radius must be > 0");
  check(c.cagrad_c >= 0.0, "method.cagrad_c must be >= 0");
  check(c.lambda_steps >= 1, "method.lambda_steps must be >= 1");
  check(c.y_cap >= 0.0, "method.y_cap must be >= 0");
  check(c.batch_growth_every >= 1, "method.batch_growth_every must be >= 1");
  check(c.inner_eta > 0.0, "nested.eta must be > 0");
  check(c.inner_mu > 0.0, "nested.mu must be > 0");
  check(c.neumann_depth >= 1, "nested.neumann_depth must be >= 1");
  check(c.neumann_scale >= 0.0, "nested.neumann_scale must be >= 0");
  check(c.hessian_sigma >= 0.0, "nested.hessian_sigma must be >= 0");
  check(c.divergence_threshold > 0.0, "divergence_threshold must be > 0");
  check(c.method != Method::MoCoNested || c.problem == "bilevel", "method moco-nested requires problem = bilevel");

  try {
    build_schedule(c).validate();
  } catch (const InvalidInput& e) {
    errors.push_back(std::string("schedule: ") + e.what());
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.errors().begin(), e.errors().end());
  }

  if (c.problem_file.empty()) {
    const std::size_t dim = toy ? 2 : c.instance.dim;
    for (std::size_t i = 0; i < c.x0.size(); ++i)
      check(static_cast<std::size_t>(c.x0[i].size()) == dim,
            "problem.x0: start " + std::to_string(i + 1) + " has dimension " + std::to_string(c.x0[i].size()) +
                ", expected " + std::to_string(dim));
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

StepSchedule build_schedule(const ExperimentConfig& c) {
  const std::string& name = c.schedule;
  if (name == "toy") return StepSchedule::toy(c.lr0, c.lr_decay, c.beta_scale, c.gamma, c.lr_decay_interval);
  if (name == "theorem1") return StepSchedule::theorem1(c.rate_a, c.rate_b, c.rate_c, c.rate_r);
  if (name == "theorem2") return StepSchedule::theorem2(c.rate_a, c.rate_b, c.rate_c);
  if (name == "theorem3") return StepSchedule::theorem3(c.rate_a, c.rate_b, c.rate_c);
  if (name == "constant") return StepSchedule::constant(c.alpha, c.beta, c.gamma, c.rho);
  if (name.rfind("table7:", 0) == 0) {
    try {
      return StepSchedule::table7(name.substr(7));
    } catch (const InvalidInput&) {
      fail("schedule: unknown table7 preset '" + name.substr(7) + "' (known: " + join(StepSchedule::table7_names(), ", ") +
           ")");
    }
  }
  fail("schedule: expected one of {toy, theorem1, theorem2, theorem3, constant, table7:<name>}, got '" + name + "'");
}

NoiseModel build_noise(const ExperimentConfig& c) {
  if (c.noise_kind == NoiseModel::Kind::None) {
    NoiseModel none = NoiseModel::none();
    none.batch_size = c.noise_batch;
    return none;
  }
  return NoiseModel::gaussian(c.noise_sigma, c.noise_batch);
}

std::unique_ptr<Problem> build_problem(const ExperimentConfig& c) {
  if (!c.problem_file.empty()) return load_problem_json_file(c.problem_file);
  if (c.problem == "toy") return std::make_unique<ToyProblem>(c.toy_variant);
  if (c.problem == "quadratic") return std::make_unique<QuadraticMOO>(QuadraticMOO::random(c.instance));
  if (c.problem == "bilevel") return std::make_unique<BilevelMOO>(BilevelMOO::random(c.instance));
  fail("problem: unknown problem '" + c.problem + "'");
}

std::vector<Vector> resolve_starts(const ExperimentConfig& c, const Problem& problem) {
  if (!c.x0.empty()) {
    for (const auto& x : c.x0)
      if (static_cast<std::size_t>(x.size()) != problem.dim())
        fail("problem.x0: start has dimension " + std::to_string(x.size()) + ", problem expects " +
             std::to_string(problem.dim()));
    return c.x0;
  }
  if (problem.name() == "toy") return toy_starts();
  return {Vector::Constant(static_cast<Eigen::Index>(problem.dim()), 3.0)};
}

RunSpec build_run_spec(const ExperimentConfig& c, const Problem& problem, std::uint64_t seed, const Vector& x0) {
  RunSpec spec;
  spec.method = c.method;
  spec.schedule = build_schedule(c);
  spec.iterations = c.iterations;
  spec.seed = seed;
  spec.record_every = c.record_every;
  spec.noise = build_noise(c);
  spec.moco.projection = c.lambda_projection;
  spec.moco.lagged_updates = c.lagged_updates;
  spec.moco.lambda_steps = c.lambda_steps;
  if (c.y_cap > 0.0) spec.caps = Vector::Constant(static_cast<Eigen::Index>(problem.num_objectives()), c.y_cap);
  spec.cagrad_c = c.cagrad_c;
  spec.batch_growth_every = c.batch_growth_every;
  spec.divergence_threshold = c.divergence_threshold;
  spec.x0 = x0;

  NestedOracleConfig& nested = spec.nested;
  nested.inner_steps = c.inner_steps;
  if (nested.inner_steps == 0) {
    const double beta_final = spec.schedule.at(c.iterations, c.iterations).beta;
    nested.inner_steps = static_cast<std::size_t>(std::ceil(1.0 / beta_final - 1e-12));
  }
  nested.inner_schedule.kind = c.inner_schedule;
  nested.inner_schedule.eta = c.inner_eta;
  nested.inner_schedule.mu = c.inner_mu;
  nested.hessian_inverse.kind = c.hessian_inverse;
  nested.hessian_inverse.depth = c.neumann_depth;
  nested.hessian_inverse.scale = c.neumann_scale;
  nested.noise = spec.noise;
  nested.hessian_sigma = c.hessian_sigma;
  return spec;
}

}  // namespace moco
