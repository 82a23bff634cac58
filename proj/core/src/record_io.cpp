#include "moco/record_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "moco/errors.hpp"

namespace moco {

namespace {

using nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

double to_real(const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) throw InvalidInput("csv: malformed number '" + text + "'");
  return value;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from(const json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows.at(i).size()) != c) throw InvalidInput("problem json: ragged matrix");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows.at(i).at(j).get<double>();
  }
  return m;
}

Vector vector_from(const json& items) {
  Vector v(static_cast<Eigen::Index>(items.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = items.at(i).get<double>();
  return v;
}

}  // namespace

std::string render_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string render_csv(const TrajectoryRecord& record) {
  std::string out = "k";
  for (std::size_t m = 1; m <= record.objectives; ++m) out += ",f_" + std::to_string(m);
  out += ",stationarity_sq,tracking_err,direction_err_sq";
  for (std::size_t m = 1; m <= record.objectives; ++m) out += ",lambda_" + std::to_string(m);
  out += '\n';
  for (const auto& row : record.rows) {
    out += std::to_string(row.k);
    for (Eigen::Index m = 0; m < row.objectives.size(); ++m) out += ',' + render_real(row.objectives(m));
    out += ',' + render_real(row.stationarity_sq) + ',' + render_real(row.tracking_err) + ',' +
           render_real(row.direction_err_sq);
    for (Eigen::Index m = 0; m < row.lambda.size(); ++m) out += ',' + render_real(row.lambda(m));
    out += '\n';
  }
  return out;
}

TrajectoryRecord parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("csv: missing header");
  const auto header = split_fields(line);
  if (header.size() < 4 || (header.size() - 4) % 2 != 0 || header.front() != "k")
    throw InvalidInput("csv: unexpected header");
  TrajectoryRecord record;
  record.objectives = (header.size() - 4) / 2;
  const auto m = static_cast<Eigen::Index>(record.objectives);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_fields(line);
    if (cells.size() != header.size()) throw InvalidInput("csv: row width differs from header");
    TrajectoryRow row;
    row.k = static_cast<std::size_t>(std::stoull(cells[0]));
    row.objectives.resize(m);
    row.lambda.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) row.objectives(i) = to_real(cells[static_cast<std::size_t>(1 + i)]);
    const auto base = static_cast<std::size_t>(1 + m);
    row.stationarity_sq = to_real(cells[base]);
    row.tracking_err = to_real(cells[base + 1]);
    row.direction_err_sq = to_real(cells[base + 2]);
    for (Eigen::Index i = 0; i < m; ++i) row.lambda(i) = to_real(cells[base + 3 + static_cast<std::size_t>(i)]);
    record.rows.push_back(std::move(row));
  }
  return record;
}

void emit_csv(const TrajectoryRecord& record, const std::filesystem::path& path) {
  write_text_file(path, render_csv(record));
}

std::string render_path_csv(const TrajectoryRecord& record) {
  std::string out = "k";
  for (std::size_t i = 1; i <= record.dim; ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  for (const auto& row : record.rows) {
    out += std::to_string(row.k);
    for (Eigen::Index i = 0; i < row.x.size(); ++i) out += ',' + render_real(row.x(i));
    out += '\n';
  }
  return out;
}

std::string render_bias_csv(const BiasReport& report) {
  std::string out = "k,samples_used,bias,bias_sq\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.k) + ',' + std::to_string(row.samples_used) + ',' + render_real(row.bias) + ',' +
           render_real(row.bias * row.bias) + '\n';
  }
  return out;
}

std::string problem_to_json(const Problem& problem) {
  json out;
  out["name"] = problem.name();
  if (const auto* toy = dynamic_cast<const ToyProblem*>(&problem)) {
    out["variant"] = toy->variant() == ToyVariant::Corrected ? "corrected" : "literal";
  } else if (const auto* quad = dynamic_cast<const QuadraticMOO*>(&problem)) {
    out["region_radius"] = quad->region_radius();
    out["A"] = json::array();
    out["b"] = json::array();
    for (const auto& a : quad->matrices()) out["A"].push_back(matrix_json(a));
    for (const auto& b : quad->centers()) out["b"].push_back(vector_json(b));
  } else if (const auto* bilevel = dynamic_cast<const BilevelMOO*>(&problem)) {
    out["region_radius"] = bilevel->region_radius();
    out["A"] = json::array();
    out["b"] = json::array();
    for (const auto& a : bilevel->maps()) out["A"].push_back(matrix_json(a));
    for (const auto& b : bilevel->targets()) out["b"].push_back(vector_json(b));
  } else {
    throw InvalidInput("problem_to_json: unsupported problem '" + problem.name() + "'");
  }
  return out.dump(2) + "\n";
}

std::unique_ptr<Problem> load_problem_json(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
    const std::string name = in.at("name").get<std::string>();
    if (name == "toy") {
      const std::string variant = in.value("variant", std::string("corrected"));
      if (variant != "corrected" && variant != "literal") throw InvalidInput("problem json: unknown toy variant");
      return std::make_unique<ToyProblem>(variant == "literal" ? ToyVariant::Literal : ToyVariant::Corrected);
    }
    std::vector<Matrix> a;
    std::vector<Vector> b;
    for (const auto& item : in.at("A")) a.push_back(matrix_from(item));
    for (const auto& item : in.at("b")) b.push_back(vector_from(item));
    const double radius = in.value("region_radius", 10.0);
    if (name == "quadratic") return std::make_unique<QuadraticMOO>(std::move(a), std::move(b), radius);
    if (name == "bilevel") return std::make_unique<BilevelMOO>(std::move(a), std::move(b), radius);
    throw InvalidInput("problem json: unknown problem '" + name + "'");
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("problem json: ") + e.what());
  }
}

std::unique_ptr<Problem> load_problem_json_file(const std::filesystem::path& path) {
  return load_problem_json(read_text_file(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace moco
