#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "moco/metrics.hpp"
#include "moco/problems.hpp"
#include "moco/solvers.hpp"

namespace moco {

/// Columns: k, f_1..f_M, stationarity_sq, tracking_err, direction_err_sq,
/// lambda_1..lambda_M. 17 significant digits, LF line endings.
std::string render_csv(const TrajectoryRecord& record);
/// Inverse of render_csv for the columns it writes (the path is not stored).
TrajectoryRecord parse_csv(const std::string& text);
void emit_csv(const TrajectoryRecord& record, const std::filesystem::path& path);

/// Columns: k, x_1..x_d for every recorded row.
std::string render_path_csv(const TrajectoryRecord& record);

/// Columns: k, samples_used, bias, bias_sq.
std::string render_bias_csv(const BiasReport& report);

std::string render_real(double value);

/// JSON description of a problem instance; load_problem_json inverts it.
std::string problem_to_json(const Problem& problem);
std::unique_ptr<Problem> load_problem_json(const std::string& text);
std::unique_ptr<Problem> load_problem_json_file(const std::filesystem::path& path);

/// Throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace moco
