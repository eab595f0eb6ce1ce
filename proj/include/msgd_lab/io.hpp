#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msgd_lab/continuum.hpp"
#include "msgd_lab/core.hpp"
#include "msgd_lab/ensemble.hpp"
#include "msgd_lab/phases.hpp"
#include "msgd_lab/stream.hpp"

namespace msgd_lab {

using json = nlohmann::json;

/// Shortest round-trip decimal form of a double.
std::string format_number(double x);

json to_json(const RunConfig& config);
/// Strict reader: unknown fields and wrong types raise ConfigParse naming the field.
RunConfig run_config_from_json(const json& j);

json to_json(const Thresholds& th);
/// Missing fields fall back to `defaults`.
Thresholds thresholds_from_json(const json& j, const Thresholds& defaults);

json to_json(const MomentTable& table);
MomentTable moment_table_from_json(const json& j);

json to_json(const PhaseReport& report);
json to_json(const StepDiagnosticsSummary& diag);

enum class MomentSource { Analytic, Estimated };

/// A RunConfig plus the settings that ensembles and predictions need.
struct Experiment {
  RunConfig run;
  Thresholds thresholds;
  std::size_t n_runs = 100;
  std::uint64_t record_stride = 10;
  MomentSource moments = MomentSource::Analytic;
  std::uint64_t moment_samples = 100000;
};

/// Accepts either a bare RunConfig document or {"run": RunConfig, ...}.
Experiment experiment_from_json(const json& j);
json to_json(const Experiment& e);

/// Parses a JSON file, reporting line and column on syntax errors.
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string trajectory_csv(const Trajectory& trajectory);
std::string curves_csv(const Curves& curves);
std::string runs_csv(const std::vector<RunSummary>& runs);
std::string ode_csv(const OdePath& path);
std::string ou_csv(const OUPath& path);
json ensemble_summary_json(const EnsembleResult& result);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = true;
  int width = 800;
  int height = 500;
};

/// Self-contained SVG line chart; non-positive values are skipped on a log axis.
std::string svg_line_chart(const std::vector<ChartSeries>& series, const ChartOptions& options);

}  // namespace msgd_lab
