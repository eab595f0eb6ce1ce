#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace msgd_lab {

/// Outcome of one acceptance criterion.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double elapsed_s = 0.0;
  double time_limit_s = 0.0;
  nlohmann::json metrics;
};

struct ValidationOptions {
  unsigned workers = 1;
  std::uint64_t seed = 20240601;
};

/// Suites: ode (1, 2), sde (3), phases (4, 5), figure (6), invariants (7, 8).
const std::vector<std::string>& suite_names();
std::vector<int> suite_criteria(const std::string& suite);

CriterionResult run_criterion(int id, const ValidationOptions& options);
std::vector<CriterionResult> run_suite(const std::string& suite, const ValidationOptions& options);

nlohmann::json to_json(const CriterionResult& r);
/// "[PASS] 3 O-U stationary variance (12.3 s / 60 s): ..."
std::string format_line(const CriterionResult& r);

/// Wilson score interval for a binomial proportion at ~95% (z = 1.96).
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials);

}  // namespace msgd_lab
