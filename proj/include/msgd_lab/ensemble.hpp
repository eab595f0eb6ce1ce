#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "msgd_lab/core.hpp"
#include "msgd_lab/phases.hpp"

namespace msgd_lab {

struct EnsembleSpec {
  RunConfig base;
  std::size_t n_runs = 100;
  Thresholds thresholds;
  std::uint64_t record_stride = 10;
};

/// Seed of run i: derive_seed(base.seed, i).
std::uint64_t run_seed(const EnsembleSpec& spec, std::size_t run_index);

struct RunSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  PhaseReport phases;
  double final_tail_mass = 0.0;
  double final_error = 0.0;
  bool failed = false;
  std::optional<std::uint64_t> failed_at;
};

/// Statistics of ||h^(1)| - 1| across the non-failed runs on the common recorded grid.
struct Curves {
  std::vector<std::uint64_t> k;
  std::vector<double> t;
  std::vector<double> mean, q25, q50, q75;
};

struct EnsembleResult {
  EnsembleSpec spec;
  std::vector<RunSummary> per_run;
  Curves curves;
  double failure_rate = 0.0;

  /// Fraction of all runs (failed runs count as misses) with final tail mass <= epsilon.
  double success_rate(double epsilon) const;
  double mean_final_tail_mass() const;
};

/// Linear-interpolation quantile of an ascending-sorted sample.
double sorted_quantile(const std::vector<double>& sorted, double q);

/// Median over runs of a possibly-absent quantity; absent values sort above every present one.
std::optional<double> median_over_runs(
    const std::vector<RunSummary>& runs,
    const std::function<std::optional<double>(const RunSummary&)>& value);

/// Runs every member on a pool of `workers`; the result does not depend on the worker count.
EnsembleResult run_ensemble(const EnsembleSpec& spec, unsigned workers = 1);

struct PhaseMedians {
  std::optional<double> n1, n2, n3;
};

PhaseMedians phase_medians(const EnsembleResult& result);

struct EnsembleComparison {
  PhaseMedians a, b;
  std::optional<double> n1_ratio, n2_ratio, n3_ratio;  // a / b
  double success_a = 0.0, success_b = 0.0;
  double failure_a = 0.0, failure_b = 0.0;
  double mean_tail_a = 0.0, mean_tail_b = 0.0;
  /// n1_ratio divided by (1 - mu_a)/(1 - mu_b); near one when escape scales with 1 - mu.
  std::optional<double> momentum_scaling;
};

EnsembleComparison compare_ensembles(const EnsembleResult& a, const EnsembleResult& b);

}  // namespace msgd_lab
