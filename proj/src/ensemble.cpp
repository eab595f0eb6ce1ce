#include "msgd_lab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msgd_lab/optimizer.hpp"
#include "msgd_lab/parallel.hpp"
#include "msgd_lab/rng.hpp"

namespace msgd_lab {

std::uint64_t run_seed(const EnsembleSpec& spec, std::size_t run_index) {
  return derive_seed(spec.base.seed, run_index);
}

double EnsembleResult::success_rate(double epsilon) const {
  if (per_run.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : per_run) {
    if (!r.failed && r.final_tail_mass <= epsilon) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(per_run.size());
}

double EnsembleResult::mean_final_tail_mass() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : per_run) {
    if (r.failed) continue;
    s += r.final_tail_mass;
    ++n;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::optional<double> median_over_runs(
    const std::vector<RunSummary>& runs,
    const std::function<std::optional<double>(const RunSummary&)>& value) {
  if (runs.empty()) return std::nullopt;
  std::vector<double> v;
  v.reserve(runs.size());
  for (const auto& r : runs) {
    const auto x = value(r);
    v.push_back(x ? *x : std::numeric_limits<double>::infinity());
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double m = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  if (!std::isfinite(m)) return std::nullopt;
  return m;
}

namespace {

struct RunRecord {
  RunSummary summary;
  std::vector<double> errors;
};

RunRecord run_member(const EnsembleSpec& spec, std::size_t index) {
  RunRecord rec;
  rec.summary.index = index;
  rec.summary.seed = run_seed(spec, index);
  RunConfig config = spec.base;
  config.seed = rec.summary.seed;

  PhaseDetector detector(spec.thresholds, config.schedule, config.eta);
  RunOptions options;
  options.observer = [&](std::uint64_t k, const Vector& h, double) { detector.feed(k, h); };
  try {
    const Trajectory traj = run_trajectory(config, spec.record_stride, options);
    rec.errors.reserve(traj.iterates.size());
    for (const auto& p : traj.iterates) rec.errors.push_back(top_coordinate_error(p.h));
    const auto& last = traj.iterates.back().h;
    rec.summary.final_tail_mass = tail_mass(last);
    rec.summary.final_error = top_coordinate_error(last);
  } catch (const NonFiniteIterate& e) {
    rec.summary.failed = true;
    rec.summary.failed_at = e.iteration();
    rec.summary.final_tail_mass = std::numeric_limits<double>::quiet_NaN();
    rec.summary.final_error = std::numeric_limits<double>::quiet_NaN();
    rec.errors.clear();
  }
  rec.summary.phases = detector.report();
  return rec;
}

std::vector<std::uint64_t> recorded_grid(const EnsembleSpec& spec) {
  std::vector<std::uint64_t> k{0};
  for (std::uint64_t s = spec.record_stride; s <= spec.base.horizon; s += spec.record_stride) {
    k.push_back(s);
  }
  if (k.back() != spec.base.horizon) k.push_back(spec.base.horizon);
  return k;
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleSpec& spec, unsigned workers) {
  if (spec.n_runs == 0) throw Error(ErrorKind::InvalidArgument, "n_runs must be at least 1");
  if (spec.record_stride == 0) {
    throw Error(ErrorKind::InvalidArgument, "record_stride must be positive");
  }
  RunConfig checked = validate_config(spec.base);
  validate_thresholds(spec.thresholds, checked.spectrum.dim());

  EnsembleResult result{spec, {}, {}, 0.0};
  result.spec.base = checked;

  std::vector<RunRecord> records(spec.n_runs);
  parallel_for(spec.n_runs, workers,
               [&](std::size_t i) { records[i] = run_member(result.spec, i); });

  // Reduction in run-index order.
  auto& curves = result.curves;
  curves.k = recorded_grid(result.spec);
  for (std::uint64_t k : curves.k) curves.t.push_back(algorithm_time(checked.schedule, checked.eta, k));
  const std::size_t g = curves.k.size();
  curves.mean.assign(g, std::numeric_limits<double>::quiet_NaN());
  curves.q25 = curves.q50 = curves.q75 = curves.mean;

  std::size_t failures = 0;
  for (const auto& r : records) failures += r.summary.failed ? 1 : 0;
  result.failure_rate = static_cast<double>(failures) / static_cast<double>(spec.n_runs);

  std::vector<double> column;
  for (std::size_t j = 0; j < g; ++j) {
    column.clear();
    double sum = 0.0;
    for (const auto& r : records) {
      if (r.summary.failed) continue;
      column.push_back(r.errors[j]);
      sum += r.errors[j];
    }
    if (column.empty()) continue;
    curves.mean[j] = sum / static_cast<double>(column.size());
    std::sort(column.begin(), column.end());
    curves.q25[j] = sorted_quantile(column, 0.25);
    curves.q50[j] = sorted_quantile(column, 0.50);
    curves.q75[j] = sorted_quantile(column, 0.75);
  }

  result.per_run.reserve(spec.n_runs);
  for (auto& r : records) result.per_run.push_back(std::move(r.summary));
  return result;
}

PhaseMedians phase_medians(const EnsembleResult& result) {
  auto as_double = [](const std::optional<std::uint64_t>& n) -> std::optional<double> {
    if (!n) return std::nullopt;
    return static_cast<double>(*n);
  };
  PhaseMedians m;
  m.n1 = median_over_runs(result.per_run, [&](const RunSummary& r) { return as_double(r.phases.n1); });
  m.n2 = median_over_runs(result.per_run, [&](const RunSummary& r) { return as_double(r.phases.n2); });
  m.n3 = median_over_runs(result.per_run, [&](const RunSummary& r) { return as_double(r.phases.n3); });
  return m;
}

EnsembleComparison compare_ensembles(const EnsembleResult& a, const EnsembleResult& b) {
  if (a.curves.k != b.curves.k) {
    throw Error(ErrorKind::IncompatibleGrids, "ensembles were recorded on different grids");
  }
  EnsembleComparison c;
  c.a = phase_medians(a);
  c.b = phase_medians(b);
  auto ratio = [](const std::optional<double>& x, const std::optional<double>& y) -> std::optional<double> {
    if (!x || !y) return std::nullopt;
    if (*y == 0.0) return *x == 0.0 ? std::optional<double>(1.0) : std::nullopt;
    return *x / *y;
  };
  c.n1_ratio = ratio(c.a.n1, c.b.n1);
  c.n2_ratio = ratio(c.a.n2, c.b.n2);
  c.n3_ratio = ratio(c.a.n3, c.b.n3);
  const double eps = a.spec.thresholds.epsilon;
  c.success_a = a.success_rate(eps);
  c.success_b = b.success_rate(eps);
  c.failure_a = a.failure_rate;
  c.failure_b = b.failure_rate;
  c.mean_tail_a = a.mean_final_tail_mass();
  c.mean_tail_b = b.mean_final_tail_mass();
  if (c.n1_ratio) {
    const double expected = (1.0 - a.spec.base.mu) / (1.0 - b.spec.base.mu);
    c.momentum_scaling = *c.n1_ratio / expected;
  }
  return c;
}

}  // namespace msgd_lab
