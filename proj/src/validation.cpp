#include "msgd_lab/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "msgd_lab/continuum.hpp"
#include "msgd_lab/ensemble.hpp"
#include "msgd_lab/io.hpp"
#include "msgd_lab/optimizer.hpp"
#include "msgd_lab/parallel.hpp"
#include "msgd_lab/phases.hpp"
#include "msgd_lab/rng.hpp"
#include "msgd_lab/stream.hpp"

namespace msgd_lab {

namespace {

using Clock = std::chrono::steady_clock;

Spectrum figure_spectrum() { return Spectrum({4.0, 3.0, 2.0, 1.0}); }

/// The streaming-PCA figure setup: start at the saddle e_2, eta = 5e-4, 4e4 iterations.
RunConfig figure_config(double mu, std::uint64_t seed) {
  RunConfig c{figure_spectrum()};
  c.mu = mu;
  c.eta = 5e-4;
  c.init = {0.0, 1.0, 0.0, 0.0};
  c.horizon = 40000;
  c.seed = seed;
  return c;
}

EnsembleSpec figure_ensemble(const RunConfig& base, std::size_t n_runs) {
  EnsembleSpec spec{base};
  spec.n_runs = n_runs;
  spec.thresholds = default_thresholds(base);
  spec.thresholds.delta_sq = 25.0 * base.eta;
  spec.thresholds.saddle_index = 2;
  spec.record_stride = 100;
  return spec;
}

/// Hashed per-experiment base seed. Per-run seeds XOR the run index into the base, so base
/// seeds that differ only in low bits would share runs.
std::uint64_t sub_seed(const ValidationOptions& options, std::uint64_t tag) {
  return derive_seed(options.seed, tag << 32);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CriterionResult ode_oracle(const ValidationOptions&) {
  CriterionResult r{1, "ODE closed form vs RK4"};
  r.time_limit_s = 1.0;
  const Spectrum s = figure_spectrum();
  const Vector h0{0.5, 0.5, 0.5, 0.5};
  double worst = 0.0;
  for (double mu : {0.0, 0.9}) {
    const OdePath path = ode_integrate(s, mu, h0, 5.0, 1e-3);
    double err = 0.0;
    for (std::size_t i = 0; i < path.t.size(); ++i) {
      err = std::max(err, max_abs_diff(path.h[i], ode_closed_form(s, mu, h0, path.t[i])));
    }
    r.metrics["max_error_mu_" + fmt(mu)] = err;
    worst = std::max(worst, err);
  }
  r.passed = worst <= 1e-8;
  r.detail = "max coordinate error " + fmt(worst) + " (tolerance 1e-8)";
  return r;
}

CriterionResult discrete_to_ode(const ValidationOptions&) {
  CriterionResult r{2, "discrete recursion -> ODE as eta -> 0"};
  r.time_limit_s = 5.0;
  const Spectrum s = figure_spectrum();
  const double mu = 0.9;
  const Vector h0{0.6, 0.8, 0.0, 0.0};
  const double horizon_time = 2.0;
  std::vector<double> errors;
  for (double eta : {4e-3, 2e-3, 1e-3}) {
    RunConfig c{s};
    c.mu = mu;
    c.eta = eta;
    c.init = h0;
    c.horizon = static_cast<std::uint64_t>(std::llround(horizon_time / eta));
    RunOptions opt;
    opt.deterministic_stream = true;
    const Trajectory traj = run_trajectory(validate_config(c), 1, opt);
    double err = 0.0;
    for (const auto& p : traj.iterates) {
      err = std::max(err, max_abs_diff(p.h, ode_closed_form(s, mu, h0, static_cast<double>(p.k) * eta)));
    }
    errors.push_back(err);
    r.metrics["sup_error_eta_" + fmt(eta)] = err;
  }
  bool ok = true;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double ratio = errors[i] / errors[i - 1];
    r.metrics["halving_ratio_" + std::to_string(i)] = ratio;
    ok = ok && errors[i] < errors[i - 1] && ratio <= 0.75;
  }
  r.passed = ok;
  r.detail = "sup errors " + fmt(errors[0]) + ", " + fmt(errors[1]) + ", " + fmt(errors[2]) +
             " (each halving must shrink by <= 0.75)";
  return r;
}

/// Variance of u_k = h_k^(2) / sqrt(eta) over `chains` independent runs from e_1.
double stationary_normalized_variance(double mu, double eta, std::size_t chains,
                                      std::uint64_t burn_in, std::uint64_t recorded,
                                      std::uint64_t stride, std::uint64_t seed, unsigned workers,
                                      std::size_t* n_values) {
  RunConfig base{figure_spectrum()};
  base.mu = mu;
  base.eta = eta;
  base.init = {1.0, 0.0, 0.0, 0.0};
  base.horizon = burn_in + recorded;
  base = validate_config(base);
  const double inv_sqrt_eta = 1.0 / std::sqrt(eta);
  std::vector<std::vector<double>> values(chains);
  parallel_for(chains, workers, [&](std::size_t c) {
    RunConfig cfg = base;
    cfg.seed = derive_seed(seed, c);
    auto& out = values[c];
    out.reserve(recorded / stride + 1);
    RunOptions opt;
    opt.observer = [&](std::uint64_t k, const Vector& h, double) {
      if (k > burn_in && (k - burn_in) % stride == 0) out.push_back(h[1] * inv_sqrt_eta);
    };
    run_trajectory(cfg, cfg.horizon, opt);
  });
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& chain : values) {
    for (double u : chain) {
      sum += u;
      sum_sq += u * u;
      ++n;
    }
  }
  *n_values = n;
  const double mean = sum / static_cast<double>(n);
  return (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
}

CriterionResult ou_stationary_variance(const ValidationOptions& options) {
  CriterionResult r{3, "O-U stationary variance near the optimum"};
  r.time_limit_s = 60.0;
  const Spectrum s = figure_spectrum();
  const MomentTable moments = analytic_moments(ScaledRademacher{}, s);
  const double gap = s.eigen_gap();
  bool ok = true;
  std::vector<double> measured;
  std::ostringstream detail;
  for (auto [mu, eta] : {std::pair{0.0, 1e-5}, std::pair{0.9, 1e-6}}) {
    const OUParams p = near_optimum_params(s, mu, moments, 1);
    const double expected = ou_moments(p, 0.0).stationary_variance;
    // Relaxation time of the coordinate, in iterations.
    const auto mixing = static_cast<std::uint64_t>(std::ceil((1.0 - mu) / (gap * eta)));
    std::size_t n = 0;
    const std::uint64_t seed = sub_seed(options, mu == 0.0 ? 30 : 31);
    const double var = stationary_normalized_variance(mu, eta, 64, 3 * mixing, 20 * mixing,
                                                      mixing / 100, seed, options.workers, &n);
    const double rel = var / expected - 1.0;
    ok = ok && std::abs(rel) <= 0.20 && n >= 100000;
    measured.push_back(var);
    r.metrics["mu_" + fmt(mu)] = {{"eta", eta}, {"variance", var}, {"expected", expected},
                                  {"relative_error", rel}, {"n_values", n}};
    detail << "mu=" << mu << ": var " << fmt(var) << " vs " << fmt(expected) << " (" << n
           << " values); ";
  }
  const double ratio = measured[1] / measured[0];
  r.metrics["ratio"] = ratio;
  ok = ok && std::abs(ratio / 10.0 - 1.0) <= 0.25;
  detail << "ratio " << fmt(ratio) << " (expected 10 +- 25%)";
  r.passed = ok;
  r.detail = detail.str();
  return r;
}

CriterionResult saddle_escape(const ValidationOptions& options) {
  CriterionResult r{4, "saddle escape acceleration"};
  r.time_limit_s = 60.0;
  const auto vsgd = run_ensemble(figure_ensemble(figure_config(0.0, sub_seed(options, 4)), 100), options.workers);
  const auto msgd = run_ensemble(figure_ensemble(figure_config(0.9, sub_seed(options, 4)), 100), options.workers);
  const auto t1 = [](const RunSummary& s) { return s.phases.t1; };
  const auto n1_v = phase_medians(vsgd).n1;
  const auto n1_m = phase_medians(msgd).n1;
  const auto t1_v = median_over_runs(vsgd.per_run, t1);
  const auto t1_m = median_over_runs(msgd.per_run, t1);
  if (!n1_v || !n1_m || !t1_v || !t1_m) {
    r.detail = "median escape not reached within the horizon";
    return r;
  }
  const double n_ratio = *n1_m / *n1_v;
  const double t_ratio = *t1_m / *t1_v;

  const Spectrum s = figure_spectrum();
  const double alpha12 = analytic_moments(ScaledRademacher{}, s)(0, 1);
  const double eta = 5e-4, delta_sq = 25.0 * eta, nu = 0.5;
  const double predicted =
      predict_T1(s, 0.9, eta, delta_sq, nu, alpha12) / predict_T1(s, 0.0, eta, delta_sq, nu, alpha12);
  r.metrics = {{"median_n1_vsgd", *n1_v}, {"median_n1_msgd", *n1_m}, {"n1_ratio", n_ratio},
               {"t1_ratio", t_ratio}, {"predicted_t1_ratio", predicted}};
  r.passed = n_ratio <= 0.5 && t_ratio >= predicted / 3.0 && t_ratio <= predicted * 3.0;
  r.detail = "median n1 " + fmt(*n1_m) + " vs " + fmt(*n1_v) + " (ratio " + fmt(n_ratio) +
             " <= 0.5); t1 ratio " + fmt(t_ratio) + " vs predicted " + fmt(predicted) +
             " (within x3)";
  return r;
}

CriterionResult traverse_scaling(const ValidationOptions& options) {
  CriterionResult r{5, "traverse-time scaling with 1 - mu"};
  r.time_limit_s = 60.0;
  const std::vector<double> mus{0.0, 0.5, 0.9};
  std::vector<double> medians;
  for (double mu : mus) {
    const auto res = run_ensemble(figure_ensemble(figure_config(mu, sub_seed(options, 5)), 100), options.workers);
    const auto m = median_over_runs(res.per_run, [](const RunSummary& s) -> std::optional<double> {
      if (!s.phases.t1 || !s.phases.t2) return std::nullopt;
      return *s.phases.t2 - *s.phases.t1;
    });
    if (!m) {
      r.detail = "median traverse not completed for mu=" + fmt(mu);
      return r;
    }
    medians.push_back(*m);
    r.metrics["median_t2_minus_t1_mu_" + fmt(mu)] = *m;
  }
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t i = 1; i < mus.size(); ++i) {
    const double ratio = medians[i] / medians[i - 1];
    const double target = (1.0 - mus[i]) / (1.0 - mus[i - 1]);
    const double rel = ratio / target - 1.0;
    ok = ok && std::abs(rel) <= 0.30;
    r.metrics["ratio_" + std::to_string(i)] = {{"measured", ratio}, {"target", target}};
    detail << "ratio " << fmt(ratio) << " vs " << fmt(target) << "; ";
  }
  detail << "(tolerance +-30%)";
  r.passed = ok;
  r.detail = detail.str();
  return r;
}

CriterionResult annealing_necessity(const ValidationOptions& options) {
  CriterionResult r{6, "annealing necessity and step-size feasibility"};
  r.time_limit_s = 90.0;
  const double epsilon = 0.01;
  RunConfig plain = figure_config(0.9, sub_seed(options, 6));
  RunConfig annealed = plain;
  annealed.schedule = AnnealAt{20000, 0.1};
  const auto res_plain = run_ensemble(figure_ensemble(plain, 100), options.workers);
  const auto res_annealed = run_ensemble(figure_ensemble(annealed, 100), options.workers);
  const double tail_plain = res_plain.mean_final_tail_mass();
  const double tail_annealed = res_annealed.mean_final_tail_mass();
  const bool anneal_ok = tail_plain >= 5.0 * tail_annealed;

  const Spectrum s = figure_spectrum();
  const double phi = analytic_moments(ScaledRademacher{}, s).phi;
  const double max_eta = check_step_feasibility(s, 0.9, epsilon, phi, 1e-9).max_eta;
  // Both sweeps start at the saddle and run to the same algorithm time.
  const double algorithm_horizon = 3.0;
  auto sweep = [&](double multiple) {
    RunConfig c = figure_config(0.9, sub_seed(options, 60));
    c.eta = multiple * max_eta;
    c.horizon = static_cast<std::uint64_t>(std::ceil(algorithm_horizon / c.eta));
    EnsembleSpec spec = figure_ensemble(c, 100);
    spec.thresholds.epsilon = epsilon;
    spec.record_stride = c.horizon;
    const auto res = run_ensemble(spec, options.workers);
    std::size_t hits = 0;
    for (const auto& run : res.per_run) hits += (!run.failed && run.final_tail_mass <= epsilon) ? 1 : 0;
    return hits;
  };
  const std::size_t hits_high = sweep(4.0);
  const std::size_t hits_low = sweep(0.5);
  const auto ci_high = wilson_interval(hits_high, 100);
  const double rate_high = hits_high / 100.0, rate_low = hits_low / 100.0;
  const bool high_ok = rate_high < 0.75 && ci_high.second < 0.75;
  const bool low_ok = rate_low >= 0.75;

  r.metrics = {{"mean_tail_no_anneal", tail_plain},
               {"mean_tail_anneal", tail_annealed},
               {"tail_ratio", tail_plain / tail_annealed},
               {"max_eta", max_eta},
               {"success_4x", rate_high},
               {"success_4x_ci", {ci_high.first, ci_high.second}},
               {"success_half", rate_low},
               {"anneal_ok", anneal_ok},
               {"above_bound_ok", high_ok},
               {"below_bound_ok", low_ok}};
  r.passed = anneal_ok && high_ok && low_ok;
  r.detail = "tail " + fmt(tail_plain) + " vs " + fmt(tail_annealed) + " (ratio " +
             fmt(tail_plain / tail_annealed) + " >= 5: " + (anneal_ok ? "ok" : "FAIL") +
             "); success at 4x max_eta " + fmt(rate_high) + " CI [" + fmt(ci_high.first) + ", " +
             fmt(ci_high.second) + "] (< 0.75: " + (high_ok ? "ok" : "FAIL") +
             "); at 0.5x " + fmt(rate_low) + " (>= 0.75: " + (low_ok ? "ok" : "FAIL") + ")";
  return r;
}

CriterionResult invariant_suite(const ValidationOptions& options) {
  CriterionResult r{7, "trajectory bound and two-time-scale invariants"};
  r.time_limit_s = 30.0;
  bool ok = true;
  std::ostringstream detail;

  // Norm and step bounds on the three figure configurations.
  std::vector<RunConfig> configs{figure_config(0.0, sub_seed(options, 7)), figure_config(0.9, sub_seed(options, 7))};
  configs.push_back(configs.back());
  configs.back().schedule = AnnealAt{20000, 0.1};
  double worst_norm_ratio = 0.0;
  for (const auto& c : configs) {
    const Trajectory traj = run_trajectory(c, 1);
    const double c_d = traj.diagnostics.max_sample_norm * traj.diagnostics.max_sample_norm;
    const BoundReport b = check_bound_invariants(traj, c_d);
    const double limit = 100.0 * c.eta / std::pow(1.0 - c.mu, 3);
    worst_norm_ratio = std::max(worst_norm_ratio, b.max_norm_excess / limit);
    ok = ok && b.max_norm_excess <= limit && !b.violation;
  }
  r.metrics["worst_norm_excess_over_limit"] = worst_norm_ratio;
  detail << "max norm excess / limit " << fmt(worst_norm_ratio) << "; ";

  // m_k tracker scaling across step sizes.
  std::vector<double> scaled;
  for (double eta : {1e-3, 5e-4, 2.5e-4}) {
    RunConfig c = figure_config(0.9, sub_seed(options, 70));
    c.eta = eta;
    c.horizon = static_cast<std::uint64_t>(std::llround(20.0 / eta));
    const double m_err = track_two_time_scale(c);
    scaled.push_back(m_err / (eta * std::log(1.0 / eta)));
    r.metrics["m_error_eta_" + fmt(eta)] = m_err;
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  const double band = *hi / *lo;
  r.metrics["m_error_band"] = band;
  ok = ok && band <= 3.0;
  detail << "m_error/(eta log 1/eta) band " << fmt(band) << " (<= 3); ";

  // mu = 0 step against vanilla SGHA, bitwise.
  Engine engine = make_engine(sub_seed(options, 71));
  Sampler sampler(ScaledRademacher{}, figure_spectrum());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    Vector h(4), hp(4);
    for (std::size_t i = 0; i < 4; ++i) {
      h[i] = normal(engine);
      hp[i] = normal(engine);
    }
    const Vector y = sampler.draw(engine);
    const double eta = 1e-3 * (1.0 + trial % 7);
    StepperState st{h, hp, 0, std::nullopt};
    const StepperState next = msgd_step(st, RankOneSample{y}, eta, 0.0);
    const Vector ref = sgha_step(h, y, eta);
    if (std::memcmp(next.h_curr.data(), ref.data(), 4 * sizeof(double)) != 0) ++mismatches;
  }
  r.metrics["sgha_mismatches"] = mismatches;
  ok = ok && mismatches == 0;
  detail << "mu=0 vs SGHA mismatches " << mismatches;
  r.passed = ok;
  r.detail = detail.str();
  return r;
}

std::string ensemble_fingerprint(const EnsembleResult& res) {
  return ensemble_summary_json(res).dump() + curves_csv(res.curves) + runs_csv(res.per_run);
}

CriterionResult determinism_and_rotation(const ValidationOptions& options) {
  CriterionResult r{8, "determinism and basis invariance"};
  r.time_limit_s = 30.0;
  RunConfig base = figure_config(0.9, sub_seed(options, 8));
  base.horizon = 10000;
  const EnsembleSpec spec = figure_ensemble(base, 32);
  const std::string reference = ensemble_fingerprint(run_ensemble(spec, 1));
  bool identical = true;
  for (unsigned w : {4u, 8u}) identical = identical && ensemble_fingerprint(run_ensemble(spec, w)) == reference;

  RunConfig plain{figure_spectrum()};
  plain.mu = 0.9;
  plain.eta = 5e-4;
  plain.init = {0.5, 0.5, 0.5, 0.5};
  plain.horizon = 2000;
  plain.seed = sub_seed(options, 80);
  RunConfig rotated = plain;
  rotated.sampler = RotatedScaledRademacher{sub_seed(options, 81)};
  const Trajectory a = run_trajectory(plain, 1);
  const Trajectory b = run_trajectory(rotated, 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.iterates.size(); ++i) {
    worst = std::max(worst, max_abs_diff(a.iterates[i].h, b.iterates[i].h));
  }
  r.metrics = {{"identical_across_workers", identical}, {"rotation_max_error", worst}};
  r.passed = identical && worst <= 1e-10;
  r.detail = std::string("workers {1,4,8} ") + (identical ? "identical" : "DIFFER") +
             "; rotated-basis max error " + fmt(worst) + " (<= 1e-10)";
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"invariants", "ode", "sde", "phases", "figure"};
  return names;
}

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "ode") return {1, 2};
  if (suite == "sde") return {3};
  if (suite == "phases") return {4, 5};
  if (suite == "figure") return {6};
  if (suite == "invariants") return {7, 8};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8};
  throw Error(ErrorKind::UnknownSuite, "unknown suite '" + suite + "'");
}

CriterionResult run_criterion(int id, const ValidationOptions& options) {
  const auto start = Clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = ode_oracle(options); break;
    case 2: r = discrete_to_ode(options); break;
    case 3: r = ou_stationary_variance(options); break;
    case 4: r = saddle_escape(options); break;
    case 5: r = traverse_scaling(options); break;
    case 6: r = annealing_necessity(options); break;
    case 7: r = invariant_suite(options); break;
    case 8: r = determinism_and_rotation(options); break;
    default: throw Error(ErrorKind::InvalidArgument, "no criterion " + std::to_string(id));
  }
  r.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
  if (r.elapsed_s > r.time_limit_s) {
    r.passed = false;
    r.detail += "; runtime " + fmt(r.elapsed_s) + " s exceeds " + fmt(r.time_limit_s) + " s";
  }
  return r;
}

std::vector<CriterionResult> run_suite(const std::string& suite, const ValidationOptions& options) {
  std::vector<CriterionResult> out;
  for (int id : suite_criteria(suite)) out.push_back(run_criterion(id, options));
  return out;
}

nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id},           {"name", r.name},
          {"passed", r.passed},   {"detail", r.detail},
          {"elapsed_s", r.elapsed_s}, {"time_limit_s", r.time_limit_s},
          {"metrics", r.metrics}};
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os.precision(3);
  os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << " (" << std::fixed
     << r.elapsed_s << " s / " << std::defaultfloat << r.time_limit_s << " s): " << r.detail;
  return os.str();
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 1.0};
  const double z = 1.96;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace msgd_lab
