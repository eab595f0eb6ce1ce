#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "msgd_lab/continuum.hpp"
#include "msgd_lab/ensemble.hpp"
#include "msgd_lab/io.hpp"
#include "msgd_lab/optimizer.hpp"
#include "msgd_lab/parallel.hpp"
#include "msgd_lab/phases.hpp"
#include "msgd_lab/stream.hpp"
#include "msgd_lab/validation.hpp"

namespace msgd_lab::cli {

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<double> eta, mu;
  std::optional<std::uint64_t> seed, horizon;
  std::string sampler;
};

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  bool force = false;
  unsigned workers = 1;
  Overrides overrides;
};

void apply_overrides(RunConfig& c, const Overrides& o) {
  if (o.eta) c.eta = *o.eta;
  if (o.mu) c.mu = *o.mu;
  if (o.seed) c.seed = *o.seed;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.sampler == "rademacher") {
    c.sampler = ScaledRademacher{};
  } else if (o.sampler == "gaussian") {
    if (!std::holds_alternative<TruncatedGaussian>(c.sampler)) c.sampler = TruncatedGaussian{};
  } else if (o.sampler == "rotated") {
    if (!std::holds_alternative<RotatedScaledRademacher>(c.sampler)) {
      c.sampler = RotatedScaledRademacher{c.seed};
    }
  }
}

Experiment load_experiment(const Common& common) {
  Experiment e = experiment_from_json(read_json_file(common.config_path));
  const double old_eta = e.run.eta;
  apply_overrides(e.run, common.overrides);
  // Keep the default delta^2 tied to eta when eta is overridden.
  if (e.run.eta != old_eta && e.thresholds.delta_sq == std::min(0.01, 25.0 * old_eta)) {
    e.thresholds.delta_sq = std::min(0.01, 25.0 * e.run.eta);
  }
  e.run = validate_config(e.run);
  return e;
}

/// Creates out_dir; refuses to replace any of `files` unless forced.
void prepare_output(const Common& common, std::initializer_list<const char*> files) {
  fs::create_directories(common.out_dir);
  if (common.force) return;
  for (const char* f : files) {
    const fs::path p = fs::path(common.out_dir) / f;
    if (fs::exists(p)) {
      throw Error(ErrorKind::InvalidArgument, p.string() + " exists (use --force to overwrite)");
    }
  }
}

void write(const Common& common, const char* name, const std::string& text) {
  write_text_file(fs::path(common.out_dir) / name, text);
}

void add_common(CLI::App* cmd, Common& common, bool with_config = true) {
  if (with_config) cmd->add_option("config", common.config_path, "JSON config file")->required();
  cmd->add_option("-o,--out", common.out_dir, "output directory");
  cmd->add_flag("--force", common.force, "overwrite existing output files");
}

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--eta", o.eta, "override the step size");
  cmd->add_option("--mu", o.mu, "override the momentum parameter");
  cmd->add_option("--seed", o.seed, "override the seed");
  cmd->add_option("--horizon", o.horizon, "override the iteration count");
  cmd->add_option("--sampler", o.sampler, "override the sampler")
      ->check(CLI::IsMember({"rademacher", "gaussian", "rotated"}));
}

std::vector<double> as_doubles(const std::vector<std::uint64_t>& k) {
  return {k.begin(), k.end()};
}

int cmd_simulate(const Common& common, std::uint64_t stride, bool diagnostics, bool deterministic,
                 std::ostream& out) {
  const Experiment e = load_experiment(common);
  prepare_output(common, {"trajectory.csv", "diagnostics.json", "trajectory.svg"});
  RunOptions options;
  options.diagnostics = diagnostics;
  options.deterministic_stream = deterministic;
  const std::uint64_t record = stride ? stride : default_record_stride(e.run.horizon);
  const Trajectory traj = run_trajectory(e.run, record, options);

  json diag = to_json(traj.diagnostics);
  diag["phases"] = to_json(detect_phases(traj, e.thresholds));
  diag["thresholds"] = to_json(e.thresholds);
  if (record == 1) {
    const double c_d = std::max(traj.diagnostics.max_sample_norm * traj.diagnostics.max_sample_norm, 1e-300);
    const BoundReport b = check_bound_invariants(traj, c_d);
    diag["bounds"] = {{"max_norm_excess", b.max_norm_excess},
                      {"scaled_norm_excess", b.scaled_norm_excess},
                      {"max_step_ratio", b.max_step_ratio},
                      {"step_bound", b.step_bound},
                      {"violation", b.violation}};
  }
  write(common, "trajectory.csv", trajectory_csv(traj));
  write(common, "diagnostics.json", diag.dump(2) + "\n");

  ChartSeries run{"||h1|-1|", {}, {}, "#1f77b4"};
  for (const auto& p : traj.iterates) {
    run.x.push_back(static_cast<double>(p.k));
    run.y.push_back(top_coordinate_error(p.h));
  }
  std::vector<ChartSeries> series{run};
  if (deterministic) {
    ChartSeries ode{"ODE reference", run.x, {}, "#d62728"};
    for (const auto& p : traj.iterates) {
      const double t = algorithm_time(e.run.schedule, e.run.eta, p.k);
      ode.y.push_back(top_coordinate_error(ode_closed_form(e.run.spectrum, e.run.mu, e.run.init, t)));
    }
    series.push_back(std::move(ode));
  }
  write(common, "trajectory.svg",
        svg_line_chart(series, {"MSGD trajectory (mu=" + format_number(e.run.mu) + ", eta=" +
                                    format_number(e.run.eta) + ")",
                                "iteration k", "||h1|-1|"}));
  out << "wrote " << traj.iterates.size() << " rows to "
      << (fs::path(common.out_dir) / "trajectory.csv").string() << '\n';
  return Ok;
}

int cmd_ensemble(const Common& common, std::optional<std::size_t> n_runs,
                 std::optional<std::uint64_t> stride, std::ostream& out) {
  const Experiment e = load_experiment(common);
  prepare_output(common, {"curves.csv", "runs.csv", "summary.json", "curves.svg"});
  EnsembleSpec spec{e.run};
  spec.n_runs = n_runs.value_or(e.n_runs);
  spec.thresholds = e.thresholds;
  spec.record_stride = stride.value_or(e.record_stride);
  const EnsembleResult res = run_ensemble(spec, common.workers);

  write(common, "curves.csv", curves_csv(res.curves));
  write(common, "runs.csv", runs_csv(res.per_run));
  write(common, "summary.json", ensemble_summary_json(res).dump(2) + "\n");
  const auto x = as_doubles(res.curves.k);
  write(common, "curves.svg",
        svg_line_chart({{"mean", x, res.curves.mean, "#1f77b4"},
                        {"median", x, res.curves.q50, "#ff7f0e"},
                        {"q25", x, res.curves.q25, "#bbbbbb"},
                        {"q75", x, res.curves.q75, "#888888"}},
                       {"Ensemble of " + std::to_string(spec.n_runs) + " runs (mu=" +
                            format_number(e.run.mu) + ")",
                        "iteration k", "||h1|-1|"}));
  const PhaseMedians m = phase_medians(res);
  auto show = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("-"); };
  out << "runs " << spec.n_runs << ", failure rate " << format_number(res.failure_rate)
      << ", success rate(eps=" << format_number(spec.thresholds.epsilon)
      << ") " << format_number(res.success_rate(spec.thresholds.epsilon)) << '\n'
      << "median n1 " << show(m.n1) << ", n2 " << show(m.n2) << ", n3 " << show(m.n3) << '\n';
  return Ok;
}

int cmd_ode(const Common& common, double t_end, double dt, bool rk4, std::ostream& out) {
  const Experiment e = load_experiment(common);
  prepare_output(common, {"ode.csv", "ode.svg"});
  OdePath path;
  if (rk4) {
    path = ode_integrate(e.run.spectrum, e.run.mu, e.run.init, t_end, dt);
  } else {
    const auto n = static_cast<std::uint64_t>(std::ceil(t_end / dt - 1e-9));
    for (std::uint64_t s = 0; s <= n; ++s) {
      const double t = s == n ? t_end : static_cast<double>(s) * dt;
      path.t.push_back(t);
      path.h.push_back(ode_closed_form(e.run.spectrum, e.run.mu, e.run.init, t));
    }
  }
  write(common, "ode.csv", ode_csv(path));
  ChartSeries err{"||H1|-1|", path.t, {}, "#d62728"};
  for (const auto& h : path.h) err.y.push_back(top_coordinate_error(h));
  write(common, "ode.svg", svg_line_chart({err}, {"Limiting ODE", "algorithm time t", "||H1|-1|"}));
  out << "wrote " << path.t.size() << " rows to " << (fs::path(common.out_dir) / "ode.csv").string()
      << '\n';
  return Ok;
}

MomentTable moments_for(const Experiment& e) {
  if (e.moments == MomentSource::Estimated || std::holds_alternative<TruncatedGaussian>(e.run.sampler)) {
    return estimate_moments(e.run.sampler, e.run.spectrum, std::max<std::uint64_t>(e.moment_samples, 1000),
                            e.run.seed);
  }
  return analytic_moments(e.run.sampler, e.run.spectrum);
}

int cmd_sde(const Common& common, std::size_t coord, std::size_t saddle, double t_end, double dt,
            double u0, std::ostream& out) {
  const Experiment e = load_experiment(common);
  prepare_output(common, {"sde.csv", "sde.json", "sde.svg"});
  const std::size_t d = e.run.spectrum.dim();
  if (coord < 1 || coord > d || saddle < 1 || saddle > d || coord == saddle) {
    throw Error(ErrorKind::InvalidArgument, "--coord and --saddle must be distinct indices in [1, d]");
  }
  const MomentTable moments = moments_for(e);
  const OUParams p = saddle_params(e.run.spectrum, e.run.mu, moments, coord - 1, saddle - 1, u0);
  const OUPath path = ou_simulate(p, t_end, dt, e.run.seed);
  const OUMoments m = ou_moments(p, t_end);
  write(common, "sde.csv", ou_csv(path));
  json summary = {{"drift", p.drift},
                  {"diffusion", p.diffusion},
                  {"u0", p.u0},
                  {"t_end", t_end},
                  {"mean", m.mean},
                  {"variance", m.variance},
                  {"stationary_variance", std::isfinite(m.stationary_variance)
                                              ? json(m.stationary_variance)
                                              : json(nullptr)}};
  write(common, "sde.json", summary.dump(2) + "\n");
  write(common, "sde.svg",
        svg_line_chart({{"U(t)", path.t, path.value, "#2ca02c"}},
                       {"O-U path (coord " + std::to_string(coord) + ", saddle " +
                            std::to_string(saddle) + ")",
                        "algorithm time t", "U", false}));
  out << "drift " << format_number(p.drift) << ", diffusion " << format_number(p.diffusion)
      << ", variance(t_end) " << format_number(m.variance) << '\n';
  return Ok;
}

int cmd_predict(const Common& common, bool strict, bool json_only, std::ostream& out) {
  const Experiment e = load_experiment(common);
  const MomentTable moments = moments_for(e);
  const PhasePrediction p = predict_phases(e.run, e.thresholds, moments);
  json j = {{"max_eta", p.feasibility_phase3.max_eta},
            {"eta_phase12", p.eta_phase12},
            {"eta_phase3", p.eta_phase3},
            {"feasible_phase12", p.feasibility_phase12.feasible},
            {"feasible", p.feasibility_phase3.feasible},
            {"margin", p.feasibility_phase3.margin},
            {"T1", p.T1},
            {"T2", p.T2},
            {"T3", p.T3 ? json(*p.T3) : json(nullptr)},
            {"N1", p.N[0]},
            {"N2", p.N[1]},
            {"N3", p.T3 ? json(p.N[2]) : json(nullptr)},
            {"phi", moments.phi},
            {"thresholds", to_json(e.thresholds)},
            {"report", to_json(p.report(e.thresholds))}};
  if (!json_only) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "quantity      value\n"
       << "max_eta       " << p.feasibility_phase3.max_eta << '\n'
       << "eta (I, II)   " << p.eta_phase12
       << (p.feasibility_phase12.feasible ? "  feasible\n" : "  infeasible\n")
       << "eta (III)     " << p.eta_phase3
       << (p.feasibility_phase3.feasible ? "  feasible\n" : "  infeasible\n")
       << "T1            " << p.T1 << '\n'
       << "T2            " << p.T2 << '\n'
       << "T3            " << (p.T3 ? format_number(*p.T3) : std::string("infeasible")) << '\n'
       << "N1            " << p.N[0] << '\n'
       << "N2            " << p.N[1] << '\n'
       << "N3            " << (p.T3 ? std::to_string(p.N[2]) : std::string("infeasible")) << '\n';
    out << os.str();
  }
  out << j.dump(2) << '\n';
  if (common.out_dir != ".") {
    prepare_output(common, {"predict.json"});
    write(common, "predict.json", j.dump(2) + "\n");
  }
  return strict && !p.feasibility_phase3.feasible ? Infeasible : Ok;
}

int cmd_validate(const Common& common, const std::string& suite, std::ostream& out) {
  ValidationOptions options;
  options.workers = common.workers;
  const auto ids = suite_criteria(suite);
  prepare_output(common, {"report.json"});
  json report = {{"suite", suite}, {"criteria", json::array()}};
  bool all = true;
  for (int id : ids) {
    const CriterionResult r = run_criterion(id, options);
    out << format_line(r) << '\n' << std::flush;
    report["criteria"].push_back(to_json(r));
    all = all && r.passed;
  }
  report["passed"] = all;
  write(common, "report.json", report.dump(2) + "\n");
  return all ? Ok : ValidationFailed;
}

int cmd_estimate_moments(const Common& common, std::uint64_t samples, std::ostream& out) {
  const Experiment e = load_experiment(common);
  prepare_output(common, {"moments.json"});
  const MomentTable est = estimate_moments(e.run.sampler, e.run.spectrum, samples, e.run.seed);
  json j = {{"estimated", to_json(est)}};
  try {
    j["analytic"] = to_json(analytic_moments(e.run.sampler, e.run.spectrum));
  } catch (const Error&) {
    j["analytic"] = nullptr;
  }
  write(common, "moments.json", j.dump(2) + "\n");
  out << "phi (estimated) " << format_number(est.phi) << '\n';
  return Ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Momentum SGD on streaming PCA: simulation, limits and phase predictions", "msgd-lab"};
  app.require_subcommand(1);
  Common common;
  common.workers = default_workers();
  app.add_option("--workers", common.workers, "worker threads (default: MSGD_LAB_WORKERS or cores)")
      ->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "run one trajectory");
  add_common(simulate, common);
  add_overrides(simulate, common.overrides);
  std::uint64_t stride = 0;
  bool diagnostics = false, deterministic = false;
  simulate->add_option("--stride", stride, "record stride (default 1 up to 1e5 steps, else 10)");
  simulate->add_flag("--diagnostics", diagnostics, "track the two-time-scale m_k recursion");
  simulate->add_flag("--deterministic", deterministic, "use Lambda_k = Lambda (noiseless stream)");

  auto* ensemble = app.add_subcommand("ensemble", "run a seeded Monte Carlo ensemble");
  add_common(ensemble, common);
  add_overrides(ensemble, common.overrides);
  std::optional<std::size_t> n_runs;
  std::optional<std::uint64_t> ens_stride;
  ensemble->add_option("--runs", n_runs, "number of runs");
  ensemble->add_option("--stride", ens_stride, "record stride for the curves");

  auto* ode = app.add_subcommand("ode", "evaluate the limiting ODE");
  add_common(ode, common);
  add_overrides(ode, common.overrides);
  double t_end = 5.0, dt = 1e-2;
  bool rk4 = false;
  ode->add_option("--t-end", t_end, "end time (algorithm time)");
  ode->add_option("--dt", dt, "grid spacing");
  ode->add_flag("--rk4", rk4, "integrate with RK4 instead of the closed form");

  auto* sde = app.add_subcommand("sde", "simulate a limiting O-U coordinate");
  add_common(sde, common);
  add_overrides(sde, common.overrides);
  std::size_t coord = 2, saddle = 1;
  double sde_t_end = 1.0, sde_dt = 1e-3, u0 = 0.0;
  sde->add_option("--coord", coord, "coordinate i (1-based)");
  sde->add_option("--saddle", saddle, "stationary point e_j (1 = optimum)");
  sde->add_option("--t-end", sde_t_end, "end time");
  sde->add_option("--dt", sde_dt, "Euler-Maruyama step");
  sde->add_option("--u0", u0, "initial normalized error");

  auto* predict = app.add_subcommand("predict", "print predicted phase times and feasibility");
  add_common(predict, common);
  add_overrides(predict, common.overrides);
  bool strict = false, json_only = false;
  predict->add_flag("--strict", strict, "exit 3 when the Phase III step size is infeasible");
  predict->add_flag("--json", json_only, "print only the JSON document");

  auto* validate = app.add_subcommand("validate", "run an acceptance suite");
  add_common(validate, common, false);
  std::string suite;
  validate->add_option("suite", suite, "invariants | ode | sde | phases | figure | all")->required();

  auto* moments = app.add_subcommand("estimate-moments", "estimate alpha_{i,j} and phi");
  add_common(moments, common);
  add_overrides(moments, common.overrides);
  std::uint64_t samples = 100000;
  moments->add_option("--samples", samples, "number of samples (>= 1000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? Ok : Usage;
  }

  try {
    if (*simulate) return cmd_simulate(common, stride, diagnostics, deterministic, out);
    if (*ensemble) return cmd_ensemble(common, n_runs, ens_stride, out);
    if (*ode) return cmd_ode(common, t_end, dt, rk4, out);
    if (*sde) return cmd_sde(common, coord, saddle, sde_t_end, sde_dt, u0, out);
    if (*predict) return cmd_predict(common, strict, json_only, out);
    if (*validate) return cmd_validate(common, suite, out);
    if (*moments) return cmd_estimate_moments(common, samples, out);
  } catch (const NonFiniteIterate& e) {
    err << "error: " << e.what() << '\n';
    return Divergence;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return Usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return Usage;
  }
  return Usage;
}

}  // namespace msgd_lab::cli
