#include "msgd_lab/optimizer.hpp"

#include <algorithm>

#include "msgd_lab/rng.hpp"
#include "msgd_lab/stream.hpp"

namespace msgd_lab {

StepperState StepperState::at_start(const Vector& init) {
  StepperState s;
  s.h_curr = init;
  s.h_prev = init;
  return s;
}

Vector sgha_step(const Vector& h, std::span<const double> y, double eta) {
  double proj = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) proj += y[i] * h[i];
  const double quad = proj * proj;
  Vector next(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) next[i] = h[i] + eta * (proj * y[i] - quad * h[i]);
  return next;
}

Vector scaled_mean_field(const Spectrum& spectrum, double mu, const Vector& h) {
  const std::size_t d = h.size();
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) quad += spectrum[i] * h[i] * h[i];
  Vector out(d);
  const double scale = 1.0 / (1.0 - mu);
  for (std::size_t i = 0; i < d; ++i) out[i] = scale * (spectrum[i] * h[i] - quad * h[i]);
  return out;
}

double advance_two_time_scale(Vector& m, const Spectrum& spectrum, double mu, const Vector& h_k) {
  const Vector target = scaled_mean_field(spectrum, mu, h_k);
  double err = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = mu * m[i] + (1.0 - mu) * target[i];
    const double e = m[i] - target[i];
    err += e * e;
  }
  return std::sqrt(err);
}

std::uint64_t default_record_stride(std::uint64_t horizon) { return horizon <= 100000 ? 1 : 10; }

namespace {

double distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return std::sqrt(s);
}

}  // namespace

Trajectory run_trajectory(const RunConfig& config, std::uint64_t record_stride,
                          const RunOptions& options) {
  if (record_stride == 0) throw Error(ErrorKind::InvalidArgument, "record_stride must be positive");
  const std::size_t d = config.spectrum.dim();

  Trajectory traj{config, record_stride, {}, eta_change_points(config.schedule, config.eta), {}};

  Sampler sampler(config.sampler, config.spectrum);
  Engine engine = make_engine(config.seed);
  const Rotation* rotation = sampler.rotation();

  // The recursion runs on v; h = Q^T v is the eigenbasis view (identical when unrotated).
  StepperState state = StepperState::at_start(rotation ? rotation->apply(config.init) : config.init);
  Vector h = config.init;
  Vector h_last = h;
  Vector y(d), x(d), scratch(d);
  const std::span<double> scratch_span(scratch);

  auto& diag = traj.diagnostics;
  diag.max_norm_sq = dot(h, h);
  Vector m;
  if (options.diagnostics) {
    m = scaled_mean_field(config.spectrum, config.mu, h);
    diag.max_m_error = 0.0;
  }

  traj.iterates.push_back({0, h});
  if (options.observer) options.observer(0, h, effective_eta(config.schedule, config.eta, 0));

  for (std::uint64_t k = 0; k < config.horizon; ++k) {
    const double eta = effective_eta(config.schedule, config.eta, k);
    if (options.deterministic_stream) {
      const DiagonalSample action{config.spectrum.values()};
      msgd_step(state, action, eta, config.mu, scratch_span);
      diag.max_sample_norm = std::max(diag.max_sample_norm, std::sqrt(config.spectrum.trace()));
    } else {
      sampler.draw(engine, std::span<double>(y));
      diag.max_sample_norm = std::max(diag.max_sample_norm, norm(y));
      if (rotation) {
        rotation->apply(std::span<const double>(y), std::span<double>(x));
        msgd_step(state, RankOneSample{x}, eta, config.mu, scratch_span);
      } else {
        msgd_step(state, RankOneSample{y}, eta, config.mu, scratch_span);
      }
    }
    if (options.diagnostics) {
      const double err = advance_two_time_scale(m, config.spectrum, config.mu, h_last);
      diag.max_m_error = std::max(*diag.max_m_error, err);
    }
    if (rotation) {
      rotation->apply_transpose(std::span<const double>(state.h_curr), std::span<double>(h));
    } else {
      h = state.h_curr;
    }
    diag.max_step_norm = std::max(diag.max_step_norm, distance(h, h_last));
    diag.max_norm_sq = std::max(diag.max_norm_sq, dot(h, h));
    h_last = h;

    const std::uint64_t next_k = k + 1;
    if (next_k % record_stride == 0 || next_k == config.horizon) {
      traj.iterates.push_back({next_k, h});
    }
    if (options.observer) {
      options.observer(next_k, h, effective_eta(config.schedule, config.eta, next_k));
    }
  }
  return traj;
}

BoundReport check_bound_invariants(const Trajectory& trajectory, double c_d) {
  const auto& cfg = trajectory.config;
  const double one_minus_mu = 1.0 - cfg.mu;
  BoundReport report;
  double max_h_sq = 0.0;
  report.max_norm_excess = -1.0;
  const auto& pts = trajectory.iterates;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double sq = dot(pts[i].h, pts[i].h);
    max_h_sq = std::max(max_h_sq, sq);
    report.max_norm_excess = std::max(report.max_norm_excess, sq - 1.0);
    if (i > 0 && pts[i].k == pts[i - 1].k + 1) {
      // The schedule is non-increasing, so the base step size bounds every velocity term.
      const double ratio = distance(pts[i].h, pts[i - 1].h) * one_minus_mu / cfg.eta;
      report.max_step_ratio = std::max(report.max_step_ratio, ratio);
    }
  }
  report.scaled_norm_excess = report.max_norm_excess * std::pow(one_minus_mu, 3) / cfg.eta;
  report.step_bound = 2.0 * c_d * (1.0 + max_h_sq);
  report.violation = report.max_step_ratio > report.step_bound;
  return report;
}

double track_two_time_scale(const RunConfig& config, bool deterministic_stream) {
  RunOptions options;
  options.diagnostics = true;
  options.deterministic_stream = deterministic_stream;
  // Only the final iterate is kept; the tracker runs every step regardless of stride.
  const auto traj = run_trajectory(config, std::max<std::uint64_t>(config.horizon, 1), options);
  return traj.diagnostics.max_m_error.value_or(0.0);
}

}  // namespace msgd_lab
