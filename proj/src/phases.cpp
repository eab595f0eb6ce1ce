#include "msgd_lab/phases.hpp"

#include <cmath>
#include <numbers>

#include "msgd_lab/stream.hpp"

namespace msgd_lab {

void validate_thresholds(const Thresholds& th, std::size_t dim) {
  if (!(th.delta_sq > 0.0 && th.delta_sq < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "delta_sq must lie in (0, 1)");
  }
  if (!(th.epsilon > 0.0 && th.epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
  }
  if (th.saddle_index < 2 || th.saddle_index > dim) {
    throw Error(ErrorKind::InvalidArgument, "saddle_index must lie in [2, d]");
  }
  if (!(th.nu > 0.0 && th.nu < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "nu must lie in (0, 1)");
  }
}

Thresholds default_thresholds(const RunConfig& config) {
  Thresholds th;
  th.delta_sq = std::min(0.01, 25.0 * config.eta);
  std::size_t best = 1;
  for (std::size_t i = 1; i < config.init.size(); ++i) {
    if (std::abs(config.init[i]) > std::abs(config.init[best])) best = i;
  }
  th.saddle_index = best + 1;
  return th;
}

PhaseDetector::PhaseDetector(const Thresholds& th, Schedule schedule, double base_eta)
    : th_(th), schedule_(std::move(schedule)), base_eta_(base_eta) {
  report_.delta = std::sqrt(th.delta_sq);
  report_.epsilon = th.epsilon;
  report_.source = PhaseSource::Detected;
}

void PhaseDetector::feed(std::uint64_t k, const Vector& h) {
  if (complete()) return;
  const double level = 1.0 - th_.delta_sq;
  const double time = algorithm_time(schedule_, base_eta_, k);
  if (!report_.n1) {
    const double hj = h[th_.saddle_index - 1];
    if (hj * hj > level) return;
    report_.n1 = k;
    report_.t1 = time;
  }
  if (!report_.n2) {
    if (h[0] * h[0] < level) return;
    report_.n2 = k;
    report_.t2 = time;
  }
  if (tail_mass(h) <= th_.epsilon) {
    report_.n3 = k;
    report_.t3 = time;
  }
}

PhaseReport detect_phases(const Trajectory& trajectory, const Thresholds& th) {
  validate_thresholds(th, trajectory.config.spectrum.dim());
  PhaseDetector detector(th, trajectory.config.schedule, trajectory.config.eta);
  for (const auto& p : trajectory.iterates) {
    detector.feed(p.k, p.h);
    if (detector.complete()) break;
  }
  return detector.report();
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::InvalidArgument, "probability must lie in [0, 1]");
  }
  // Acklam's rational approximation, relative error about 1.15e-9.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    // 1 - p is exact here; reflecting keeps the residual below free of cancellation.
    return -inverse_normal_cdf(1.0 - p);
  }
  // One Halley step against Phi(x) = erfc(-x / sqrt 2) / 2.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double predict_T1(const Spectrum& spectrum, double mu, double eta, double delta_sq, double nu,
                  double alpha_12) {
  if (!(eta > 0.0) || !(delta_sq >= 0.0) || !(nu > 0.0 && nu < 1.0) || !(alpha_12 > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "predict_T1 arguments out of range");
  }
  const double gap = spectrum.eigen_gap();
  const double z = inverse_normal_cdf((1.0 + nu / 2.0) / 2.0);
  const double ratio =
      2.0 * (1.0 - mu) * delta_sq * gap / (eta * z * z * alpha_12 * alpha_12);
  return (1.0 - mu) / (2.0 * gap) * std::log1p(ratio);
}

double predict_T2(const Spectrum& spectrum, double mu, double delta_sq) {
  if (!(delta_sq > 0.0 && delta_sq < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "delta_sq must lie in (0, 1)");
  }
  const double t = (1.0 - mu) / (2.0 * spectrum.eigen_gap()) * std::log((1.0 - delta_sq) / delta_sq);
  return std::max(t, 0.0);
}

Feasibility check_step_feasibility(const Spectrum& spectrum, double mu, double epsilon,
                                   double phi, double eta) {
  if (!(phi > 0.0) || !(epsilon > 0.0) || !(eta > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "feasibility arguments must be positive");
  }
  Feasibility f;
  f.max_eta = (1.0 - mu) * spectrum.eigen_gap() * epsilon / (4.0 * phi);
  f.margin = f.max_eta - eta;
  f.feasible = eta < f.max_eta;
  return f;
}

T3Prediction predict_T3(const Spectrum& spectrum, double mu, double eta, double delta_sq,
                        double epsilon, double phi) {
  const Feasibility f = check_step_feasibility(spectrum, mu, epsilon, phi, eta);
  T3Prediction out;
  out.feasible = f.feasible;
  out.margin = f.margin;
  if (!f.feasible) return out;
  const double scaled_gap = (1.0 - mu) * spectrum.eigen_gap();
  const double denom = scaled_gap * epsilon - 4.0 * eta * phi;
  const double t = (1.0 - mu) / (2.0 * spectrum.eigen_gap()) *
                   std::log(8.0 * scaled_gap * delta_sq / denom);
  // A negative value means the delta-ball already sits inside the epsilon-ball.
  out.t3 = std::max(t, 0.0);
  return out;
}

std::array<std::uint64_t, 3> predict_iteration_counts(double t1, double t2, double t3,
                                                      double eta_phase1, double eta_phase2,
                                                      double eta_phase3) {
  auto count = [](double t, double eta) -> std::uint64_t {
    if (!(eta > 0.0)) throw Error(ErrorKind::InvalidArgument, "phase step sizes must be positive");
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "phase times must be nonnegative");
    const double n = t / eta;
    return static_cast<std::uint64_t>(std::ceil(n * (1.0 - 1e-12)));
  };
  return {count(t1, eta_phase1), count(t2, eta_phase2), count(t3, eta_phase3)};
}

PhaseReport PhasePrediction::report(const Thresholds& th) const {
  PhaseReport r;
  r.source = PhaseSource::Predicted;
  r.delta = std::sqrt(th.delta_sq);
  r.epsilon = th.epsilon;
  r.t1 = T1;
  r.n1 = N[0];
  r.t2 = T1 + T2;
  r.n2 = N[0] + N[1];
  if (T3) {
    r.t3 = T1 + T2 + *T3;
    r.n3 = N[0] + N[1] + N[2];
  }
  return r;
}

PhasePrediction predict_phases(const RunConfig& config, const Thresholds& th,
                               const MomentTable& moments) {
  validate_thresholds(th, config.spectrum.dim());
  PhasePrediction p;
  p.eta_phase12 = config.eta;
  p.eta_phase3 = config.eta;
  if (const auto* anneal = std::get_if<AnnealAt>(&config.schedule)) {
    p.eta_phase3 = config.eta * anneal->factor;
  }
  const auto& s = config.spectrum;
  p.T1 = predict_T1(s, config.mu, p.eta_phase12, th.delta_sq, th.nu, moments(0, 1));
  p.T2 = predict_T2(s, config.mu, th.delta_sq);
  p.feasibility_phase12 = check_step_feasibility(s, config.mu, th.epsilon, moments.phi, p.eta_phase12);
  p.feasibility_phase3 = check_step_feasibility(s, config.mu, th.epsilon, moments.phi, p.eta_phase3);
  const T3Prediction t3 = predict_T3(s, config.mu, p.eta_phase3, th.delta_sq, th.epsilon, moments.phi);
  if (t3.feasible) p.T3 = t3.t3;
  p.N = predict_iteration_counts(p.T1, p.T2, p.T3.value_or(0.0), p.eta_phase12, p.eta_phase12,
                                 p.eta_phase3);
  return p;
}

}  // namespace msgd_lab
