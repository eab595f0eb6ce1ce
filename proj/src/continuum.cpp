#include "msgd_lab/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "msgd_lab/parallel.hpp"
#include "msgd_lab/rng.hpp"
#include "msgd_lab/stream.hpp"

namespace msgd_lab {

OdeSolution::OdeSolution(Spectrum spectrum, double mu, Vector h0)
    : spectrum_(std::move(spectrum)), mu_(mu), h0_(std::move(h0)) {
  if (h0_.size() != spectrum_.dim()) {
    throw Error(ErrorKind::InvalidArgument, "h0 dimension does not match the spectrum");
  }
}

Vector OdeSolution::operator()(double t) const { return ode_closed_form(spectrum_, mu_, h0_, t); }

Vector ode_closed_form(const Spectrum& spectrum, double mu, const Vector& h0, double t) {
  if (t == 0.0) return h0;
  const std::size_t d = h0.size();
  const double rate = t / (1.0 - mu);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d; ++i) {
    if (h0[i] != 0.0) shift = std::max(shift, spectrum[i] * rate);
  }
  Vector out(d, 0.0);
  if (!std::isfinite(shift)) return out;
  double c = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = h0[i] == 0.0 ? 0.0 : h0[i] * std::exp(spectrum[i] * rate - shift);
    c += out[i] * out[i];
  }
  const double inv = 1.0 / std::sqrt(c);
  for (double& x : out) x *= inv;
  return out;
}

Vector ode_vector_field(const Spectrum& spectrum, double mu, const Vector& h) {
  const std::size_t d = h.size();
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) quad += spectrum[i] * h[i] * h[i];
  Vector out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = (spectrum[i] * h[i] - quad * h[i]) / (1.0 - mu);
  return out;
}

OdePath ode_integrate(const Spectrum& spectrum, double mu, const Vector& h0, double t_end,
                      double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (t_end < 0.0) throw Error(ErrorKind::InvalidArgument, "t_end must be nonnegative");
  const std::size_t d = h0.size();
  OdePath path;
  path.t.push_back(0.0);
  path.h.push_back(h0);
  Vector h = h0, tmp(d);
  const auto n = static_cast<std::uint64_t>(std::ceil(t_end / dt - 1e-9));
  for (std::uint64_t s = 0; s < n; ++s) {
    const bool last = s + 1 == n;
    const double step = last ? t_end - static_cast<double>(s) * dt : dt;
    const Vector k1 = ode_vector_field(spectrum, mu, h);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = h[i] + 0.5 * step * k1[i];
    const Vector k2 = ode_vector_field(spectrum, mu, tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = h[i] + 0.5 * step * k2[i];
    const Vector k3 = ode_vector_field(spectrum, mu, tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = h[i] + step * k3[i];
    const Vector k4 = ode_vector_field(spectrum, mu, tmp);
    for (std::size_t i = 0; i < d; ++i) {
      h[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    path.t.push_back(last ? t_end : static_cast<double>(s + 1) * dt);
    path.h.push_back(h);
  }
  return path;
}

OUMoments ou_moments(const OUParams& params, double t) {
  if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "t must be nonnegative");
  OUMoments out;
  const double a = params.drift;
  const double s2 = params.diffusion * params.diffusion;
  out.mean = params.u0 * std::exp(a * t);
  // expm1 keeps small |a t| accurate; a = 0 is Brownian motion.
  out.variance = a == 0.0 ? s2 * t : s2 * std::expm1(2.0 * a * t) / (2.0 * a);
  out.stationary_variance =
      a < 0.0 ? s2 / (-2.0 * a) : std::numeric_limits<double>::infinity();
  return out;
}

OUParams near_optimum_params(const Spectrum& spectrum, double mu, const MomentTable& moments,
                             std::size_t i, double u0) {
  return saddle_params(spectrum, mu, moments, i, 0, u0);
}

OUParams saddle_params(const Spectrum& spectrum, double mu, const MomentTable& moments,
                       std::size_t i, std::size_t j, double u0) {
  if (i == j || i >= spectrum.dim() || j >= spectrum.dim()) {
    throw Error(ErrorKind::InvalidArgument, "coordinate indices must differ and lie in range");
  }
  OUParams p;
  p.drift = (spectrum[i] - spectrum[j]) / (1.0 - mu);
  p.diffusion = moments(i, j) / (1.0 - mu);
  p.u0 = u0;
  return p;
}

namespace {

double euler_maruyama(const OUParams& params, double t_end, double dt, Engine& engine,
                      std::vector<double>* record, std::vector<double>* times) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<std::uint64_t>(std::ceil(t_end / dt - 1e-9));
  const double sqrt_dt = std::sqrt(dt);
  double u = params.u0;
  if (record) {
    record->push_back(u);
    times->push_back(0.0);
  }
  for (std::uint64_t s = 0; s < n; ++s) {
    u += params.drift * u * dt + params.diffusion * sqrt_dt * normal(engine);
    if (record) {
      record->push_back(u);
      times->push_back(static_cast<double>(s + 1) * dt);
    }
  }
  return u;
}

}  // namespace

OUPath ou_simulate(const OUParams& params, double t_end, double dt, std::uint64_t seed) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  OUPath path;
  Engine engine = make_engine(seed);
  euler_maruyama(params, t_end, dt, engine, &path.value, &path.t);
  return path;
}

std::vector<double> ou_terminal_values(const OUParams& params, double t_end, double dt,
                                       std::uint64_t seed, std::size_t n_paths,
                                       unsigned workers) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  std::vector<double> out(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t p) {
    Engine engine = make_engine(derive_seed(seed, p));
    out[p] = euler_maruyama(params, t_end, dt, engine, nullptr, nullptr);
  });
  return out;
}

}  // namespace msgd_lab
