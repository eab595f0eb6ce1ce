#pragma once

#include <cstdint>
#include <vector>

#include "msgd_lab/core.hpp"

namespace msgd_lab {

struct MomentTable;

/// H(t) of the limiting flow dH/dt = (1 - mu)^{-1} [Lambda H - (H^T Lambda H) H], in closed form.
class OdeSolution {
 public:
  OdeSolution(Spectrum spectrum, double mu, Vector h0);

  Vector operator()(double t) const;

  const Spectrum& spectrum() const noexcept { return spectrum_; }
  double mu() const noexcept { return mu_; }
  const Vector& h0() const noexcept { return h0_; }

 private:
  Spectrum spectrum_;
  double mu_;
  Vector h0_;
};

/// Normalized exponential growth, evaluated with a shared max-exponent shift.
Vector ode_closed_form(const Spectrum& spectrum, double mu, const Vector& h0, double t);

/// Right-hand side of the limiting ODE.
Vector ode_vector_field(const Spectrum& spectrum, double mu, const Vector& h);

struct OdePath {
  std::vector<double> t;
  std::vector<Vector> h;
};

/// Fixed-step classical RK4 from 0 to t_end; the last step is shortened to land on t_end.
OdePath ode_integrate(const Spectrum& spectrum, double mu, const Vector& h0, double t_end,
                      double dt);

struct OUMoments {
  double mean = 0.0;
  double variance = 0.0;
  double stationary_variance = 0.0;  // +inf unless drift < 0
};

OUMoments ou_moments(const OUParams& params, double t);

/// Coordinate i (0-based, i >= 1) near the optimum e_1:
/// drift (lambda_i - lambda_1)/(1 - mu), diffusion alpha_{i,1}/(1 - mu).
OUParams near_optimum_params(const Spectrum& spectrum, double mu, const MomentTable& moments,
                             std::size_t i, double u0 = 0.0);

/// Coordinate i near the saddle e_j (both 0-based, i != j).
OUParams saddle_params(const Spectrum& spectrum, double mu, const MomentTable& moments,
                       std::size_t i, std::size_t j, double u0 = 0.0);

struct OUPath {
  std::vector<double> t;
  std::vector<double> value;
};

/// Euler-Maruyama: U += drift U dt + diffusion sqrt(dt) N(0,1).
OUPath ou_simulate(const OUParams& params, double t_end, double dt, std::uint64_t seed);

/// Terminal values of n_paths independent paths; path p uses derive_seed(seed, p).
std::vector<double> ou_terminal_values(const OUParams& params, double t_end, double dt,
                                       std::uint64_t seed, std::size_t n_paths,
                                       unsigned workers = 1);

}  // namespace msgd_lab
