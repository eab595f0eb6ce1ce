#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "msgd_lab/core.hpp"

namespace msgd_lab {

/// h_k and h_{k-1}; m_diag holds the two-time-scale tracker when diagnostics are on.
struct StepperState {
  Vector h_curr;
  Vector h_prev;
  std::uint64_t k = 0;
  std::optional<Vector> m_diag;

  /// State at k = 0 with h_prev = h_curr.
  static StepperState at_start(const Vector& init);
};

struct StepDiagnostics {
  double step_norm = 0.0;
  double norm_sq = 0.0;
  std::optional<double> m_error;
};

/// Lambda_k = Y Y^T applied through one inner product.
struct RankOneSample {
  std::span<const double> y;

  /// out = Lambda_k h; returns h^T Lambda_k h.
  double apply(std::span<const double> h, std::span<double> out) const {
    double proj = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) proj += y[i] * h[i];
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = proj * y[i];
    return proj * proj;
  }
};

/// Lambda_k = diag(lambda), the noiseless stream.
struct DiagonalSample {
  std::span<const double> lambda;

  double apply(std::span<const double> h, std::span<double> out) const {
    double quad = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      out[i] = lambda[i] * h[i];
      quad += out[i] * h[i];
    }
    return quad;
  }
};

/**
 * One heavy-ball step
 *   h_{k+1} = h_k + eta [Lambda_k h_k - (h_k^T Lambda_k h_k) h_k] + mu (h_k - h_{k-1}).
 * `scratch` must hold d doubles. Throws NonFiniteIterate when the new iterate is not finite.
 */
template <typename SampleAction>
void msgd_step(StepperState& state, const SampleAction& sample, double eta, double mu,
               std::span<double> scratch) {
  auto& h = state.h_curr;
  auto& hp = state.h_prev;
  const std::size_t d = h.size();
  const double quad = sample.apply(h, scratch);
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double next = h[i] + eta * (scratch[i] - quad * h[i]);
    // Skipped at mu = 0 so the update is bitwise the vanilla step.
    if (mu != 0.0) next += mu * (h[i] - hp[i]);
    hp[i] = h[i];
    h[i] = next;
    sq += next * next;
  }
  ++state.k;
  if (!std::isfinite(sq)) throw NonFiniteIterate(state.k);
}

/// Convenience overload returning the advanced state.
template <typename SampleAction>
StepperState msgd_step(StepperState state, const SampleAction& sample, double eta, double mu) {
  Vector scratch(state.h_curr.size());
  msgd_step(state, sample, eta, mu, std::span<double>(scratch));
  return state;
}

/// Vanilla SGHA: h + eta (I - h h^T) Y Y^T h.
Vector sgha_step(const Vector& h, std::span<const double> y, double eta);

/// M~(h) = (1 - mu)^{-1} [Lambda h - (h^T Lambda h) h] for the population covariance.
Vector scaled_mean_field(const Spectrum& spectrum, double mu, const Vector& h);

/// Advances m by m <- mu m + (1 - mu) M~(h_k); returns ||m_{k+1} - M~(h_k)||.
double advance_two_time_scale(Vector& m, const Spectrum& spectrum, double mu, const Vector& h_k);

struct RunOptions {
  bool diagnostics = false;
  /// Feed Lambda_k = Lambda every step instead of sampling.
  bool deterministic_stream = false;
  /// Called for k = 0..horizon with the eigenbasis iterate and the step size used at k.
  std::function<void(std::uint64_t k, const Vector& h, double eta)> observer;
};

std::uint64_t default_record_stride(std::uint64_t horizon);

/**
 * Runs the recursion for config.horizon steps and records every record_stride-th iterate plus
 * the final one. The rotated sampler runs in the ambient basis and records Q^T v_k.
 */
Trajectory run_trajectory(const RunConfig& config, std::uint64_t record_stride,
                          const RunOptions& options = {});

struct BoundReport {
  double max_norm_excess = 0.0;         // max ||h_k||^2 - 1
  double scaled_norm_excess = 0.0;      // max (||h_k||^2 - 1)(1 - mu)^3 / eta
  double max_step_ratio = 0.0;          // max ||h_{k+1} - h_k|| (1 - mu) / eta
  double step_bound = 0.0;              // 2 c_d (1 + max ||h||^2)
  bool violation = false;
};

/// c_d bounds ||Lambda_k|| = ||Y||^2; the trajectory must be recorded with stride 1.
BoundReport check_bound_invariants(const Trajectory& trajectory, double c_d);

/// Runs config with diagnostics on and returns max_k ||m_{k+1} - M~(h_k)||.
double track_two_time_scale(const RunConfig& config, bool deterministic_stream = false);

}  // namespace msgd_lab
