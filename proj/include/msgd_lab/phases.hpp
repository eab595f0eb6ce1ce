#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "msgd_lab/core.hpp"

namespace msgd_lab {

struct MomentTable;

/// Phase thresholds. saddle_index is the 1-based j of the saddle e_j the run starts near.
struct Thresholds {
  double delta_sq = 0.01;
  double epsilon = 0.01;
  std::size_t saddle_index = 2;
  double nu = 0.5;
};

void validate_thresholds(const Thresholds& th, std::size_t dim);

/// delta^2 = min(0.01, 25 eta), epsilon = 0.01, nu = 0.5, saddle at the largest |init| coordinate.
Thresholds default_thresholds(const RunConfig& config);

/**
 * Online phase-boundary detector. Feed iterates in increasing k; boundaries are the first
 * fed k at which each condition holds:
 *   n1: (h^(j))^2 <= 1 - delta^2
 *   n2: k >= n1 and (h^(1))^2 >= 1 - delta^2
 *   n3: k >= n2 and sum_{i>=2} (h^(i))^2 <= epsilon
 * t_p is the algorithm time sum_{k < n_p} eta(k).
 */
class PhaseDetector {
 public:
  PhaseDetector(const Thresholds& th, Schedule schedule, double base_eta);

  void feed(std::uint64_t k, const Vector& h);
  bool complete() const noexcept { return report_.n3.has_value(); }
  const PhaseReport& report() const noexcept { return report_; }

 private:
  Thresholds th_;
  Schedule schedule_;
  double base_eta_;
  PhaseReport report_;
};

PhaseReport detect_phases(const Trajectory& trajectory, const Thresholds& th);

/// Standard normal quantile; rational approximation polished by a Newton step on erfc.
double inverse_normal_cdf(double p);

/// Saddle escape time (algorithm time) for a run started at e_2.
double predict_T1(const Spectrum& spectrum, double mu, double eta, double delta_sq, double nu,
                  double alpha_12);

/// Deterministic traverse time between the thresholds.
double predict_T2(const Spectrum& spectrum, double mu, double delta_sq);

struct Feasibility {
  bool feasible = false;
  double margin = 0.0;  // max_eta - eta
  double max_eta = 0.0;
};

/// eta < (1 - mu)(lambda_1 - lambda_2) epsilon / (4 phi), strictly.
Feasibility check_step_feasibility(const Spectrum& spectrum, double mu, double epsilon,
                                   double phi, double eta);

struct T3Prediction {
  bool feasible = false;
  double t3 = 0.0;      // meaningful only when feasible
  double margin = 0.0;  // max_eta - eta; negative when infeasible
};

/// Convergence time into the epsilon-ball, (1 - mu) factors kept inside the logarithm.
T3Prediction predict_T3(const Spectrum& spectrum, double mu, double eta, double delta_sq,
                        double epsilon, double phi);

/// N_p = ceil(T_p / eta_p), ignoring relative rounding below 1e-12.
std::array<std::uint64_t, 3> predict_iteration_counts(double t1, double t2, double t3,
                                                      double eta_phase1, double eta_phase2,
                                                      double eta_phase3);

/// Per-phase predictions for a config. Phase III uses the post-anneal step size when annealed.
struct PhasePrediction {
  double eta_phase12 = 0.0;
  double eta_phase3 = 0.0;
  double T1 = 0.0, T2 = 0.0;
  std::optional<double> T3;
  std::array<std::uint64_t, 3> N{};  // N3 = 0 when infeasible
  Feasibility feasibility_phase12;
  Feasibility feasibility_phase3;

  /// Cumulative report: t2 = T1 + T2, n2 = N1 + N2, and so on.
  PhaseReport report(const Thresholds& th) const;
};

PhasePrediction predict_phases(const RunConfig& config, const Thresholds& th,
                               const MomentTable& moments);

}  // namespace msgd_lab
