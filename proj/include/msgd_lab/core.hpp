#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace msgd_lab {

enum class ErrorKind {
  SpectrumNotSorted,
  NoEigenGap,
  MuOutOfRange,
  EtaNonPositive,
  InitNotUnit,
  InvalidArgument,
  NoClosedForm,
  NonFiniteIterate,
  IncompatibleGrids,
  ConfigParse,
  UnknownSuite,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Divergence of the recursion, reported with the iteration that produced it.
class NonFiniteIterate : public Error {
 public:
  explicit NonFiniteIterate(std::uint64_t iteration);
  std::uint64_t iteration() const noexcept { return iteration_; }

 private:
  std::uint64_t iteration_;
};

using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);

/**
 * Ordered covariance eigenvalues lambda_1 > lambda_2 >= ... >= lambda_d > 0.
 * Construction validates the ordering and the strict top gap.
 */
class Spectrum {
 public:
  explicit Spectrum(std::vector<double> eigenvalues);

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  double eigen_gap() const noexcept { return values_[0] - values_[1]; }
  double trace() const noexcept;

  friend bool operator==(const Spectrum&, const Spectrum&) = default;

 private:
  std::vector<double> values_;
};

struct ConstantSchedule {
  friend bool operator==(const ConstantSchedule&, const ConstantSchedule&) = default;
};

/// Multiply the step size by `factor` once, from iteration `iteration` on.
struct AnnealAt {
  std::uint64_t iteration = 1;
  double factor = 0.1;
  friend bool operator==(const AnnealAt&, const AnnealAt&) = default;
};

using Schedule = std::variant<ConstantSchedule, AnnealAt>;

double effective_eta(const Schedule& schedule, double base_eta, std::uint64_t k);

/// (k, eta) pairs at which the effective step size changes, starting at k = 0.
std::vector<std::pair<std::uint64_t, double>> eta_change_points(const Schedule& schedule,
                                                                double base_eta);

/// Sum of effective step sizes over iterations [0, k): the algorithm time reached at k.
double algorithm_time(const Schedule& schedule, double base_eta, std::uint64_t k);

struct ScaledRademacher {
  friend bool operator==(const ScaledRademacher&, const ScaledRademacher&) = default;
};

struct TruncatedGaussian {
  double radius_multiplier = 4.0;
  friend bool operator==(const TruncatedGaussian&, const TruncatedGaussian&) = default;
};

struct RotatedScaledRademacher {
  std::uint64_t rotation_seed = 0;
  friend bool operator==(const RotatedScaledRademacher&, const RotatedScaledRademacher&) = default;
};

using SamplerKind = std::variant<ScaledRademacher, TruncatedGaussian, RotatedScaledRademacher>;

struct RunConfig {
  Spectrum spectrum;
  double mu = 0.0;
  double eta = 1e-3;
  Schedule schedule = ConstantSchedule{};
  Vector init;  // eigenbasis coordinates
  std::uint64_t horizon = 0;
  std::uint64_t seed = 0;
  SamplerKind sampler = ScaledRademacher{};

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Checks every RunConfig invariant; renormalizes init when its norm is within 1e-9 of one.
RunConfig validate_config(RunConfig config);

struct StepDiagnosticsSummary {
  double max_step_norm = 0.0;
  double max_norm_sq = 0.0;
  std::optional<double> max_m_error;
  double max_sample_norm = 0.0;
};

struct TrajectoryPoint {
  std::uint64_t k = 0;
  Vector h;
};

struct Trajectory {
  RunConfig config;
  std::uint64_t samples_stride = 1;
  std::vector<TrajectoryPoint> iterates;
  std::vector<std::pair<std::uint64_t, double>> effective_eta;
  StepDiagnosticsSummary diagnostics;
};

/// Coefficients of dU = drift * U dt + diffusion * dB, in algorithm time.
struct OUParams {
  double drift = 0.0;
  double diffusion = 0.0;
  double u0 = 0.0;
};

enum class PhaseSource { Detected, Predicted };

/// Phase boundaries; times and counts are cumulative from k = 0.
struct PhaseReport {
  std::optional<double> t1, t2, t3;
  std::optional<std::uint64_t> n1, n2, n3;
  double delta = 0.0;
  double epsilon = 0.0;
  PhaseSource source = PhaseSource::Detected;
};

/// ||h^(1)| - 1|, the error axis of the figure panels.
double top_coordinate_error(const Vector& h);
/// Sum over i >= 2 of (h^(i))^2.
double tail_mass(const Vector& h);

}  // namespace msgd_lab
