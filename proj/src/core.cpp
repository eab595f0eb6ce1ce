#include "msgd_lab/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace msgd_lab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SpectrumNotSorted: return "SpectrumNotSorted";
    case ErrorKind::NoEigenGap: return "NoEigenGap";
    case ErrorKind::MuOutOfRange: return "MuOutOfRange";
    case ErrorKind::EtaNonPositive: return "EtaNonPositive";
    case ErrorKind::InitNotUnit: return "InitNotUnit";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoClosedForm: return "NoClosedForm";
    case ErrorKind::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorKind::IncompatibleGrids: return "IncompatibleGrids";
    case ErrorKind::ConfigParse: return "ConfigParse";
    case ErrorKind::UnknownSuite: return "UnknownSuite";
  }
  return "Unknown";
}

NonFiniteIterate::NonFiniteIterate(std::uint64_t iteration)
    : Error(ErrorKind::NonFiniteIterate,
            "non-finite iterate at k=" + std::to_string(iteration) + " (step size too large?)"),
      iteration_(iteration) {}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

Spectrum::Spectrum(std::vector<double> eigenvalues) : values_(std::move(eigenvalues)) {
  if (values_.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "spectrum needs at least two eigenvalues");
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw Error(ErrorKind::InvalidArgument, "eigenvalues must be finite and positive");
    }
  }
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] > values_[i - 1]) {
      std::ostringstream os;
      os << "eigenvalues not in non-increasing order at index " << i;
      throw Error(ErrorKind::SpectrumNotSorted, os.str());
    }
  }
  if (!(values_[0] > values_[1])) {
    throw Error(ErrorKind::NoEigenGap, "lambda_1 must be strictly larger than lambda_2");
  }
}

double Spectrum::trace() const noexcept {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double effective_eta(const Schedule& schedule, double base_eta, std::uint64_t k) {
  if (const auto* anneal = std::get_if<AnnealAt>(&schedule)) {
    return k < anneal->iteration ? base_eta : base_eta * anneal->factor;
  }
  return base_eta;
}

std::vector<std::pair<std::uint64_t, double>> eta_change_points(const Schedule& schedule,
                                                                double base_eta) {
  std::vector<std::pair<std::uint64_t, double>> points{{0, base_eta}};
  if (const auto* anneal = std::get_if<AnnealAt>(&schedule)) {
    points.emplace_back(anneal->iteration, base_eta * anneal->factor);
  }
  return points;
}

double algorithm_time(const Schedule& schedule, double base_eta, std::uint64_t k) {
  if (const auto* anneal = std::get_if<AnnealAt>(&schedule)) {
    if (k > anneal->iteration) {
      return static_cast<double>(anneal->iteration) * base_eta +
             static_cast<double>(k - anneal->iteration) * base_eta * anneal->factor;
    }
  }
  return static_cast<double>(k) * base_eta;
}

RunConfig validate_config(RunConfig config) {
  // Re-run the spectrum checks in case the value was assembled field by field.
  config.spectrum = Spectrum(config.spectrum.values());
  if (!(config.mu >= 0.0 && config.mu < 1.0)) {
    throw Error(ErrorKind::MuOutOfRange, "mu must lie in [0, 1)");
  }
  if (!(config.eta > 0.0) || !std::isfinite(config.eta)) {
    throw Error(ErrorKind::EtaNonPositive, "eta must be positive");
  }
  if (const auto* anneal = std::get_if<AnnealAt>(&config.schedule)) {
    if (anneal->iteration == 0) {
      throw Error(ErrorKind::InvalidArgument, "anneal iteration must be positive");
    }
    if (!(anneal->factor > 0.0 && anneal->factor < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "anneal factor must lie in (0, 1)");
    }
  }
  if (const auto* gauss = std::get_if<TruncatedGaussian>(&config.sampler)) {
    if (!(gauss->radius_multiplier > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "radius_multiplier must be positive");
    }
  }
  if (config.init.size() != config.spectrum.dim()) {
    throw Error(ErrorKind::InitNotUnit, "init dimension does not match the spectrum");
  }
  const double n = norm(config.init);
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "init must be a unit vector (norm " << n << ")";
    throw Error(ErrorKind::InitNotUnit, os.str());
  }
  // Renormalized vectors land within a few ulps of one, so a second pass is a no-op.
  if (std::abs(n - 1.0) > 1e-14) {
    for (double& x : config.init) x /= n;
  }
  return config;
}

double top_coordinate_error(const Vector& h) { return std::abs(std::abs(h[0]) - 1.0); }

double tail_mass(const Vector& h) {
  double s = 0.0;
  for (std::size_t i = 1; i < h.size(); ++i) s += h[i] * h[i];
  return s;
}

}  // namespace msgd_lab
