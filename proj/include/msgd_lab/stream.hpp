#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "msgd_lab/core.hpp"
#include "msgd_lab/rng.hpp"

namespace msgd_lab {

/// Haar-distributed orthogonal matrix, row-major.
class Rotation {
 public:
  static Rotation identity(std::size_t dim);
  static Rotation haar(std::size_t dim, std::uint64_t seed);
  static Rotation from_rows(std::size_t dim, std::vector<double> row_major);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t r, std::size_t c) const { return q_[r * dim_ + c]; }

  /// out = Q * in
  void apply(std::span<const double> in, std::span<double> out) const;
  /// out = Q^T * in
  void apply_transpose(std::span<const double> in, std::span<double> out) const;

  Vector apply(const Vector& in) const;
  Vector apply_transpose(const Vector& in) const;

 private:
  Rotation(std::size_t dim, std::vector<double> q) : dim_(dim), q_(std::move(q)) {}
  std::size_t dim_;
  std::vector<double> q_;
};

/**
 * Draws Y in the eigenbasis with E[Y] = 0 and E[YY^T] = diag(lambda).
 *
 * ScaledRademacher sets Y_i = +-sqrt(lambda_i) independently, so ||Y||^2 = trace exactly.
 * TruncatedGaussian rejects Gaussian draws with ||Y|| > radius_multiplier * sqrt(trace).
 * RotatedScaledRademacher draws the Rademacher Y; ambient() applies the rotation.
 */
class Sampler {
 public:
  Sampler(SamplerKind kind, const Spectrum& spectrum);

  void draw(Engine& engine, std::span<double> y);
  Vector draw(Engine& engine);

  const SamplerKind& kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return scale_.size(); }
  /// Rotation into the ambient basis, present only for the rotated sampler.
  const Rotation* rotation() const noexcept { return rotation_ ? &*rotation_ : nullptr; }
  /// Exact bound C_d on ||Y|| for the bounded samplers.
  double norm_bound() const noexcept { return bound_; }

 private:
  SamplerKind kind_;
  std::vector<double> scale_;
  double bound_ = 0.0;
  std::optional<Rotation> rotation_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Vector sample(const SamplerKind& kind, const Spectrum& spectrum, Engine& engine);

/// Applies a Haar rotation generated from rotation_seed to every sample.
std::vector<Vector> rotate_stream(const std::vector<Vector>& samples, std::uint64_t rotation_seed);

struct AnalyticMoments {
  friend bool operator==(const AnalyticMoments&, const AnalyticMoments&) = default;
};
struct EstimatedMoments {
  std::uint64_t n_samples = 0;
  friend bool operator==(const EstimatedMoments&, const EstimatedMoments&) = default;
};

/// alpha_{i,j} = sqrt(E[(Y^(i))^2 (Y^(j))^2]) and phi = sum_{i>=2} alpha_{i,1}^2.
struct MomentTable {
  std::size_t dim = 0;
  std::vector<double> alpha;  // row-major dim x dim
  double phi = 0.0;
  std::variant<AnalyticMoments, EstimatedMoments> source;

  double operator()(std::size_t i, std::size_t j) const { return alpha[i * dim + j]; }
};

MomentTable analytic_moments(const SamplerKind& kind, const Spectrum& spectrum);
MomentTable estimate_moments(const SamplerKind& kind, const Spectrum& spectrum, std::uint64_t n,
                             std::uint64_t seed);

}  // namespace msgd_lab
