#include "msgd_lab/stream.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace msgd_lab {

Rotation Rotation::identity(std::size_t dim) {
  std::vector<double> q(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) q[i * dim + i] = 1.0;
  return Rotation(dim, std::move(q));
}

Rotation Rotation::haar(std::size_t dim, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) g(r, c) = normal(engine);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fixing the signs of diag(R) makes Q Haar-distributed (Mezzadri 2007).
  for (Eigen::Index c = 0; c < n; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  std::vector<double> rows(dim * dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) rows[static_cast<std::size_t>(i * n + j)] = q(i, j);
  return Rotation(dim, std::move(rows));
}

Rotation Rotation::from_rows(std::size_t dim, std::vector<double> row_major) {
  if (row_major.size() != dim * dim) {
    throw Error(ErrorKind::InvalidArgument, "rotation needs dim*dim entries");
  }
  return Rotation(dim, std::move(row_major));
}

void Rotation::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) s += q_[r * dim_ + c] * in[c];
    out[r] = s;
  }
}

void Rotation::apply_transpose(std::span<const double> in, std::span<double> out) const {
  for (std::size_t c = 0; c < dim_; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < dim_; ++r) s += q_[r * dim_ + c] * in[r];
    out[c] = s;
  }
}

Vector Rotation::apply(const Vector& in) const {
  Vector out(dim_);
  apply(std::span<const double>(in), std::span<double>(out));
  return out;
}

Vector Rotation::apply_transpose(const Vector& in) const {
  Vector out(dim_);
  apply_transpose(std::span<const double>(in), std::span<double>(out));
  return out;
}

Sampler::Sampler(SamplerKind kind, const Spectrum& spectrum) : kind_(std::move(kind)) {
  scale_.reserve(spectrum.dim());
  for (double l : spectrum.values()) scale_.push_back(std::sqrt(l));
  bound_ = std::sqrt(spectrum.trace());
  if (const auto* gauss = std::get_if<TruncatedGaussian>(&kind_)) {
    bound_ *= gauss->radius_multiplier;
  }
  if (const auto* rot = std::get_if<RotatedScaledRademacher>(&kind_)) {
    rotation_ = Rotation::haar(spectrum.dim(), rot->rotation_seed);
  }
}

void Sampler::draw(Engine& engine, std::span<double> y) {
  const std::size_t d = scale_.size();
  if (std::holds_alternative<TruncatedGaussian>(kind_)) {
    const double bound_sq = bound_ * bound_;
    for (;;) {
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        y[i] = scale_[i] * normal_(engine);
        sq += y[i] * y[i];
      }
      if (sq <= bound_sq) return;
    }
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (i % 64 == 0) bits = engine();
    y[i] = (bits & 1u) ? scale_[i] : -scale_[i];
    bits >>= 1;
  }
}

Vector Sampler::draw(Engine& engine) {
  Vector y(scale_.size());
  draw(engine, std::span<double>(y));
  return y;
}

Vector sample(const SamplerKind& kind, const Spectrum& spectrum, Engine& engine) {
  Sampler sampler(kind, spectrum);
  return sampler.draw(engine);
}

std::vector<Vector> rotate_stream(const std::vector<Vector>& samples, std::uint64_t rotation_seed) {
  std::vector<Vector> out;
  if (samples.empty()) return out;
  const Rotation q = Rotation::haar(samples.front().size(), rotation_seed);
  out.reserve(samples.size());
  for (const auto& y : samples) out.push_back(q.apply(y));
  return out;
}

namespace {

void fill_phi(MomentTable& table) {
  table.phi = 0.0;
  for (std::size_t i = 1; i < table.dim; ++i) {
    const double a = table(i, 0);
    table.phi += a * a;
  }
}

}  // namespace

MomentTable analytic_moments(const SamplerKind& kind, const Spectrum& spectrum) {
  if (std::holds_alternative<TruncatedGaussian>(kind)) {
    throw Error(ErrorKind::NoClosedForm,
                "no closed-form fourth moments for the truncated Gaussian sampler");
  }
  // Rademacher coordinates satisfy (Y^(i))^2 = lambda_i almost surely.
  MomentTable table;
  table.dim = spectrum.dim();
  table.alpha.resize(table.dim * table.dim);
  for (std::size_t i = 0; i < table.dim; ++i) {
    for (std::size_t j = 0; j < table.dim; ++j) {
      table.alpha[i * table.dim + j] =
          i == j ? spectrum[i] : std::sqrt(spectrum[i] * spectrum[j]);
    }
  }
  table.source = AnalyticMoments{};
  fill_phi(table);
  return table;
}

MomentTable estimate_moments(const SamplerKind& kind, const Spectrum& spectrum, std::uint64_t n,
                             std::uint64_t seed) {
  if (n < 1000) {
    throw Error(ErrorKind::InvalidArgument, "estimate_moments needs at least 1000 samples");
  }
  const std::size_t d = spectrum.dim();
  Sampler sampler(kind, spectrum);
  Engine engine = make_engine(seed);
  std::vector<double> sums(d * d, 0.0);
  Vector y(d);
  Vector sq(d);
  for (std::uint64_t s = 0; s < n; ++s) {
    sampler.draw(engine, std::span<double>(y));
    for (std::size_t i = 0; i < d; ++i) sq[i] = y[i] * y[i];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) sums[i * d + j] += sq[i] * sq[j];
  }
  MomentTable table;
  table.dim = d;
  table.alpha.resize(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double a = std::sqrt(sums[i * d + j] / static_cast<double>(n));
      table.alpha[i * d + j] = a;
      table.alpha[j * d + i] = a;
    }
  }
  table.source = EstimatedMoments{n};
  fill_phi(table);
  return table;
}

}  // namespace msgd_lab
