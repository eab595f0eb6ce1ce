#include <doctest.h>

#include <cmath>
#include <numbers>

#include "msgd_lab/optimizer.hpp"
#include "msgd_lab/stream.hpp"

using namespace msgd_lab;

TEST_CASE("rademacher samples have the exact trace norm") {
  Spectrum s({4, 3, 2, 1});
  Sampler sampler(ScaledRademacher{}, s);
  auto eng = make_engine(7);
  double mx = 0.0, worst = 0.0;
  for (int n = 0; n < 1000000; ++n) {
    auto y = sampler.draw(eng);
    double sq = dot(y, y);
    // coordinates are exactly +-sqrt(lambda_i); only the sum rounds
    worst = std::max(worst, std::abs(sq - 10.0));
    mx = std::max(mx, std::sqrt(sq));
  }
  CHECK(worst < 1e-14);
  CHECK(sampler.norm_bound() == doctest::Approx(std::sqrt(10.0)).epsilon(1e-15));
  CHECK(mx <= sampler.norm_bound() * (1 + 1e-15));
}

TEST_CASE("rademacher covariance and mean") {
  Spectrum s({4, 3, 2, 1});
  Sampler sampler(ScaledRademacher{}, s);
  auto eng = make_engine(11);
  const int n = 100000;
  double cov[4][4] = {};
  double mean[4] = {};
  for (int k = 0; k < n; ++k) {
    auto y = sampler.draw(eng);
    for (int i = 0; i < 4; ++i) {
      mean[i] += y[i];
      for (int j = 0; j < 4; ++j) cov[i][j] += y[i] * y[j];
    }
  }
  for (int i = 0; i < 4; ++i) {
    double se = std::sqrt(s[i] / n);
    CHECK(std::abs(mean[i] / n) < 4 * se);
    for (int j = 0; j < 4; ++j) {
      double want = i == j ? s[i] : 0.0;
      CHECK(std::abs(cov[i][j] / n - want) < 0.1);
    }
  }
}

TEST_CASE("truncated gaussian stays within its radius") {
  Spectrum s({1.0, 0.999});
  Sampler sampler(TruncatedGaussian{4.0}, s);
  auto eng = make_engine(3);
  double r = 4.0 * std::sqrt(s.trace());
  for (int k = 0; k < 20000; ++k) {
    auto y = sampler.draw(eng);
    REQUIRE(norm(y) <= r);
  }
  CHECK(sampler.norm_bound() == doctest::Approx(r));
}

TEST_CASE("same seed, same stream") {
  Spectrum s({4, 3, 2, 1});
  for (SamplerKind kind : {SamplerKind{ScaledRademacher{}}, SamplerKind{TruncatedGaussian{}},
                           SamplerKind{RotatedScaledRademacher{5}}}) {
    Sampler a(kind, s), b(kind, s);
    auto ea = make_engine(99), eb = make_engine(99);
    for (int k = 0; k < 500; ++k) REQUIRE(a.draw(ea) == b.draw(eb));
  }
}

TEST_CASE("analytic moments") {
  auto m = analytic_moments(ScaledRademacher{}, Spectrum({4, 3, 2, 1}));
  CHECK(m(1, 0) == doctest::Approx(std::sqrt(12.0)));
  CHECK(m(0, 1) == doctest::Approx(std::sqrt(12.0)));
  CHECK(m(2, 2) == doctest::Approx(2.0));
  CHECK(m.phi == doctest::Approx(24.0));

  auto u = analytic_moments(ScaledRademacher{}, Spectrum({1, 1 - 1e-9}));
  CHECK(u(1, 0) == doctest::Approx(1.0));

  try {
    analytic_moments(TruncatedGaussian{}, Spectrum({2, 1}));
    FAIL("expected NoClosedForm");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoClosedForm);
  }
}

TEST_CASE("estimated moments") {
  Spectrum s({4, 3, 2, 1});
  auto a = analytic_moments(ScaledRademacher{}, s);
  auto e = estimate_moments(ScaledRademacher{}, s, 100000, 1);
  CHECK(std::abs(e(1, 0) / std::sqrt(12.0) - 1) < 0.02);
  for (std::size_t i = 0; i < 16; ++i) CHECK(e.alpha[i] == doctest::Approx(a.alpha[i]).epsilon(1e-12));
  CHECK(std::holds_alternative<EstimatedMoments>(e.source));

  auto tiny = estimate_moments(ScaledRademacher{}, Spectrum({1, 1e-12}), 1000, 2);
  CHECK(std::isfinite(tiny(1, 0)));
  CHECK(tiny(1, 0) == doctest::Approx(1e-6).epsilon(1e-6));

  auto g1 = estimate_moments(TruncatedGaussian{}, s, 100000, 1);
  auto g2 = estimate_moments(TruncatedGaussian{}, s, 100000, 2);
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(g1.alpha[i] / g2.alpha[i] - 1) < 0.05);

  CHECK_THROWS_AS(estimate_moments(ScaledRademacher{}, s, 999, 1), Error);
}

TEST_CASE("rotations") {
  auto id = Rotation::identity(3);
  Vector y{1, -2, 3};
  CHECK(id.apply(y) == y);
  CHECK(rotate_stream({y}, 0).size() == 1);

  // pi/2 in the plane: (y1, y2) -> (-y2, y1)
  double c = std::cos(std::numbers::pi / 2), s = std::sin(std::numbers::pi / 2);
  auto q = Rotation::from_rows(2, {c, -s, s, c});
  auto x = q.apply(Vector{0.3, 0.7});
  CHECK(x[0] == doctest::Approx(-0.7));
  CHECK(x[1] == doctest::Approx(0.3));

  auto h = Rotation::haar(5, 17);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double g = 0.0;
      for (std::size_t r = 0; r < 5; ++r) g += h(r, i) * h(r, j);
      CHECK(g == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
  Vector v{1, 2, 3, 4, 5};
  auto back = h.apply_transpose(h.apply(v));
  for (std::size_t i = 0; i < 5; ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-13));
}

TEST_CASE("rotated stream reproduces the eigenbasis run") {
  RunConfig c{Spectrum({4, 3, 2, 1})};
  c.mu = 0.9;
  c.eta = 5e-3;
  c.init = {0.5, 0.5, 0.5, 0.5};
  c.horizon = 100;
  c.seed = 8;
  auto plain = run_trajectory(c, 1);
  c.sampler = RotatedScaledRademacher{1234};
  auto rotated = run_trajectory(c, 1);
  REQUIRE(plain.iterates.size() == rotated.iterates.size());
  double err = 0.0;
  for (std::size_t k = 0; k < plain.iterates.size(); ++k)
    for (std::size_t i = 0; i < 4; ++i)
      err = std::max(err, std::abs(plain.iterates[k].h[i] - rotated.iterates[k].h[i]));
  CHECK(err < 1e-10);
}
