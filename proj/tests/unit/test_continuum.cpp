#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "msgd_lab/continuum.hpp"
#include "msgd_lab/stream.hpp"

using namespace msgd_lab;

namespace {

double max_diff(const Vector& a, const Vector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double sample_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("closed form") {
  Spectrum s({4, 3});
  const double r = 1 / std::sqrt(2.0);
  Vector h0{r, r};
  CHECK(ode_closed_form(s, 0.0, h0, 0.0) == h0);

  auto h = ode_closed_form(s, 0.0, h0, std::log(3.0));
  CHECK(h[0] == doctest::Approx(0.948683).epsilon(1e-6));
  CHECK(h[1] == doctest::Approx(0.316228).epsilon(1e-6));

  auto fast = ode_closed_form(s, 0.9, h0, 0.1 * std::log(3.0));
  CHECK(max_diff(fast, h) < 1e-14);

  // huge t does not overflow
  auto far = ode_closed_form(Spectrum({4, 3, 2, 1}), 0.0, {0.5, 0.5, 0.5, 0.5}, 1e6);
  CHECK(far[0] == doctest::Approx(1.0));

  OdeSolution sol(s, 0.0, h0);
  CHECK(max_diff(sol(std::log(3.0)), h) == 0.0);
}

TEST_CASE("saddle start stays put") {
  Spectrum s({4, 3, 2, 1});
  Vector e2{0, 1, 0, 0};
  CHECK(ode_closed_form(s, 0.9, e2, 50.0) == e2);
  auto path = ode_integrate(s, 0.9, e2, 5.0, 1e-2);
  CHECK(max_diff(path.h.back(), e2) < 1e-15);
}

TEST_CASE("rk4 agrees with the closed form at fourth order") {
  Spectrum s({4, 3});
  const double r = 1 / std::sqrt(2.0);
  Vector h0{r, r};
  auto err = [&](double dt) {
    auto p = ode_integrate(s, 0.0, h0, std::log(3.0), dt);
    CHECK(p.t.back() == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    double e = 0.0;
    for (std::size_t n = 0; n < p.t.size(); ++n)
      e = std::max(e, max_diff(p.h[n], ode_closed_form(s, 0.0, h0, p.t[n])));
    return e;
  };
  double e1 = err(1e-3);
  CHECK(e1 < 1e-8);
  double coarse = err(0.04), finer = err(0.02);
  CHECK(coarse / finer == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("flow properties") {
  Spectrum s({5, 2, 1.5, 1});
  Vector h0{0.05, 0.7, 0.5, std::sqrt(1 - 0.0025 - 0.49 - 0.25)};
  double prev = 0.0;
  for (double t = 0.0; t <= 10.0; t += 0.05) {
    auto h = ode_closed_form(s, 0.5, h0, t);
    CHECK(norm(h) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(h[0]) >= prev - 1e-15);
    prev = std::abs(h[0]);
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-9));

  auto f = ode_vector_field(s, 0.5, h0);
  CHECK(dot(f, h0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("OU moments") {
  Spectrum s({4, 3, 2, 1});
  auto m = analytic_moments(ScaledRademacher{}, s);
  auto p9 = near_optimum_params(s, 0.9, m, 1);
  CHECK(p9.drift == doctest::Approx(-10.0));
  CHECK(p9.diffusion == doctest::Approx(std::sqrt(12.0) / 0.1));
  CHECK(ou_moments(p9, 1.0).stationary_variance == doctest::Approx(60.0));
  auto p0 = near_optimum_params(s, 0.0, m, 1);
  CHECK(ou_moments(p0, 1.0).stationary_variance == doctest::Approx(6.0));

  auto at0 = ou_moments(OUParams{-1.0, 2.0, 3.0}, 0.0);
  CHECK(at0.mean == 3.0);
  CHECK(at0.variance == 0.0);

  auto sp = saddle_params(s, 0.9, m, 0, 1);
  CHECK(sp.drift == doctest::Approx(10.0));
  CHECK(std::isinf(ou_moments(sp, 1.0).stationary_variance));
}

TEST_CASE("Euler-Maruyama") {
  auto decay = ou_simulate(OUParams{-1.0, 0.0, 1.0}, 1.0, 1e-4, 0);
  CHECK(decay.t.back() == doctest::Approx(1.0));
  CHECK(decay.value.back() == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));

  Spectrum s({4, 3, 2, 1});
  auto m = analytic_moments(ScaledRademacher{}, s);
  auto p = near_optimum_params(s, 0.9, m, 1);
  const double t_end = 5 * 0.1 / 1.0;
  auto vals = ou_terminal_values(p, t_end, 1e-4, 77, 10000, 2);
  double want = ou_moments(p, t_end).variance;
  CHECK(std::abs(sample_variance(vals) / want - 1) < 0.1);

  auto again = ou_terminal_values(p, t_end, 1e-4, 77, 64, 1);
  auto par = ou_terminal_values(p, t_end, 1e-4, 77, 64, 4);
  CHECK(again == par);

  // unstable: median |U| grows
  auto sp = saddle_params(s, 0.9, m, 0, 1, 0.1);
  auto median_abs = [&](double t) {
    auto v = ou_terminal_values(sp, t, 1e-3, 5, 2000, 2);
    for (auto& x : v) x = std::abs(x);
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  double a = median_abs(0.1), b = median_abs(0.3);
  CHECK(a > 0.1);
  CHECK(b > a);
}
