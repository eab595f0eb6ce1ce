#include <doctest.h>

#include <cmath>
#include <random>

#include "msgd_lab/continuum.hpp"
#include "msgd_lab/optimizer.hpp"
#include "msgd_lab/rng.hpp"

using namespace msgd_lab;

namespace {

RunConfig figure(double mu = 0.9, std::uint64_t horizon = 40000) {
  RunConfig c{Spectrum({4, 3, 2, 1})};
  c.mu = mu;
  c.eta = 5e-4;
  c.init = {0, 1, 0, 0};
  c.horizon = horizon;
  c.seed = 2024;
  return c;
}

}  // namespace

TEST_CASE("e1 is a fixed point of the noiseless step") {
  std::vector<double> lam{4, 3, 2, 1};
  auto st = StepperState::at_start({1, 0, 0, 0});
  for (double eta : {1e-4, 0.1, 0.7}) {
    auto next = msgd_step(st, DiagonalSample{lam}, eta, 0.0);
    CHECK(next.h_curr == st.h_curr);
    CHECK(next.k == 1);
  }
}

TEST_CASE("hand-evaluated steps") {
  std::vector<double> lam{4, 1};
  const double r = 1 / std::sqrt(2.0);
  auto st = StepperState::at_start({r, r});
  auto next = msgd_step(st, DiagonalSample{lam}, 0.1, 0.0);
  CHECK(next.h_curr[0] == doctest::Approx(0.813173).epsilon(1e-6));
  CHECK(next.h_curr[1] == doctest::Approx(0.601041).epsilon(1e-6));
  CHECK(next.h_prev == st.h_curr);

  // momentum adds mu (h - h_prev) on top of the plain step
  StepperState m{{r, r}, {0.70, 0.71}, 5, std::nullopt};
  auto with = msgd_step(m, DiagonalSample{lam}, 0.1, 0.5);
  CHECK(with.h_curr[0] == doctest::Approx(next.h_curr[0] + 0.5 * (r - 0.70)).epsilon(1e-14));
  CHECK(with.h_curr[1] == doctest::Approx(next.h_curr[1] + 0.5 * (r - 0.71)).epsilon(1e-14));
  CHECK(with.k == 6);
}

TEST_CASE("mu = 0 step is bitwise the vanilla step") {
  auto eng = make_engine(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    Vector h(6), y(6);
    for (auto& v : h) v = nd(eng);
    for (auto& v : y) v = nd(eng);
    auto st = StepperState::at_start(h);
    auto a = msgd_step(st, RankOneSample{y}, 0.01, 0.0);
    auto b = sgha_step(h, y, 0.01);
    REQUIRE(a.h_curr == b);
  }
}

TEST_CASE("run_trajectory basics") {
  auto c = figure(0.9, 0);
  auto t = run_trajectory(c, 1);
  REQUIRE(t.iterates.size() == 1);
  CHECK(t.iterates[0].k == 0);
  CHECK(t.iterates[0].h == c.init);

  c.horizon = 1005;
  t = run_trajectory(c, 10);
  CHECK(t.iterates.size() == 102);
  CHECK(t.iterates.back().k == 1005);

  auto again = run_trajectory(c, 10);
  for (std::size_t i = 0; i < t.iterates.size(); ++i) REQUIRE(t.iterates[i].h == again.iterates[i].h);

  auto other = c;
  other.seed = 2025;
  CHECK(run_trajectory(other, 10).iterates.back().h != t.iterates.back().h);

  CHECK(default_record_stride(100000) == 1);
  CHECK(default_record_stride(100001) == 10);
}

TEST_CASE("sign symmetry") {
  auto c = figure(0.5, 3000);
  c.init = {0.1, 0.9, 0.3, std::sqrt(1 - 0.01 - 0.81 - 0.09)};
  auto a = run_trajectory(c, 100);
  for (auto& v : c.init) v = -v;
  auto b = run_trajectory(c, 100);
  for (std::size_t k = 0; k < a.iterates.size(); ++k)
    for (std::size_t i = 0; i < 4; ++i) REQUIRE(a.iterates[k].h[i] == -b.iterates[k].h[i]);
}

TEST_CASE("divergence reports the iteration") {
  auto c = figure(0.9, 1000);
  c.eta = 0.5;
  try {
    run_trajectory(c, 1);
    FAIL("expected NonFiniteIterate");
  } catch (const NonFiniteIterate& e) {
    CHECK(e.iteration() > 0);
    CHECK(e.iteration() <= 1000);
  }
}

TEST_CASE("noiseless run follows the ODE") {
  RunConfig c{Spectrum({4, 3, 2, 1})};
  c.eta = 1e-3;
  c.init = {0.6, 0.8, 0, 0};
  c.horizon = 2000;
  RunOptions opt;
  opt.deterministic_stream = true;
  auto t = run_trajectory(c, 1, opt);
  double err = 0.0;
  for (const auto& p : t.iterates) {
    auto ref = ode_closed_form(c.spectrum, 0.0, c.init, p.k * c.eta);
    for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::abs(p.h[i] - ref[i]));
  }
  CHECK(err < 5e-3);
}

TEST_CASE("annealing lowers the final error") {
  auto plain = figure();
  auto anneal = plain;
  anneal.schedule = AnnealAt{20000, 0.1};
  // single runs are noisy; compare the average over a few seeds
  double e_plain = 0.0, e_anneal = 0.0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    plain.seed = anneal.seed = 100 + s;
    e_plain += top_coordinate_error(run_trajectory(plain, 1000).iterates.back().h);
    e_anneal += top_coordinate_error(run_trajectory(anneal, 1000).iterates.back().h);
  }
  CHECK(e_anneal < e_plain);
}

TEST_CASE("boundedness") {
  auto c = figure(0.9, 10000);
  auto t = run_trajectory(c, 1, RunOptions{true});
  auto rep = check_bound_invariants(t, std::sqrt(10.0));
  CHECK(rep.max_norm_excess <= 100 * c.eta / std::pow(1 - c.mu, 3));
  CHECK_FALSE(rep.violation);
  CHECK(std::isfinite(rep.max_step_ratio));
  CHECK(t.diagnostics.max_sample_norm == doctest::Approx(std::sqrt(10.0)));

  auto half = c;
  half.eta /= 2;
  half.horizon *= 2;
  auto th = run_trajectory(half, 1, RunOptions{true});
  double ratio = th.diagnostics.max_step_norm / t.diagnostics.max_step_norm;
  CHECK(ratio > 0.35);
  CHECK(ratio < 0.65);

  // mu = 0 keeps the iterate close to the sphere as eta shrinks
  auto v = figure(0.0, 4000);
  v.eta = 1e-3;
  auto r1 = check_bound_invariants(run_trajectory(v, 1), std::sqrt(10.0));
  v.eta = 1e-4;
  auto r2 = check_bound_invariants(run_trajectory(v, 1), std::sqrt(10.0));
  CHECK(r2.max_norm_excess < r1.max_norm_excess);
}

TEST_CASE("two-time-scale tracker") {
  CHECK(track_two_time_scale(figure(0.0, 5000)) == 0.0);

  Spectrum s({4, 3, 2, 1});
  Vector h{0.6, 0.8, 0, 0};
  Vector m{1.0, -2.0, 0.5, 0.0};
  auto target = scaled_mean_field(s, 0.9, h);
  double prev = advance_two_time_scale(m, s, 0.9, h);
  for (int k = 0; k < 50; ++k) {
    double e = advance_two_time_scale(m, s, 0.9, h);
    CHECK(e == doctest::Approx(0.9 * prev).epsilon(1e-9));
    prev = e;
  }
  for (std::size_t i = 0; i < 4; ++i) CHECK(m[i] == doctest::Approx(target[i]).epsilon(1e-2));

  auto c = figure(0.9, 10000);
  double e1 = track_two_time_scale(c);
  c.eta /= 2;
  c.horizon *= 2;
  double e2 = track_two_time_scale(c);
  CHECK(e2 < e1);
}
