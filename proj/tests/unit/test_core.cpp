#include <doctest.h>

#include <cmath>

#include "msgd_lab/core.hpp"

using namespace msgd_lab;

namespace {

RunConfig figure_like() {
  RunConfig c{Spectrum({4, 3, 2, 1})};
  c.mu = 0.9;
  c.eta = 5e-4;
  c.init = {0, 1, 0, 0};
  c.horizon = 100;
  return c;
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("spectrum validation") {
  CHECK_NOTHROW(Spectrum({4, 3, 2, 1}));
  CHECK(kind_of([] { Spectrum({4, 4, 2}); }) == ErrorKind::NoEigenGap);
  CHECK(kind_of([] { Spectrum({3, 4, 2}); }) == ErrorKind::SpectrumNotSorted);
  CHECK(kind_of([] { Spectrum({2, 1, 0}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Spectrum({2}); }) == ErrorKind::InvalidArgument);

  Spectrum s({4, 3, 2, 1});
  CHECK(s.eigen_gap() == 1.0);
  CHECK(s.trace() == 10.0);
}

TEST_CASE("validate_config") {
  CHECK_NOTHROW(validate_config(figure_like()));

  auto c = figure_like();
  c.init = {0.6, 0.8, 0, 0};
  auto v = validate_config(c);
  CHECK(std::abs(norm(v.init) - 1.0) < 1e-15);

  c = figure_like();
  c.mu = 1.0;
  CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::MuOutOfRange);
  c.mu = -0.1;
  CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::MuOutOfRange);

  c = figure_like();
  c.eta = 0.0;
  CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::EtaNonPositive);

  c = figure_like();
  c.init = {0, 1.1, 0, 0};
  CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::InitNotUnit);
  c.init = {0, 1};
  CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::InitNotUnit);

  c = figure_like();
  c.schedule = AnnealAt{10, 0.0};
  CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("validate_config is idempotent") {
  auto c = figure_like();
  c.init = {0.5, 0.5, 0.5, 0.5 + 1e-11};
  auto once = validate_config(c);
  auto twice = validate_config(once);
  CHECK(once == twice);
}

TEST_CASE("effective_eta") {
  CHECK(effective_eta(ConstantSchedule{}, 5e-4, 1000000) == 5e-4);
  Schedule a = AnnealAt{20000, 0.1};
  CHECK(effective_eta(a, 5e-4, 20000) == doctest::Approx(5e-5).epsilon(1e-14));
  CHECK(effective_eta(a, 5e-4, 19999) == 5e-4);

  auto pts = eta_change_points(a, 5e-4);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].first == 0);
  CHECK(pts[1].first == 20000);

  CHECK(algorithm_time(ConstantSchedule{}, 1e-3, 500) == doctest::Approx(0.5));
  CHECK(algorithm_time(a, 5e-4, 30000) == doctest::Approx(20000 * 5e-4 + 10000 * 5e-5));
}

TEST_CASE("helpers") {
  CHECK(top_coordinate_error({-1, 0, 0}) == 0.0);
  CHECK(top_coordinate_error({0.6, 0.8}) == doctest::Approx(0.4));
  CHECK(tail_mass({0.6, 0.8}) == doctest::Approx(0.64));
  CHECK(dot({1, 2}, {3, 4}) == 11.0);

  NonFiniteIterate e(42);
  CHECK(e.iteration() == 42);
  CHECK(e.kind() == ErrorKind::NonFiniteIterate);
}
