#include <cmath>
#include <vector>

#include "doctest.h"
#include "photonids/calibrate.hpp"
#include "photonids/rng.hpp"

using namespace photonids;
using namespace photonids::calibrate;

namespace {

ChannelCalibrator make_channel(std::vector<double> t, std::vector<double> u) {
  ChannelCalibrator c;
  c.knot_t = std::move(t);
  c.knot_u = std::move(u);
  c.slope = fritsch_carlson_slopes(c.knot_t, c.knot_u);
  c.validate();
  return c;
}

// Random monotone knot set.
ChannelCalibrator random_monotone(Rng& rng) {
  auto m = 2 + static_cast<std::size_t>(rng.uniform() * 9);
  std::vector<double> t(m), u(m);
  double tv = rng.uniform(-100.0, 100.0);
  double uv = rng.uniform(-100.0, 100.0);
  for (std::size_t i = 0; i < m; ++i) {
    tv += rng.uniform(1e-3, 10.0);
    // Mix of strict increases and exact plateaus.
    uv += (rng.uniform() < 0.3) ? 0.0 : rng.uniform(0.0, 10.0);
    t[i] = tv;
    u[i] = uv;
  }
  return make_channel(t, u);
}

}  // namespace

TEST_CASE("flat knots give zero slopes") {
  auto c = make_channel({0, 1, 2, 3}, {5, 5, 5, 5});
  for (double s : c.slope) CHECK(s == 0.0);
  CHECK(c.eval(1.5) == 5.0);
  CHECK(c.eval(-10.0) == 5.0);  // flat extrapolation from zero boundary slope
}

TEST_CASE("collinear knots give the common secant slope everywhere") {
  auto c = make_channel({0, 1, 3, 7}, {1, 3, 7, 15});  // slope 2
  for (double s : c.slope) CHECK(s == doctest::Approx(2.0).epsilon(1e-12));
  for (double t : {-2.0, 0.5, 2.0, 5.0, 9.0})
    CHECK(c.eval(t) == doctest::Approx(1.0 + 2.0 * t).epsilon(1e-12));
}

TEST_CASE("non-monotone knot values are rejected") {
  CHECK_THROWS_AS(fritsch_carlson_slopes(std::vector<double>{0, 1, 2},
                                         std::vector<double>{0, 2, 1}),
                  Error);
}

TEST_CASE("knots are interpolated exactly") {
  Rng rng(43);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = random_monotone(rng);
    for (std::size_t i = 0; i < c.knot_t.size(); ++i)
      CHECK(c.eval(c.knot_t[i]) == doctest::Approx(c.knot_u[i]).epsilon(1e-12));
  }
}

TEST_CASE("random monotone knot sets give monotone interpolants") {
  Rng rng(47);
  for (int rep = 0; rep < 2000; ++rep) {
    auto c = random_monotone(rng);
    double span_lo = c.knot_t.front() - 1.0;
    double span_hi = c.knot_t.back() + 1.0;
    int steps = 500;
    double prev = c.eval(span_lo);
    for (int i = 1; i <= steps; ++i) {
      double t = span_lo + (span_hi - span_lo) * i / steps;
      double v = c.eval(t);
      CHECK(v >= prev - 1e-9 * (1.0 + std::fabs(prev)));
      prev = v;
    }
  }
}

TEST_CASE("extrapolation is linear with the boundary slopes") {
  auto c = make_channel({0, 1, 2, 4}, {0, 1, 4, 5});
  double s0 = c.slope.front(), s1 = c.slope.back();
  CHECK(c.eval(-3.0) == doctest::Approx(0.0 - 3.0 * s0).epsilon(1e-12));
  CHECK(c.eval(10.0) == doctest::Approx(5.0 + 6.0 * s1).epsilon(1e-12));
}

TEST_CASE("fit_channel reproduces an exact affine relation") {
  Rng rng(53);
  std::size_t n = 4000;
  std::vector<double> raw(n), target(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = rng.uniform(-50.0, 50.0);
    target[i] = 2.5 * raw[i] - 7.0;
  }
  auto c = fit_channel(raw, target, 50);
  for (int i = 0; i <= 200; ++i) {
    double t = c.knot_t.front() +
               (c.knot_t.back() - c.knot_t.front()) * i / 200.0;
    CHECK(std::fabs(c.eval(t) - (2.5 * t - 7.0)) <= 1e-9);
  }
}

TEST_CASE("fit_channel on identity pairs is the identity") {
  Rng rng(59);
  std::size_t n = 2000;
  std::vector<double> raw(n);
  for (auto& v : raw) v = rng.gaussian() * 30.0;
  auto c = fit_channel(raw, raw, 50);
  double lo = c.knot_t.front(), hi = c.knot_t.back();
  for (int i = 0; i <= 500; ++i) {
    double t = lo + (hi - lo) * i / 500.0;
    CHECK(std::fabs(c.eval(t) - t) <= 1e-6);
  }
}

TEST_CASE("fit_channel removes an injected affine bias almost entirely") {
  Rng rng(61);
  std::size_t n = 20000;
  std::vector<double> target(n), raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = rng.uniform(-1000.0, 1000.0);
    raw[i] = 0.8 * target[i] + 500.0 + rng.gaussian() * 2.0;
  }
  auto c = fit_channel(raw, target, 50);
  double pre_mae = 0.0, post_mae = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pre_mae += std::fabs(raw[i] - target[i]);
    post_mae += std::fabs(c.eval(raw[i]) - target[i]);
  }
  pre_mae /= static_cast<double>(n);
  post_mae /= static_cast<double>(n);
  CHECK(post_mae <= 0.01 * pre_mae);
}

TEST_CASE("fit_channel input validation") {
  std::vector<double> tiny = {1.0, 2.0};
  CHECK_THROWS_AS(fit_channel(tiny, tiny, 50), Error);
  std::vector<double> a(100, 1.0), b(99, 1.0);
  CHECK_THROWS_AS(fit_channel(a, b, 10), Error);
}

TEST_CASE("fit_channel copes with noisy non-monotone scatters") {
  // PAV must repair local violations introduced by noise.
  Rng rng(67);
  std::size_t n = 5000;
  std::vector<double> raw(n), target(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = rng.uniform(0.0, 10.0);
    target[i] = std::sqrt(raw[i]) + rng.gaussian() * 0.5;  // heavy noise
  }
  auto c = fit_channel(raw, target, 50);
  // Monotone by construction, no exception thrown.
  double prev = c.eval(-1.0);
  for (int i = 0; i <= 1000; ++i) {
    double t = -1.0 + 12.0 * i / 1000.0;
    double v = c.eval(t);
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
}

TEST_CASE("apply_calibration is channelwise and rank preserving") {
  Rng rng(71);
  CalibratorModel model;
  for (int k = 0; k < 4; ++k) model.channel[static_cast<std::size_t>(k)] = random_monotone(rng);
  for (int rep = 0; rep < 200; ++rep) {
    PseudoPosition a{rng.uniform(-50, 50), rng.uniform(-50, 50),
                     rng.uniform(-50, 50), rng.uniform(-50, 50)};
    PseudoPosition b = a;
    int k = static_cast<int>(rng.uniform() * 4);
    b[static_cast<std::size_t>(k)] += rng.uniform(0.0, 20.0);
    auto ca = apply_calibration(model, a);
    auto cb = apply_calibration(model, b);
    CHECK(cb[static_cast<std::size_t>(k)] >=
          ca[static_cast<std::size_t>(k)] - 1e-12);
    for (int j = 0; j < 4; ++j)
      if (j != k)
        CHECK(cb[static_cast<std::size_t>(j)] ==
              ca[static_cast<std::size_t>(j)]);
  }
}
