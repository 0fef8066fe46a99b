#include <cmath>

#include "doctest.h"

#include "kpzlab/experiments.hpp"
#include "kpzlab/she.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

TEST_CASE("coefficients of the exclusion process") {
  const auto co = SheCoefficients::from_model(wasep_rates(), 1.0, 0.5);
  CHECK(co.D == doctest::Approx(1.0));
  CHECK(co.lambda == doctest::Approx(-1.0));
  CHECK(co.kappa == doctest::Approx(2.0));
  CHECK(co.chi == doctest::Approx(0.25));
  const auto z = SheCoefficients::from_model(wasep_rates(), 0.0, 0.5);
  CHECK(z.lambda == 0.0);
  CHECK(z.kappa == 0.0);
}

TEST_CASE("heat kernel: normalization and semigroup") {
  const double D = 1.3, dx = 1e-3;
  double mass = 0, per = 0;
  for (int i = -20000; i <= 20000; ++i) mass += heat_kernel(0.2, i * dx, D) * dx;
  for (int i = 0; i < 1000; ++i) per += heat_kernel(0.7, i * dx, D, 1.0) * dx;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(per == doctest::Approx(1.0).epsilon(1e-9));
  for (double x : {0.0, 0.3, -0.8}) {
    double conv = 0;
    for (int i = -20000; i <= 20000; ++i) conv += heat_kernel(0.1, x - i * dx, D) * heat_kernel(0.15, i * dx, D) * dx;
    CHECK(conv == doctest::Approx(heat_kernel(0.25, x, D)).epsilon(1e-8));
  }
  CHECK_THROWS(heat_kernel(0.0, 0.0, 1.0));
}

TEST_CASE("spectral heat step maps one periodic kernel onto the next") {
  const int M = 512;
  const double dx = 1.0 / 256, D = 1.0;
  SheCoefficients co;
  co.D = D;
  SheSolver s(M, dx, co);
  std::vector<double> Z(M);
  for (int i = 0; i < M; ++i) Z[i] = heat_kernel(0.01, i * dx, D, M * dx);
  s.heat(Z, 0.03);
  double err = 0;
  for (int i = 0; i < M; ++i) err = std::max(err, std::abs(Z[i] - heat_kernel(0.04, i * dx, D, M * dx)));
  CHECK(err < 1e-9);
  CHECK(heat_mode_check(M, dx, D, 1e-4, 200).max_error < 1e-10);
  CHECK_THROWS(SheSolver(7, dx, co));
}

TEST_CASE("stationary initial data and the Cole-Hopf inverse") {
  const auto co = SheCoefficients::from_model(wasep_rates(), 1.0, 0.5);
  const int M = 256;
  const double dx = 1.0 / 64;
  for (auto mode : {SheInit::PeriodicBridge, SheInit::TwoSidedWalk}) {
    Philox a(3, 1), b(3, 1);
    const auto h = stationary_height(M, dx, co.chi, a, mode);
    const auto f = init_stationary(M, dx, co, b, mode);
    const auto ch = cole_hopf(f, co);
    for (int i = 0; i < M; ++i) CHECK(ch.h[i] == doctest::Approx(h[i]).epsilon(1e-12).scale(1e-12));
    if (mode == SheInit::TwoSidedWalk) CHECK(h[M / 2] == 0.0);
  }
  // Increments have variance chi dx; the bridge correction is O(1/M).
  Philox g(8, 8);
  std::vector<double> inc;
  for (int r = 0; r < 40; ++r) {
    const auto h = stationary_height(M, dx, co.chi, g, SheInit::TwoSidedWalk);
    for (int i = 1; i < M; ++i) inc.push_back(h[i] - h[i - 1]);
  }
  CHECK(stats::variance(inc) == doctest::Approx(co.chi * dx).epsilon(0.03));
  SheField bad{std::vector<double>(8, 1.0), 0.0, 0.1};
  bad.Z[3] = 0.0;
  CHECK_THROWS(cole_hopf(bad, co));
  CHECK_THROWS(cole_hopf(SheField{std::vector<double>(8, 1.0), 0.0, 0.1}, SheCoefficients{}));
}

TEST_CASE("mild step without noise is the heat step; hopeless steps throw") {
  SheCoefficients co;
  co.D = 1.0;
  const int M = 64;
  const double dx = 1.0 / 64;
  SheSolver s(M, dx, co);
  Philox g(1, 1);
  SheField f = init_stationary(M, dx, SheCoefficients::from_model(wasep_rates(), 1.0, 0.5), g, SheInit::PeriodicBridge);
  auto Z = f.Z;
  s.heat(Z, dx * 0.1);
  CHECK(s.step_mild(f, dx * 0.1, g) == 0);
  for (int i = 0; i < M; ++i) CHECK(f.Z[i] == doctest::Approx(Z[i]).epsilon(1e-14));
  co.lambda = 50.0;
  SheSolver wild(M, dx, co);
  CHECK_THROWS(wild.step_mild(f, dx, g));
  CHECK_THROWS(s.step_mild(f, 2 * dx, g));
}

TEST_CASE("Ito mean of the mild scheme is the heat flow of the initial data") {
  const auto co = SheCoefficients::from_model(wasep_rates(), 1.0, 0.5);
  const auto r = ito_mean_check(co, 256, 1.0 / 64, 0.04 / 64, 0.05, 200, 17);
  CHECK(std::abs(r.z) < 4.0);
}
