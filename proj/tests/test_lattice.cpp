#include <cmath>

#include "doctest.h"

#include "kpzlab/lattice.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

namespace {

// E f under Bernoulli(rho) by summing over every pattern of the window.
double bernoulli_mean(const WindowFunction& f, double rho) {
  double s = 0.0;
  const int w = f.width();
  for (std::uint32_t p = 0; p < (1u << w); ++p) {
    const int ones = __builtin_popcount(p);
    s += f.value(p) * std::pow(rho, ones) * std::pow(1 - rho, w - ones);
  }
  return s;
}

WindowFunction random_function(int lo, int hi, Philox& g) {
  std::vector<double> t(1u << (hi - lo + 1));
  for (auto& v : t) v = std::floor(g.uniform() * 9.0) - 4.0;
  return WindowFunction(lo, hi, t);
}

}  // namespace

TEST_CASE("configuration indexing wraps in both directions") {
  auto eta = Configuration::from_string("1001");
  CHECK(eta[-1] == 1);
  CHECK(eta[4] == 1);
  CHECK(eta[-3] == 0);
  CHECK(swap_bond(eta, 3).to_string() == "1001");
  CHECK(swap_bond(eta, 0).to_string() == "0101");
  CHECK(swap_bond(swap_bond(eta, 2), 2) == eta);
  CHECK_THROWS_AS(Configuration::from_string("102"), std::invalid_argument);
  CHECK_THROWS_AS(Configuration(0), std::invalid_argument);
}

TEST_CASE("window function evaluation and translation") {
  auto f = WindowFunction::tabulate(-1, 1, [](const PatternView& e) { return e(-1) + 2.0 * e(0) + 4.0 * e(1); });
  auto eta = Configuration::from_string("011000");
  CHECK(f.eval(eta, 0) == 4.0);
  CHECK(f.eval(eta, 1) == 6.0);
  CHECK(f.eval(eta, 0) == f.translated(3).eval(eta, -3));
  const auto longer = Configuration::from_string("0110001011");
  for (int x = 0; x < 10; ++x) CHECK(f.extended(-3, 2).eval(longer, x) == f.eval(longer, x));
  auto g = WindowFunction::tabulate(-2, 2, [](const PatternView& e) { return 3.0 * e(0); });
  CHECK(g.trimmed() == WindowFunction::occupation(0) * 3.0);
  CHECK(WindowFunction::from_json(f.to_json()) == f);
}

TEST_CASE("monomial decomposition reconstructs random tables") {
  Philox g(5, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_function(-1, 2, g);
    const auto dec = monomial_decompose(f);
    for (std::uint32_t p = 0; p < 16; ++p) CHECK(dec.evaluate(-1, p) == doctest::Approx(f.value(p)).epsilon(1e-12));
    for (double rho : {0.1, 0.5, 0.77}) {
      CHECK(grand_canonical_polynomial(f)(rho) == doctest::Approx(bernoulli_mean(f, rho)).epsilon(1e-12));
      CHECK(grand_canonical_mean(f, rho) == doctest::Approx(bernoulli_mean(f, rho)).epsilon(1e-12));
    }
  }
}

TEST_CASE("preset rate models carry exact gradient witnesses") {
  const auto w = wasep_rates();
  REQUIRE(w.is_gradient());
  CHECK(gradient_defect(w.c(), *w.gradient_witness()) == 0.0);
  for (double b : {0.0, 0.5, 1.0, 2.0}) {
    const auto r = gradient_b_rates(b);
    REQUIRE(r.is_gradient());
    CHECK(gradient_defect(r.c(), *r.gradient_witness()) < 1e-12);
  }
  auto found = find_gradient_witness(gradient_b_rates(1.0).c(), 2);
  REQUIRE(found.has_value());
  CHECK(gradient_defect(gradient_b_rates(1.0).c(), *found) < 1e-12);
  CHECK_THROWS(preset_rates("no-such-model"));
  CHECK_THROWS(RateModel(WindowFunction(0, 0, {1.0, -1.0})));
}

TEST_CASE("non-gradient rates break the stationarity of product measures") {
  // c = 1 + eta(-1): symmetric under the exchange of 0 and 1, not of gradient type.
  const RateModel ng(WindowFunction::tabulate(-1, 1, [](const PatternView& e) { return 1.0 + e(-1); }), std::nullopt, 2);
  CHECK_FALSE(ng.is_gradient());
  CHECK_FALSE(zero_velocity_density(wasep_rates()) == std::nullopt);
  CHECK(*zero_velocity_density(wasep_rates()) == doctest::Approx(0.5).epsilon(1e-14));
  // beta'(rho) = 1 + (4b - 2) rho - 6 b rho^2 for c_b.
  const double b = 1.0;
  CHECK(*zero_velocity_density(gradient_b_rates(b)) == doctest::Approx((2 + std::sqrt(28.0)) / 12).epsilon(1e-14));
}

TEST_CASE("hydrodynamic coefficients match the closed forms") {
  const auto h = hydro_coefficients(wasep_rates(), 0.5);
  CHECK(h.chi == doctest::Approx(0.25));
  CHECK(h.phi == doctest::Approx(0.5));
  CHECK(h.phi_p == doctest::Approx(1.0));
  CHECK(h.beta == doctest::Approx(0.25));
  CHECK(h.beta_pp == doctest::Approx(-2.0));
  CHECK(h.mean_forward_activity == doctest::Approx(0.25));
  // c_b: E c = 1 + 2 b rho, E h_b = rho + b rho^2, beta = chi (1 + 2 b rho).
  const double b = 1.0, rho = 0.3;
  const auto g = hydro_coefficients(gradient_b_rates(b), rho);
  CHECK(g.mean_c == doctest::Approx(1 + 2 * b * rho));
  CHECK(g.phi == doctest::Approx(rho + b * rho * rho));
  CHECK(g.phi_p == doctest::Approx(1 + 2 * b * rho));
  CHECK(g.beta == doctest::Approx(rho * (1 - rho) * (1 + 2 * b * rho)));
  CHECK(g.beta_pp == doctest::Approx(-2 - 12 * b * rho + 4 * b));
}

TEST_CASE("grand canonical sampler has Bernoulli marginals, canonical sampler fixes the count") {
  Philox g(11, 1);
  const auto eta = sample_grand_canonical(100000, 0.3, g);
  CHECK(static_cast<double>(eta.particle_count()) / 100000 == doctest::Approx(0.3).epsilon(0.02));
  std::vector<double> first(10, 0.0);
  for (int r = 0; r < 20000; ++r) {
    const auto c = sample_canonical(10, 4, g);
    REQUIRE(c.particle_count() == 4);
    for (int x = 0; x < 10; ++x) first[x] += c[x];
  }
  for (double v : first) CHECK(v / 20000 == doctest::Approx(0.4).epsilon(0.05));
}
