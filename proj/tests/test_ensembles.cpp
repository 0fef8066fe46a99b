#include <cmath>

#include "doctest.h"

#include "kpzlab/ensembles.hpp"

using namespace kpzlab;

namespace {

// Average of f over every placement of m particles on k sites, window read
// starting at site 0 of the block.
Rational enumerate_canonical(const WindowFunction& f, int k, int m) {
  Rational total = 0;
  std::int64_t count = 0;
  for (std::uint32_t s = 0; s < (1u << k); ++s) {
    if (__builtin_popcount(s) != m) continue;
    std::uint32_t pat = 0;
    for (int j = 0; j < f.width(); ++j) pat |= ((s >> j) & 1u) << j;
    // value tables are small integers or dyadic, so the conversion is exact
    total += Rational(static_cast<long long>(std::llround(f.value(pat) * 1024))) / 1024;
    ++count;
  }
  return total / count;
}

}  // namespace

TEST_CASE("exact canonical expectation agrees with enumeration") {
  Philox g(3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const int width = 1 + static_cast<int>(g.uniform() * 4);
    std::vector<double> t(1u << width);
    for (auto& v : t) v = (std::floor(g.uniform() * 33) - 16) / (trial % 2 ? 8.0 : 1.0);
    const WindowFunction f(0, width - 1, t);
    for (int k = width; k <= 10; ++k)
      for (int m = 0; m <= k; ++m) {
        const auto exact = psi_canonical_exact(f, k, m);
        REQUIRE(exact == enumerate_canonical(f, k, m));
        CHECK(psi_canonical(f, k, m) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-12));
      }
  }
}

TEST_CASE("canonical ensemble of a linear function has no residual") {
  const auto f = WindowFunction::occupation(1);
  for (std::int64_t k : {4, 16, 256}) CHECK(prop8_residual(f, k) == 0.0);
}

TEST_CASE("second-moment bounds for the recentered exclusion drift") {
  // f = (eta(1) - eta(0))^2 / 2 - 1/4 at rho = 1/2: Psi(k, m/k) = m(k - m)/(k(k - 1)) - 1/4,
  // psi''/2 = -1.
  const auto f = WindowFunction::tabulate(0, 1, [](const PatternView& e) {
    const double d = e(1) - e(0);
    return d * d / 2 - 0.25;
  });
  for (std::int64_t k : {4, 9, 64, 300}) {
    double m2 = 0, r2 = 0, m4 = 0;
    for (std::int64_t m = 0; m <= k; ++m) {
      const double w = std::exp(std::lgamma(k + 1.0) - std::lgamma(m + 1.0) - std::lgamma(k - m + 1.0) - k * std::log(2.0));
      const double kk = static_cast<double>(k);
      const double psi = m * (kk - m) / (kk * (kk - 1)) - 0.25;
      const double x = m / kk - 0.5;
      const double res = psi + (x * x - 0.25 / kk);
      m2 += w * psi * psi;
      m4 += w * psi * psi * psi * psi;
      r2 += w * res * res;
    }
    const auto p1 = prop9_moments(f, 0.5, k, 1);
    CHECK(p1.moment2p == doctest::Approx(m2).epsilon(1e-10));
    CHECK(p1.residual_moment2 == doctest::Approx(r2).epsilon(1e-8).scale(1e-16));
    CHECK(prop9_moments(f, 0.5, k, 2).moment2p == doctest::Approx(m4).epsilon(1e-10));
  }
  CHECK_THROWS(prop9_moments(f, 0.3, 16, 1));
}

TEST_CASE("spectral gap of small sectors") {
  const auto w = wasep_rates();
  CHECK(spectral_gap(2, 1, w) == doctest::Approx(2.0).epsilon(1e-12));
  // One particle on a path of k sites: reflecting walk with gap 2(1 - cos(pi/k)).
  for (int k : {3, 5, 8, 12})
    CHECK(spectral_gap(k, 1, w) == doctest::Approx(2 * (1 - std::cos(M_PI / k))).epsilon(1e-10));
  // Particle-hole symmetry of the symmetric exchange.
  CHECK(spectral_gap(9, 2, w) == doctest::Approx(spectral_gap(9, 7, w)).epsilon(1e-10));
  CHECK(std::isinf(spectral_gap(5, 0, w)));
  const auto gen = sector_generator(6, 3, gradient_b_rates(1.0));
  CHECK(gen.states.size() == 20);
  CHECK((gen.minus_L - gen.minus_L.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(gen.minus_L.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("binomial counts") {
  CHECK(binomial_count(10, 3) == 120);
  CHECK(binomial_count(60, 30) == 118264581564861424LL);
  CHECK(binomial_count(5, 6) == 0);
}
