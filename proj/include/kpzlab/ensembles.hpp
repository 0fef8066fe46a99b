#ifndef KPZLAB_ENSEMBLES_HPP
#define KPZLAB_ENSEMBLES_HPP

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Dense>

#include "kpzlab/lattice.hpp"
#include "kpzlab/window_function.hpp"

namespace kpzlab {

using Rational = boost::multiprecision::cpp_rational;

/// Psi(k, m/k) for m = 0..k: expectation of f under the uniform measure on
/// configurations of k sites with m particles.
struct CanonicalExpectation {
  int k;
  std::vector<double> values;
};

/// prod_{i<j} (m-i)/(k-i), the canonical probability that j given sites are
/// all occupied. Factors are divided one at a time to avoid overflow.
double falling_ratio(std::int64_t k, std::int64_t m, int j);

double psi_canonical(const WindowFunction& f, std::int64_t k, std::int64_t m);
CanonicalExpectation canonical_expectation(const WindowFunction& f, std::int64_t k);

/// Exact rational evaluation (table entries are converted exactly). k <= 64.
Rational psi_canonical_exact(const WindowFunction& f, std::int64_t k, std::int64_t m);

/// max over m of |Psi(k,m/k) - psi(m/k) + (x(1-x)/(2k)) psi''(m/k)|, x = m/k.
double prop8_residual(const WindowFunction& f, std::int64_t k);

struct CanonicalMoments {
  double moment2p;           // E[Psi(k, eta^k)^{2p}]
  double residual_moment2;   // E[(Psi - (psi''/2)((eta^k - rho)^2 - chi/k))^2]
};

/// Exact binomial sums over the block particle number. Requires
/// psi(rho) = psi'(rho) = 0 (tolerance 1e-12) and throws otherwise.
CanonicalMoments prop9_moments(const WindowFunction& f, double rho, std::int64_t k, int p);

/// Binomial(k, rho) probabilities, computed in log space.
std::vector<double> binomial_weights(std::int64_t k, double rho);

/// Symmetric exchange generator restricted to configurations of k sites with
/// m particles. Bond (i, i+1), i = 1..k-1, exchanges at rate c_i(eta), with
/// sites outside the box read as empty.
struct SectorGenerator {
  int k;
  int m;
  std::vector<std::uint32_t> states;  // bit i = site i+1
  Eigen::MatrixXd minus_L;            // -L, symmetric, row sums zero
};

inline constexpr std::int64_t kMaxSectorDimension = 10000;

SectorGenerator sector_generator(int k, int m, const RateModel& rates);

/// Second-smallest eigenvalue of -L on the sector; +infinity when the sector
/// has a single state.
double spectral_gap(int k, int m, const RateModel& rates);

/// C(k, m) as an exact integer (saturating at int64 max).
std::int64_t binomial_count(std::int64_t k, std::int64_t m);

}  // namespace kpzlab

#endif  // KPZLAB_ENSEMBLES_HPP
