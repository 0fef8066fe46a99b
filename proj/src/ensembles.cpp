#include "kpzlab/ensembles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace kpzlab {

namespace {

void check_box(const WindowFunction& f, std::int64_t k, std::int64_t m) {
  if (k < 1) throw std::invalid_argument("canonical expectation: k must be positive");
  if (m < 0 || m > k) throw std::invalid_argument("canonical expectation: need 0 <= m <= k");
  if (f.width() > k)
    throw std::invalid_argument("canonical expectation: window of width " + std::to_string(f.width()) +
                                " does not fit in a box of " + std::to_string(k) + " sites");
}

}  // namespace

double falling_ratio(std::int64_t k, std::int64_t m, int j) {
  double r = 1.0;
  for (int i = 0; i < j; ++i) {
    if (m - i <= 0) return 0.0;
    r *= static_cast<double>(m - i) / static_cast<double>(k - i);
  }
  return r;
}

double psi_canonical(const WindowFunction& f, std::int64_t k, std::int64_t m) {
  check_box(f, k, m);
  const auto w = monomial_decompose(f).degree_weights();
  double v = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j] != 0.0) v += w[j] * falling_ratio(k, m, static_cast<int>(j));
  return v;
}

CanonicalExpectation canonical_expectation(const WindowFunction& f, std::int64_t k) {
  check_box(f, k, 0);
  const auto w = monomial_decompose(f).degree_weights();
  CanonicalExpectation ce{static_cast<int>(k), std::vector<double>(static_cast<std::size_t>(k + 1), 0.0)};
  for (std::int64_t m = 0; m <= k; ++m) {
    double v = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
      if (w[j] != 0.0) v += w[j] * falling_ratio(k, m, static_cast<int>(j));
    ce.values[static_cast<std::size_t>(m)] = v;
  }
  return ce;
}

Rational psi_canonical_exact(const WindowFunction& f, std::int64_t k, std::int64_t m) {
  check_box(f, k, m);
  if (k > 64) throw std::invalid_argument("psi_canonical_exact: exact mode is limited to k <= 64");
  // Exact Moebius transform on rationals.
  std::vector<Rational> c(f.table().begin(), f.table().end());
  for (int j = 0; j < f.width(); ++j) {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t mask = 0; mask < c.size(); ++mask)
      if (mask & bit) c[mask] -= c[mask ^ bit];
  }
  Rational v = 0;
  for (std::uint32_t mask = 0; mask < c.size(); ++mask) {
    if (c[mask] == 0) continue;
    const int j = std::popcount(mask);
    Rational r = 1;
    for (int i = 0; i < j; ++i) r *= Rational(m - i, k - i);
    v += c[mask] * r;
  }
  return v;
}

double prop8_residual(const WindowFunction& f, std::int64_t k) {
  const Polynomial psi = grand_canonical_polynomial(f);
  const Polynomial psi2 = psi.derivative().derivative();
  const auto ce = canonical_expectation(f, k);
  double worst = 0.0;
  for (std::int64_t m = 0; m <= k; ++m) {
    const double x = static_cast<double>(m) / static_cast<double>(k);
    const double r = ce.values[static_cast<std::size_t>(m)] - psi(x) +
                     x * (1.0 - x) / (2.0 * static_cast<double>(k)) * psi2(x);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

std::vector<double> binomial_weights(std::int64_t k, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("binomial_weights: rho must lie in (0,1)");
  std::vector<double> w(static_cast<std::size_t>(k + 1));
  const double lk = std::lgamma(static_cast<double>(k) + 1.0);
  const double lr = std::log(rho);
  const double l1r = std::log1p(-rho);
  for (std::int64_t m = 0; m <= k; ++m) {
    const double lw = lk - std::lgamma(static_cast<double>(m) + 1.0) - std::lgamma(static_cast<double>(k - m) + 1.0) +
                      static_cast<double>(m) * lr + static_cast<double>(k - m) * l1r;
    w[static_cast<std::size_t>(m)] = std::exp(lw);
  }
  return w;
}

CanonicalMoments prop9_moments(const WindowFunction& f, double rho, std::int64_t k, int p) {
  if (p < 1) throw std::invalid_argument("prop9_moments: p must be >= 1");
  const auto dm = drift_moments(f, rho);
  if (std::abs(dm.psi) > 1e-12 || std::abs(dm.psi_p) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "prop9_moments: f must satisfy psi(rho) = psi'(rho) = 0 at rho = " << rho << "; got psi(rho) = " << dm.psi
       << ", psi'(rho) = " << dm.psi_p;
    throw std::invalid_argument(os.str());
  }
  const auto ce = canonical_expectation(f, k);
  const auto w = binomial_weights(k, rho);
  const double kk = static_cast<double>(k);
  const double c = chi(rho) / kk;
  CanonicalMoments out{0.0, 0.0};
  for (std::int64_t m = 0; m <= k; ++m) {
    const double psi_k = ce.values[static_cast<std::size_t>(m)];
    const double dev = static_cast<double>(m) / kk - rho;
    const double r = psi_k - 0.5 * dm.psi_pp * (dev * dev - c);
    const double wm = w[static_cast<std::size_t>(m)];
    out.moment2p += wm * std::pow(psi_k, 2 * p);
    out.residual_moment2 += wm * r * r;
  }
  return out;
}

std::int64_t binomial_count(std::int64_t k, std::int64_t m) {
  if (m < 0 || m > k) return 0;
  m = std::min(m, k - m);
  __int128 r = 1;
  for (std::int64_t i = 1; i <= m; ++i) {
    r = r * (k - m + i) / i;
    if (r > std::numeric_limits<std::int64_t>::max()) return std::numeric_limits<std::int64_t>::max();
  }
  return static_cast<std::int64_t>(r);
}

SectorGenerator sector_generator(int k, int m, const RateModel& rates) {
  if (k < 1 || k > 31) throw std::invalid_argument("sector_generator: need 1 <= k <= 31");
  if (m < 0 || m > k) throw std::invalid_argument("sector_generator: need 0 <= m <= k");
  const std::int64_t dim = binomial_count(k, m);
  if (dim > kMaxSectorDimension)
    throw std::invalid_argument("sector_generator: C(" + std::to_string(k) + "," + std::to_string(m) + ") = " +
                                std::to_string(dim) + " exceeds the dense limit of " +
                                std::to_string(kMaxSectorDimension));
  SectorGenerator g{k, m, {}, Eigen::MatrixXd::Zero(dim, dim)};
  g.states.reserve(static_cast<std::size_t>(dim));
  for (std::uint32_t s = 0; s < (1u << k); ++s)
    if (std::popcount(s) == m) g.states.push_back(s);
  auto index_of = [&](std::uint32_t s) {
    return static_cast<Eigen::Index>(std::lower_bound(g.states.begin(), g.states.end(), s) - g.states.begin());
  };
  std::vector<std::uint8_t> box(static_cast<std::size_t>(k));
  for (std::size_t a = 0; a < g.states.size(); ++a) {
    const std::uint32_t s = g.states[a];
    for (int i = 0; i < k; ++i) box[static_cast<std::size_t>(i)] = (s >> i) & 1u;
    for (int i = 0; i + 1 < k; ++i) {
      if (box[static_cast<std::size_t>(i)] == box[static_cast<std::size_t>(i + 1)]) continue;
      const double rate = rates.rate_in_box(box, i);
      const std::uint32_t t = s ^ (3u << i);
      const Eigen::Index b = index_of(t);
      g.minus_L(static_cast<Eigen::Index>(a), b) -= rate;
      g.minus_L(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += rate;
    }
  }
  return g;
}

double spectral_gap(int k, int m, const RateModel& rates) {
  const SectorGenerator g = sector_generator(k, m, rates);
  if (g.states.size() < 2) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.minus_L, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral_gap: eigensolver failed");
  return es.eigenvalues()[1];
}

}  // namespace kpzlab
