#include "kpzlab/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace kpzlab {

Configuration sample_grand_canonical(std::int64_t L, double rho, Philox& rng) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("sample_grand_canonical: rho must lie in (0,1)");
  if (L < 1) throw std::invalid_argument("sample_grand_canonical: L must be positive");
  std::vector<std::uint8_t> v(static_cast<std::size_t>(L));
  for (auto& s : v) s = rng.uniform() < rho ? 1 : 0;
  return Configuration(std::move(v));
}

Configuration sample_grand_canonical(std::int64_t L, double rho, std::uint64_t seed) {
  Philox rng(seed, 0);
  return sample_grand_canonical(L, rho, rng);
}

Configuration sample_canonical(std::int64_t k, std::int64_t m, Philox& rng) {
  if (k < 1) throw std::invalid_argument("sample_canonical: k must be positive");
  if (m < 0 || m > k) throw std::invalid_argument("sample_canonical: need 0 <= m <= k");
  // Selection sampling: site i is occupied with probability (remaining m)/(remaining sites).
  std::vector<std::uint8_t> v(static_cast<std::size_t>(k), 0);
  std::int64_t left = m;
  for (std::int64_t i = 0; i < k && left > 0; ++i) {
    if (rng.uniform() * static_cast<double>(k - i) < static_cast<double>(left)) {
      v[static_cast<std::size_t>(i)] = 1;
      --left;
    }
  }
  return Configuration(std::move(v));
}

Configuration sample_canonical(std::int64_t k, std::int64_t m, std::uint64_t seed) {
  Philox rng(seed, 0);
  return sample_canonical(k, m, rng);
}

// ---------------------------------------------------------------------------

double MonomialDecomposition::evaluate(int lo, std::uint32_t bits) const {
  double v = 0.0;
  for (const auto& t : terms) {
    bool on = true;
    for (int s : t.sites) on = on && ((bits >> (s - lo)) & 1u);
    if (on) v += t.coeff;
  }
  return v;
}

std::vector<double> MonomialDecomposition::degree_weights() const {
  std::vector<double> w;
  for (const auto& t : terms) {
    if (w.size() <= t.sites.size()) w.resize(t.sites.size() + 1, 0.0);
    w[t.sites.size()] += t.coeff;
  }
  return w;
}

MonomialDecomposition monomial_decompose(const WindowFunction& f) {
  std::vector<double> c = f.table();
  const int w = f.width();
  // In-place subset Moebius transform: c[A] <- sum_{B subset A} (-1)^{|A|-|B|} f(B).
  for (int j = 0; j < w; ++j) {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t mask = 0; mask < c.size(); ++mask)
      if (mask & bit) c[mask] -= c[mask ^ bit];
  }
  MonomialDecomposition d;
  for (std::uint32_t mask = 0; mask < c.size(); ++mask) {
    if (c[mask] == 0.0) continue;
    Monomial m{c[mask], {}};
    for (int j = 0; j < w; ++j)
      if (mask & (1u << j)) m.sites.push_back(f.lo() + j);
    d.terms.push_back(std::move(m));
  }
  return d;
}

Polynomial grand_canonical_polynomial(const WindowFunction& f) {
  return Polynomial(monomial_decompose(f).degree_weights());
}

double grand_canonical_mean(const WindowFunction& f, double rho) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("grand_canonical_mean: rho must lie in [0,1]");
  return grand_canonical_polynomial(f)(rho);
}

DriftMoments drift_moments(const WindowFunction& f, double rho) {
  const Polynomial p = grand_canonical_polynomial(f);
  const Polynomial d1 = p.derivative();
  return {p(rho), d1(rho), d1.derivative()(rho)};
}

std::optional<double> zero_velocity_density(const RateModel& rates) {
  const Polynomial v = grand_canonical_polynomial(drift_function(rates, 1.0)).derivative();
  std::optional<double> best;
  constexpr int kGrid = 4096;
  for (int i = 0; i < kGrid; ++i) {
    double lo = static_cast<double>(i) / kGrid, hi = static_cast<double>(i + 1) / kGrid;
    double flo = v(lo);
    if (i == 0) lo = 0x1p-40, flo = v(lo);
    if (flo == 0.0) {
      if (!best || std::abs(lo - 0.5) < std::abs(*best - 0.5)) best = lo;
      continue;
    }
    if ((flo < 0) == (v(hi) < 0)) continue;
    for (int it = 0; it < 200 && hi - lo > 0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if ((v(mid) < 0) == (flo < 0)) lo = mid;
      else hi = mid;
    }
    const double root = std::abs(v(lo)) <= std::abs(v(hi)) ? lo : hi;
    if (!best || std::abs(root - 0.5) < std::abs(*best - 0.5)) best = root;
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

// Largest dense system (rows * unknowns) the witness search will factor.
constexpr std::size_t kWitnessCells = std::size_t{1} << 22;

double snap(double v) {
  const double grid = 0x1.0p-24;
  const double r = std::round(v / grid) * grid;
  return std::abs(r - v) < 1e-9 ? r : v;
}

}  // namespace

double gradient_defect(const WindowFunction& c, const WindowFunction& h) {
  const int lo = std::min({c.lo(), 0, h.lo()});
  const int hi = std::max({c.hi(), 1, h.hi() + 1});
  const WindowFunction shifted = h.translated(1);
  double worst = 0.0;
  for (std::uint32_t p = 0; p < (1u << (hi - lo + 1)); ++p) {
    const PatternView v(lo, p);
    const double lhs = eval_on_pattern(c, lo, p) * (v(1) - v(0));
    const double rhs = eval_on_pattern(shifted, lo, p) - eval_on_pattern(h, lo, p);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

std::optional<WindowFunction> find_gradient_witness(const WindowFunction& c, int search_radius) {
  if (c.min_value() < 0.0) throw std::invalid_argument("find_gradient_witness: c must be nonnegative");
  if (search_radius < 0) throw std::invalid_argument("find_gradient_witness: search radius must be >= 0");
  for (int r = 0; r <= search_radius; ++r) {
    const int lo = std::min({c.lo(), 0, -r});
    const int hi = std::max({c.hi(), 1, r + 1});
    const int jw = hi - lo + 1;
    const int hw = 2 * r + 1;
    const std::size_t rows = std::size_t{1} << jw;
    const std::size_t cols = (std::size_t{1} << hw) - 1;  // h(empty) fixed to 0
    if (jw > kMaxWindowWidth || rows * cols > kWitnessCells)
      throw std::invalid_argument("find_gradient_witness: radius " + std::to_string(r) +
                                  " exceeds the dense solver capacity");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
    const std::uint32_t hmask = (1u << hw) - 1u;
    for (std::uint32_t p = 0; p < rows; ++p) {
      const PatternView v(lo, p);
      b[p] = eval_on_pattern(c, lo, p) * (v(1) - v(0));
      const std::uint32_t here = (p >> (-r - lo)) & hmask;
      const std::uint32_t next = (p >> (-r + 1 - lo)) & hmask;
      if (next != 0) A(p, next - 1) += 1.0;
      if (here != 0) A(p, here - 1) -= 1.0;
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    std::vector<double> table(std::size_t{1} << hw, 0.0);
    for (std::size_t i = 0; i < cols; ++i) table[i + 1] = snap(sol[static_cast<Eigen::Index>(i)]);
    WindowFunction h(-r, r, std::move(table));
    const double scale = std::max(1.0, std::max(std::abs(c.max_value()), std::abs(c.min_value())));
    if (gradient_defect(c, h) <= 1e-9 * scale) return h.trimmed();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

RateModel::RateModel(WindowFunction c, std::optional<WindowFunction> witness, int search_radius, std::string name)
    : c_(std::move(c)), witness_(std::move(witness)), name_(std::move(name)) {
  if (c_.min_value() <= 0.0) throw std::invalid_argument("RateModel: c must be strictly positive (ellipticity)");
  epsilon0_ = std::min(c_.min_value(), 1.0 / c_.max_value());
  const int lo = std::min(c_.lo(), 0);
  const int hi = std::max(c_.hi(), 1);
  for (std::uint32_t p = 0; p < (1u << (hi - lo + 1)); ++p) {
    const std::uint32_t b0 = 1u << (0 - lo);
    const std::uint32_t b1 = 1u << (1 - lo);
    std::uint32_t q = p & ~(b0 | b1);
    if (p & b0) q |= b1;
    if (p & b1) q |= b0;
    if (eval_on_pattern(c_, lo, p) != eval_on_pattern(c_, lo, q))
      throw std::invalid_argument("RateModel: c must satisfy c(eta) = c(eta^{0,1})");
  }
  if (witness_) {
    const double d = gradient_defect(c_, *witness_);
    if (d > 1e-9) throw std::invalid_argument("RateModel: supplied gradient witness violates the identity by " +
                                              std::to_string(d));
  } else if (search_radius >= 0) {
    witness_ = find_gradient_witness(c_, search_radius);
  }
}

double RateModel::rate_in_box(const std::vector<std::uint8_t>& box, int bond_left) const {
  const int k = static_cast<int>(box.size());
  std::uint32_t p = 0;
  for (int j = 0; j < c_.width(); ++j) {
    const int site = bond_left + c_.lo() + j;
    if (site >= 0 && site < k && box[static_cast<std::size_t>(site)]) p |= 1u << j;
  }
  return c_.value(p);
}

RateModel wasep_rates() {
  return RateModel(WindowFunction::constant(1.0).extended(0, 1), WindowFunction::occupation(0), -1, "wasep");
}

RateModel gradient_b_rates(double b) {
  if (b < 0.0) throw std::invalid_argument("gradient-b rates need b >= 0");
  auto c = WindowFunction::tabulate(-1, 2, [b](const PatternView& e) { return 1.0 + b * (e(-1) + e(2)); });
  auto h = WindowFunction::tabulate(-1, 1, [b](const PatternView& e) {
    return e(0) + b * (e(-1) * e(0) + e(0) * e(1) - e(-1) * e(1));
  });
  return RateModel(std::move(c), std::move(h), -1, "gradient-b");
}

RateModel preset_rates(const std::string& name, double b) {
  if (name == "wasep") return wasep_rates();
  if (name == "gradient-b") return gradient_b_rates(b);
  throw std::invalid_argument("unknown rate preset '" + name + "' (expected wasep or gradient-b)");
}

WindowFunction drift_function(const RateModel& rates, double a) {
  const auto& c = rates.c();
  const int lo = std::min(c.lo(), 0);
  const int hi = std::max(c.hi(), 1);
  return WindowFunction::tabulate(lo, hi, [&](const PatternView& e) {
    const int d = e(1) - e(0);
    return 0.5 * a * eval_on_pattern(c, lo, e.bits()) * d * d;
  });
}

WindowFunction quadratic_variation_density(const RateModel& rates, double p) {
  const auto& c = rates.c();
  const int lo = std::min(c.lo(), 0);
  const int hi = std::max(c.hi(), 1);
  const double q = 1.0 - p;
  return WindowFunction::tabulate(lo, hi, [&](const PatternView& e) {
    return (p * e(0) * (1 - e(1)) + q * e(1) * (1 - e(0))) * eval_on_pattern(c, lo, e.bits());
  });
}

HydroCoefficients hydro_coefficients(const RateModel& rates, double rho) {
  HydroCoefficients hc{};
  hc.rho = rho;
  hc.chi = chi(rho);
  const Polynomial chi_poly({0.0, 1.0, -1.0});
  const Polynomial c_poly = grand_canonical_polynomial(rates.c());
  hc.mean_c = c_poly(rho);
  const Polynomial beta = chi_poly * c_poly;
  hc.beta = beta(rho);
  hc.beta_p = beta.derivative()(rho);
  hc.beta_pp = beta.derivative().derivative()(rho);
  if (rates.gradient_witness()) {
    const Polynomial phi = grand_canonical_polynomial(*rates.gradient_witness());
    hc.phi = phi(rho);
    hc.phi_p = phi.derivative()(rho);
  } else {
    hc.phi = hc.phi_p = std::numeric_limits<double>::quiet_NaN();
  }
  const auto& c = rates.c();
  const int lo = std::min(c.lo(), 0);
  const int hi = std::max(c.hi(), 1);
  const auto fwd = WindowFunction::tabulate(
      lo, hi, [&](const PatternView& e) { return eval_on_pattern(c, lo, e.bits()) * e(0) * (1 - e(1)); });
  hc.mean_forward_activity = grand_canonical_mean(fwd, rho);
  return hc;
}

}  // namespace kpzlab
