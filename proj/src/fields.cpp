#include "kpzlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kpzlab/ensembles.hpp"

namespace kpzlab {

TestFunction::TestFunction(std::vector<double> samples, std::int64_t n) : n_(n), g_(std::move(samples)) {
  if (n_ < 1) throw std::invalid_argument("TestFunction: n must be positive");
  const auto L = static_cast<std::int64_t>(g_.size());
  if (L < 3) throw std::invalid_argument("TestFunction: ring too small");
  const double nn = static_cast<double>(n_);
  grad_.resize(g_.size());
  lap_.resize(g_.size());
  for (std::int64_t x = 0; x < L; ++x) {
    const double here = g_[static_cast<std::size_t>(x)];
    const double next = g_[static_cast<std::size_t>((x + 1) % L)];
    const double prev = g_[static_cast<std::size_t>((x + L - 1) % L)];
    grad_[static_cast<std::size_t>(x)] = nn * (next - here);
    lap_[static_cast<std::size_t>(x)] = nn * nn * (next + prev - 2.0 * here);
  }
  for (std::size_t x = 0; x < g_.size(); ++x) {
    semi1_ += grad_[x] * grad_[x];
    l2_ += g_[x] * g_[x];
    integral_ += g_[x];
  }
  semi1_ /= nn;
  l2_ /= nn;
  integral_ /= nn;
}

double TestFunction::position(std::int64_t x, std::int64_t n, std::int64_t L) {
  x %= L;
  if (x < 0) x += L;
  const std::int64_t c = x < L / 2 ? x : x - L;
  return static_cast<double>(c) / static_cast<double>(n);
}

TestFunction TestFunction::sample(const std::function<double(double)>& G, std::int64_t n, std::int64_t L) {
  std::vector<double> v(static_cast<std::size_t>(L));
  for (std::int64_t x = 0; x < L; ++x) v[static_cast<std::size_t>(x)] = G(position(x, n, L));
  return TestFunction(std::move(v), n);
}

double TestFunction::operator[](std::int64_t x) const {
  const auto L = static_cast<std::int64_t>(g_.size());
  x %= L;
  if (x < 0) x += L;
  return g_[static_cast<std::size_t>(x)];
}

double cutoff_profile(double u, double l) {
  if (u <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - u / l);
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

TestFunction TestFunction::parse(const std::string& spec, std::int64_t n, std::int64_t L) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("test function '" + spec + "': expected kind:parameter");
  const std::string kind = spec.substr(0, colon);
  double par = 0.0;
  try {
    std::size_t used = 0;
    par = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw std::invalid_argument("test function '" + spec + "': bad numeric parameter");
  }
  const double ell = static_cast<double>(L) / static_cast<double>(n);
  const double two_pi = 2.0 * std::numbers::pi;
  if (kind == "sin") return sample([=](double u) { return std::sin(two_pi * par * u / ell); }, n, L);
  if (kind == "cos") return sample([=](double u) { return std::cos(two_pi * par * u / ell); }, n, L);
  if (kind == "gauss") {
    if (par <= 0.0) throw std::invalid_argument("test function '" + spec + "': width must be positive");
    return sample([=](double u) { return std::exp(-u * u / (2.0 * par * par)); }, n, L);
  }
  if (kind == "bump") {
    if (par <= 0.0) throw std::invalid_argument("test function '" + spec + "': width must be positive");
    return sample(
        [=](double u) {
          const double s = 2.0 * u / par;
          return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
        },
        n, L);
  }
  if (kind == "cutoff") {
    if (par <= 0.0) throw std::invalid_argument("test function '" + spec + "': length must be positive");
    return sample([=](double u) { return cutoff_profile(u, par); }, n, L);
  }
  throw std::invalid_argument("test function '" + spec + "': unknown kind (sin, cos, gauss, bump, cutoff)");
}

// ---------------------------------------------------------------------------

double eval_Y(const Configuration& eta, const TestFunction& G, double rho) {
  if (eta.size() != G.L()) throw std::invalid_argument("eval_Y: ring length mismatch");
  double v = 0.0;
  for (std::int64_t x = 0; x < eta.size(); ++x) v += (eta.at_unchecked(x) - rho) * G.values()[static_cast<std::size_t>(x)];
  return v / std::sqrt(static_cast<double>(G.n()));
}

std::int64_t block_length(double eps, std::int64_t n) {
  const double k = eps * static_cast<double>(n);
  const double r = std::round(k);
  if (r < 1.0 || std::abs(k - r) > 1e-9)
    throw std::invalid_argument("block length eps*n = " + std::to_string(k) + " must be an integer >= 1");
  return static_cast<std::int64_t>(r);
}

double smoothed_square(const Configuration& eta, std::int64_t x, double eps, double rho, std::int64_t n) {
  const std::int64_t k = block_length(eps, n);
  std::int64_t m = 0;
  for (std::int64_t i = 1; i <= k; ++i) m += eta[x + i];
  const double d = static_cast<double>(m) / static_cast<double>(k) - rho;
  return static_cast<double>(n) * d * d;
}

DriftSetup make_drift_setup(const Model& model) {
  const auto& P = model.params();
  const auto& rates = model.rates();
  if (!rates.gradient_witness())
    throw std::invalid_argument("drift fields need a gradient witness h for the rate model '" + rates.name() + "'");
  DriftSetup d{drift_function(rates, P.a), {}, *rates.gradient_witness(), quadratic_variation_density(rates, P.p()),
               std::pow(static_cast<double>(P.n), 0.5 - P.theta), P.rho, P.n};
  d.moments = drift_moments(d.f, P.rho);
  if (std::abs(d.moments.psi_p) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "drift fields: psi'(rho) = " << d.moments.psi_p << " at rho = " << P.rho
       << " is nonzero; choose the density with zero frame velocity";
    if (const auto r = zero_velocity_density(rates)) os << " (rho = " << *r << " for these rates)";
    throw std::invalid_argument(os.str());
  }
  return d;
}

double drift_integrand(const Configuration& eta, const TestFunction& G, const DriftSetup& d) {
  double v = 0.0;
  for (std::int64_t x = 0; x < eta.size(); ++x)
    v += (d.f.eval(eta, x) - d.moments.psi) * G.grad()[static_cast<std::size_t>(x)];
  return d.scale * v;
}

double laplacian_integrand(const Configuration& eta, const TestFunction& G, const DriftSetup& d) {
  double v = 0.0;
  for (std::int64_t x = 0; x < eta.size(); ++x) v += d.h.eval(eta, x) * G.lap()[static_cast<std::size_t>(x)];
  return v / (2.0 * std::sqrt(static_cast<double>(d.n)));
}

double quadratic_variation_integrand(const Configuration& eta, const TestFunction& G, const DriftSetup& d) {
  double v = 0.0;
  for (std::int64_t x = 0; x < eta.size(); ++x) {
    const double g = G.grad()[static_cast<std::size_t>(x)];
    v += d.g.eval(eta, x) * g * g;
  }
  return v / static_cast<double>(d.n);
}

std::vector<double> block_drift_table(const DriftSetup& d, std::int64_t k) {
  const auto ce = canonical_expectation(d.f, k);
  std::vector<double> t(ce.values.size());
  for (std::size_t m = 0; m < t.size(); ++m) t[m] = d.scale * (ce.values[m] - d.moments.psi);
  return t;
}

namespace {

std::vector<double> block_weights_for_drift(const TestFunction& G, std::int64_t k) {
  const std::int64_t L = G.L();
  if (L % k != 0) throw std::invalid_argument("block field: k = " + std::to_string(k) + " must divide L = " +
                                               std::to_string(L));
  std::vector<double> w(static_cast<std::size_t>(L / k), 0.0);
  for (std::int64_t j = 0; j < L / k; ++j) {
    double s = 0.0;
    for (std::int64_t i = 1; i <= k; ++i) s += G.grad()[static_cast<std::size_t>((j * k + i) % L)];
    w[static_cast<std::size_t>(j)] = s;  // k * H^k_x
  }
  return w;
}

std::vector<double> block_weights_for_quad(const TestFunction& G, std::int64_t k) {
  const std::int64_t L = G.L();
  if (L % k != 0) throw std::invalid_argument("quadratic field: eps*n = " + std::to_string(k) +
                                               " must divide L = " + std::to_string(L));
  std::vector<double> w(static_cast<std::size_t>(L / k), 0.0);
  for (std::int64_t j = 0; j < L / k; ++j) w[static_cast<std::size_t>(j)] = G[j * k + k] - G[j * k];
  return w;
}

std::vector<double> quad_table(std::int64_t k, double rho, std::int64_t n, double psi2) {
  std::vector<double> t(static_cast<std::size_t>(k + 1));
  for (std::int64_t m = 0; m <= k; ++m) {
    const double dev = static_cast<double>(m) / static_cast<double>(k) - rho;
    t[static_cast<std::size_t>(m)] = 0.5 * psi2 * static_cast<double>(n) * dev * dev;
  }
  return t;
}

}  // namespace

double block_field_integrand(const Configuration& eta, const TestFunction& G, std::int64_t k, const DriftSetup& d) {
  const auto table = block_drift_table(d, k);
  const auto w = block_weights_for_drift(G, k);
  return BlockObservable(k, 1, table, w).evaluate(eta);
}

double quad_field_increment(const Configuration& eta, const TestFunction& G, double eps, double rho,
                            std::int64_t n, double psi2) {
  const std::int64_t k = block_length(eps, n);
  const auto w = block_weights_for_quad(G, k);
  double v = 0.0;
  for (std::int64_t j = 0; j < G.L() / k; ++j)
    v += smoothed_square(eta, j * k, eps, rho, n) * w[static_cast<std::size_t>(j)];
  return 0.5 * psi2 * v;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Observable> make_Y_observable(const TestFunction& G, double rho) {
  const double s = 1.0 / std::sqrt(static_cast<double>(G.n()));
  std::vector<double> w(G.values());
  double total = 0.0;
  for (auto& v : w) {
    total += v;
    v *= s;
  }
  return std::make_unique<LinearObservable>(std::move(w), -rho * total * s);
}

std::unique_ptr<Observable> make_I_observable(const TestFunction& G, const DriftSetup& d) {
  std::vector<double> w(G.lap());
  const double s = 1.0 / (2.0 * std::sqrt(static_cast<double>(d.n)));
  for (auto& v : w) v *= s;
  return std::make_unique<LocalSumObservable>(d.h, std::move(w));
}

std::unique_ptr<Observable> make_A_observable(const TestFunction& G, const DriftSetup& d) {
  std::vector<double> w(G.grad());
  for (auto& v : w) v *= d.scale;
  return std::make_unique<LocalSumObservable>(d.f - d.moments.psi, std::move(w));
}

std::unique_ptr<Observable> make_QV_observable(const TestFunction& G, const DriftSetup& d) {
  std::vector<double> w(G.grad());
  for (auto& v : w) v = v * v / static_cast<double>(d.n);
  return std::make_unique<LocalSumObservable>(d.g, std::move(w));
}

std::unique_ptr<Observable> make_block_observable(const TestFunction& G, std::int64_t k, const DriftSetup& d) {
  return std::make_unique<BlockObservable>(k, 1, block_drift_table(d, k), block_weights_for_drift(G, k));
}

std::unique_ptr<Observable> make_quad_observable(const TestFunction& G, double eps, const DriftSetup& d) {
  const std::int64_t k = block_length(eps, d.n);
  return std::make_unique<BlockObservable>(k, 1, quad_table(k, d.rho, d.n, d.scale * d.moments.psi_pp),
                                           block_weights_for_quad(G, k));
}

std::unique_ptr<Observable> make_site_observable(std::int64_t x, std::int64_t L) {
  std::vector<double> w(static_cast<std::size_t>(L), 0.0);
  x %= L;
  if (x < 0) x += L;
  w[static_cast<std::size_t>(x)] = 1.0;
  return std::make_unique<LinearObservable>(std::move(w), 0.0);
}

MartingaleFields build_martingale_fields(const std::vector<TestFunction>& Gs, const DriftSetup& d) {
  MartingaleFields mf;
  for (const auto& G : Gs) {
    mf.observables.push_back(make_Y_observable(G, d.rho));
    mf.observables.push_back(make_I_observable(G, d));
    mf.observables.push_back(make_A_observable(G, d));
    mf.observables.push_back(make_QV_observable(G, d));
  }
  mf.count = Gs.size();
  return mf;
}

double Decomposition::max_identity_defect() const {
  double worst = 0.0;
  for (std::size_t s = 0; s < Y.size(); ++s)
    worst = std::max(worst, std::abs((((Y[s] - Y[0]) - I[s]) - A[s]) - M[s]));
  return worst;
}

bool Decomposition::qv_nondecreasing() const {
  for (std::size_t s = 1; s < QV.size(); ++s)
    if (QV[s] < QV[s - 1]) return false;
  return true;
}

Decomposition martingale_decompose(const FieldSeries& series, std::size_t first) {
  if (first + 3 >= series.values.size()) throw std::invalid_argument("martingale_decompose: index out of range");
  if (series.times.empty() || series.times.front() != 0.0)
    throw std::invalid_argument("martingale_decompose: the first sample must be at t = 0");
  Decomposition d;
  d.Y = series.values[first];
  d.I = series.integrals[first + 1];
  d.A = series.integrals[first + 2];
  d.QV = series.integrals[first + 3];
  d.M.resize(d.Y.size());
  for (std::size_t s = 0; s < d.Y.size(); ++s) d.M[s] = ((d.Y[s] - d.Y[0]) - d.I[s]) - d.A[s];
  return d;
}

// ---------------------------------------------------------------------------

double expected_current(const Model& model, double t) {
  const auto& P = model.params();
  const auto hc = hydro_coefficients(model.rates(), P.rho);
  return model.n2() * (P.p() - P.q()) * hc.mean_forward_activity * t;
}

double theta_from_current(std::int64_t J, const Model& model, double t) {
  return (static_cast<double>(J) - expected_current(model, t)) / std::sqrt(static_cast<double>(model.params().n));
}

CurrentHeight current_and_height(const SimState& state, const std::vector<std::int64_t>& marked, double t) {
  CurrentHeight ch;
  for (auto x : marked) ch.J.push_back(state.current(x));
  ch.theta0 = theta_from_current(state.current(0), state.model(), t);
  return ch;
}

bool continuity_holds(const Configuration& eta0, const Configuration& eta_t, const std::vector<std::int64_t>& J) {
  const std::int64_t L = eta0.size();
  if (eta_t.size() != L || static_cast<std::int64_t>(J.size()) != L) return false;
  for (std::int64_t x = 0; x < L; ++x) {
    const std::int64_t lhs = eta_t.at_unchecked(x) - eta0.at_unchecked(x);
    const std::int64_t rhs = J[static_cast<std::size_t>((x + L - 1) % L)] - J[static_cast<std::size_t>(x)];
    if (lhs != rhs) return false;
  }
  return true;
}

double eval_Y_star(const Configuration& eta0, const Configuration& eta_t, const TestFunction& G) {
  double v = 0.0;
  for (std::int64_t x = 0; x < eta0.size(); ++x) {
    const int d = eta_t.at_unchecked(x) - eta0.at_unchecked(x);
    if (d != 0) v += d * G.values()[static_cast<std::size_t>(x)];
  }
  return v / std::sqrt(static_cast<double>(G.n()));
}

PairingResult interface_pairing(const Configuration& eta0, const Configuration& eta_t,
                                const std::vector<std::int64_t>& J, const TestFunction& G, double mean_current) {
  const std::int64_t L = G.L();
  const std::int64_t n = G.n();
  if (eta0.size() != L || eta_t.size() != L || static_cast<std::int64_t>(J.size()) != L)
    throw std::invalid_argument("interface_pairing: size mismatch");
  const double nn = static_cast<double>(n);
  const double rn = std::sqrt(nn);
  const std::int64_t seam = L / 2;  // first site in left-to-right order
  auto site = [&](std::int64_t i) { return (seam + i) % L; };
  auto u = [&](std::int64_t x) { return TestFunction::position(x, n, L); };

  PairingResult r{};
  r.lambda = G.integral();
  // T_0 G by prefix sums from the seam, then T G = T_0 G - Lambda f0.
  std::vector<double> TG(static_cast<std::size_t>(L));
  double prefix = 0.0;
  double tg_max = 0.0;
  for (std::int64_t i = 0; i < L; ++i) {
    const std::int64_t x = site(i);
    TG[static_cast<std::size_t>(x)] = prefix - r.lambda * logistic(u(x));
    tg_max = std::max(tg_max, std::abs(TG[static_cast<std::size_t>(x)]));
    prefix += G.values()[static_cast<std::size_t>(x)] / nn;
  }
  for (std::int64_t x = 0; x < L; ++x) {
    const int d = eta_t.at_unchecked(x) - eta0.at_unchecked(x);
    if (d != 0) r.y_star_TG += d * TG[static_cast<std::size_t>(x)];
  }
  r.y_star_TG /= rn;
  const std::int64_t seam_bond = (seam + L - 1) % L;
  for (std::int64_t x = 0; x < L; ++x) {
    if (x == seam_bond) continue;
    const double df = logistic(u((x + 1) % L)) - logistic(u(x));
    r.y_star_f0 += (static_cast<double>(J[static_cast<std::size_t>(x)]) - mean_current) * df;
  }
  r.y_star_f0 /= rn;
  r.pairing = r.y_star_TG + r.lambda * r.y_star_f0;
  for (std::int64_t x = 0; x < L; ++x)
    r.direct += (static_cast<double>(J[static_cast<std::size_t>(x)]) - mean_current) / rn *
                G.values()[static_cast<std::size_t>(x)];
  r.direct /= nn;
  const double edge = std::max(std::abs(TG[static_cast<std::size_t>(seam)]), std::abs(TG[static_cast<std::size_t>(seam_bond)]));
  const double tail = std::abs(r.lambda) * (logistic(u(seam)) + 1.0 - logistic(u(seam_bond)));
  r.finite_volume_flag = edge > 1e-9 * std::max(1.0, tg_max) || tail > 1e-9;
  return r;
}

}  // namespace kpzlab
