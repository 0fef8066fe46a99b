#ifndef KPZLAB_FIELDS_HPP
#define KPZLAB_FIELDS_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kpzlab/configuration.hpp"
#include "kpzlab/dynamics.hpp"
#include "kpzlab/measure.hpp"

namespace kpzlab {

/// Test function G sampled at the sites of the ring. Site x stands for the
/// macroscopic position u = x/n for x < L/2 and (x - L)/n otherwise, so the
/// origin sits at site 0 and the seam of the ring at L/2.
class TestFunction {
 public:
  TestFunction(std::vector<double> samples, std::int64_t n);

  /// Sample G(u) at the centered positions of a ring of L sites.
  static TestFunction sample(const std::function<double(double)>& G, std::int64_t n, std::int64_t L);

  /// Parse "sin:m", "cos:m" (m-th Fourier mode of the ring), "gauss:s",
  /// "bump:w" (smooth bump of width w centered at 0) or "cutoff:l".
  static TestFunction parse(const std::string& spec, std::int64_t n, std::int64_t L);

  static double position(std::int64_t x, std::int64_t n, std::int64_t L);

  std::int64_t n() const { return n_; }
  std::int64_t L() const { return static_cast<std::int64_t>(g_.size()); }
  double operator[](std::int64_t x) const;
  const std::vector<double>& values() const { return g_; }
  /// n[G((x+1)/n) - G(x/n)]
  const std::vector<double>& grad() const { return grad_; }
  /// n^2[G((x+1)/n) + G((x-1)/n) - 2G(x/n)]
  const std::vector<double>& lap() const { return lap_; }
  /// (1/n) sum (grad G)^2
  double seminorm1_sq() const { return semi1_; }
  /// (1/n) sum G^2
  double l2_sq() const { return l2_; }
  /// (1/n) sum G
  double integral() const { return integral_; }

 private:
  std::int64_t n_;
  std::vector<double> g_;
  std::vector<double> grad_;
  std::vector<double> lap_;
  double semi1_ = 0.0;
  double l2_ = 0.0;
  double integral_ = 0.0;
};

/// H_0(u)(1 - u/l)^+ with H_0 the indicator of (0, inf).
double cutoff_profile(double u, double l);
/// (1 + e^{-u})^{-1}
double logistic(double u);

// ---------------------------------------------------------------------------
// Pointwise fields

/// n^{-1/2} sum_x (eta(x) - rho) G(x/n)
double eval_Y(const Configuration& eta, const TestFunction& G, double rho);

/// n (block density over sites x+1..x+eps n - rho)^2
double smoothed_square(const Configuration& eta, std::int64_t x, double eps, double rho, std::int64_t n);

/// Integer block length eps*n, rejecting non-integer or < 1.
std::int64_t block_length(double eps, std::int64_t n);

/// Everything the drift fields need from the model: the drift local function
/// f = a c (eta(1)-eta(0))^2 / 2, psi and its derivatives at rho, the
/// gradient witness h and the quadratic-variation density g_n.
struct DriftSetup {
  WindowFunction f;
  DriftMoments moments;
  WindowFunction h;
  WindowFunction g;
  double scale;  // n^{1/2 - theta}: 1 in the KPZ scaling
  double rho;
  std::int64_t n;
};

/// Throws when the model has no gradient witness or psi'(rho) != 0.
DriftSetup make_drift_setup(const Model& model);

/// scale * sum_x [tau_x f(eta) - psi(rho)] grad_x G
double drift_integrand(const Configuration& eta, const TestFunction& G, const DriftSetup& d);

/// (1/(2 sqrt n)) sum_x tau_x h(eta) lap_x G
double laplacian_integrand(const Configuration& eta, const TestFunction& G, const DriftSetup& d);

/// (1/n) sum_x tau_x g_n(eta) (grad_x G)^2
double quadratic_variation_integrand(const Configuration& eta, const TestFunction& G, const DriftSetup& d);

/// Psi(k, m/k) - psi(rho) for m = 0..k, times the drift scale.
std::vector<double> block_drift_table(const DriftSetup& d, std::int64_t k);

/// sum_{x in kZ} k Psi(k, eta^k(x)) H^k_x with H^k_x = (1/k) sum_{i=x+1}^{x+k} grad_i G.
double block_field_integrand(const Configuration& eta, const TestFunction& G, std::int64_t k, const DriftSetup& d);

/// (psi2/2) sum_{x in eps n Z} n(eta^{eps n}(x) - rho)^2 (G(x+eps) - G(x))
double quad_field_increment(const Configuration& eta, const TestFunction& G, double eps, double rho,
                            std::int64_t n, double psi2);

// ---------------------------------------------------------------------------
// Incremental observables for run_measured

std::unique_ptr<Observable> make_Y_observable(const TestFunction& G, double rho);
std::unique_ptr<Observable> make_I_observable(const TestFunction& G, const DriftSetup& d);
std::unique_ptr<Observable> make_A_observable(const TestFunction& G, const DriftSetup& d);
std::unique_ptr<Observable> make_QV_observable(const TestFunction& G, const DriftSetup& d);
std::unique_ptr<Observable> make_block_observable(const TestFunction& G, std::int64_t k, const DriftSetup& d);
std::unique_ptr<Observable> make_quad_observable(const TestFunction& G, double eps, const DriftSetup& d);
/// eta(x)
std::unique_ptr<Observable> make_site_observable(std::int64_t x, std::int64_t L);

/// Observables Y, I, A, QV for each test function, in that order.
struct MartingaleFields {
  ObservableList observables;
  std::size_t count = 0;  // number of test functions
  static constexpr std::size_t kPerG = 4;
};

MartingaleFields build_martingale_fields(const std::vector<TestFunction>& Gs, const DriftSetup& d);

/// Y, I, A, M, QV at every sample for one test function. M = Y - Y0 - I - A.
struct Decomposition {
  std::vector<double> Y, I, A, M, QV;
  /// Residual Y - Y0 - I - A - M at every sample, evaluated in the same order.
  double max_identity_defect() const;
  bool qv_nondecreasing() const;
};

/// `first` is the index of the Y observable of this test function.
Decomposition martingale_decompose(const FieldSeries& series, std::size_t first);

// ---------------------------------------------------------------------------
// Currents and heights

/// n^2 (p - q) E[c eta(0)(1 - eta(1))] t: the mean current through any bond.
double expected_current(const Model& model, double t);

/// n^{-1/2}(J_t(x) - E J_t(x)).
double theta_from_current(std::int64_t J, const Model& model, double t);

struct CurrentHeight {
  std::vector<std::int64_t> J;  // at the marked bonds
  double theta0;
};

CurrentHeight current_and_height(const SimState& state, const std::vector<std::int64_t>& marked, double t);

/// True when eta_t(x) - eta_0(x) = J(x-1) - J(x) at every site.
bool continuity_holds(const Configuration& eta0, const Configuration& eta_t, const std::vector<std::int64_t>& J);

/// Y_t(G) - Y_0(G)
double eval_Y_star(const Configuration& eta0, const Configuration& eta_t, const TestFunction& G);

struct PairingResult {
  double pairing;        // Y*(T G) + Lambda(G) Y*(f0)
  double y_star_TG;
  double lambda;         // (1/n) sum G
  double y_star_f0;      // current form of Y*(f0), seam bond excluded
  double direct;         // (1/n) sum_x theta*(x/n) G(x/n)
  bool finite_volume_flag;  // T G or f0 not negligible at the seam
};

/// Interface pairing of theta* = theta_t - theta_0 with G, via the integrated
/// test function T G = T_0 G - Lambda(G) f0 (T_0 is a discrete prefix sum
/// starting at the seam).
PairingResult interface_pairing(const Configuration& eta0, const Configuration& eta_t,
                                const std::vector<std::int64_t>& J, const TestFunction& G, double mean_current);

}  // namespace kpzlab

#endif  // KPZLAB_FIELDS_HPP
