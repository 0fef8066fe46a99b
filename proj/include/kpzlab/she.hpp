#ifndef KPZLAB_SHE_HPP
#define KPZLAB_SHE_HPP

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "kpzlab/lattice.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

/// Coefficients of dZ = (D/2) Delta Z dt + lambda Z dW, all derived from a
/// gradient rate model at density rho and asymmetry a.
struct SheCoefficients {
  double D = 1.0;        // phi'(rho)
  double lambda = 0.0;   // a beta''(rho) sqrt(chi/phi')
  double chi = 0.25;
  double kappa = 0.0;    // log Z = kappa h, kappa = -a beta''/phi'
  double a = 0.0;

  static SheCoefficients from_model(const RateModel& rates, double a, double rho);
};

/// Gaussian kernel of variance D t, periodized over a torus of length
/// `period` (no periodization when period <= 0).
double heat_kernel(double t, double x, double D, double period = 0.0);

struct SheField {
  std::vector<double> Z;
  double t = 0.0;
  double dx = 0.0;
  double length() const { return dx * static_cast<double>(Z.size()); }
};

enum class SheInit {
  TwoSidedWalk,    // h_0(center) = 0, independent increments to both sides
  PeriodicBridge,  // walk from index 0 with the endpoint mismatch removed linearly
};

/// Stationary initial data: h_0 with Gaussian increments of variance chi dx,
/// Z_0 = exp(kappa h_0).
SheField init_stationary(int M, double dx, const SheCoefficients& co, Philox& rng, SheInit mode);

/// Initial height profile used for `init_stationary` (exposed for tests).
std::vector<double> stationary_height(int M, double dx, double chi, Philox& rng, SheInit mode);

struct ColeHopf {
  std::vector<double> h;
  std::vector<double> Y;  // centered finite-difference gradient of h
};

ColeHopf cole_hopf(const SheField& field, const SheCoefficients& co);

/// Periodic-grid solver. The linear part is applied exactly in Fourier space
/// (multiplier exp(-D q^2 dt / 2)); the multiplicative noise is explicit (Ito).
class SheSolver {
 public:
  SheSolver(int M, double dx, SheCoefficients co);
  ~SheSolver();
  SheSolver(const SheSolver&) = delete;
  SheSolver& operator=(const SheSolver&) = delete;

  int size() const { return M_; }
  double dx() const { return dx_; }
  const SheCoefficients& coefficients() const { return co_; }

  /// In place: Z <- K_dt * Z.
  void heat(std::vector<double>& Z, double dt);

  /// One mild step of length dt: Z <- K_dt * Z + lambda Z xi sqrt(dt/dx).
  /// A nonpositive result is discarded and the step is redone as two halves,
  /// down to four levels of halving. Returns the number of halvings used;
  /// throws when positivity cannot be restored.
  int step_mild(SheField& field, double dt, Philox& rng);

  /// Additive-noise reference (Edwards-Wilkinson): h <- K_dt * h + sigma xi sqrt(dt/dx).
  void step_additive(std::vector<double>& h, double dt, double sigma, Philox& rng);

  /// Fourier coefficients of a real grid function (length M/2 + 1).
  std::vector<std::complex<double>> spectrum(const std::vector<double>& f);

 private:
  bool try_step(std::vector<double>& Z, double dt, Philox& rng);
  int step_recursive(std::vector<double>& Z, double dt, Philox& rng, int depth);

  int M_;
  double dx_;
  SheCoefficients co_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::vector<double> noise_;
};

}  // namespace kpzlab

#endif  // KPZLAB_SHE_HPP
