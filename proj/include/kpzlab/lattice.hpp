#ifndef KPZLAB_LATTICE_HPP
#define KPZLAB_LATTICE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kpzlab/configuration.hpp"
#include "kpzlab/polynomial.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/window_function.hpp"

namespace kpzlab {

// ---------------------------------------------------------------------------
// Sampling

/// i.i.d. Bernoulli(rho) occupancies on a ring of L sites.
Configuration sample_grand_canonical(std::int64_t L, double rho, Philox& rng);
Configuration sample_grand_canonical(std::int64_t L, double rho, std::uint64_t seed);

/// Uniform configuration of k sites with exactly m particles.
Configuration sample_canonical(std::int64_t k, std::int64_t m, Philox& rng);
Configuration sample_canonical(std::int64_t k, std::int64_t m, std::uint64_t seed);

/// tau_x f(eta), reading coordinates periodically.
inline double eval_local(const WindowFunction& f, const Configuration& eta, std::int64_t x) {
  return f.eval(eta, x);
}

// ---------------------------------------------------------------------------
// Monomial calculus

struct Monomial {
  double coeff;
  std::vector<int> sites;  // sorted, subset of the window
};

/// f = sum coeff * prod_{x in sites} eta(x). Only nonzero terms are kept.
struct MonomialDecomposition {
  std::vector<Monomial> terms;

  /// Evaluate on a pattern of the window [lo, hi].
  double evaluate(int lo, std::uint32_t bits) const;

  /// Sum of the coefficients of all monomials of each degree; entry j is the
  /// total weight of degree-j monomials.
  std::vector<double> degree_weights() const;
};

/// Exact Moebius inversion over the subsets of the window.
MonomialDecomposition monomial_decompose(const WindowFunction& f);

/// rho -> E_{nu_rho}[f] as an exact polynomial.
Polynomial grand_canonical_polynomial(const WindowFunction& f);
double grand_canonical_mean(const WindowFunction& f, double rho);

/// Static compressibility of the Bernoulli measure.
inline double chi(double rho) { return rho * (1.0 - rho); }

// ---------------------------------------------------------------------------
// Rate models

/// Search for a local h with window [-r, r], r <= search_radius, such that
/// c(eta)(eta(1) - eta(0)) = tau_1 h(eta) - h(eta) on every pattern of the
/// joint window. The gauge is fixed by h(empty) = 0 and the smallest feasible
/// radius wins.
std::optional<WindowFunction> find_gradient_witness(const WindowFunction& c, int search_radius);

/// Largest absolute violation of the gradient identity for a candidate h.
double gradient_defect(const WindowFunction& c, const WindowFunction& h);

/// Speed-change rate c together with its ellipticity constant and an optional
/// gradient witness.
class RateModel {
 public:
  /// Validates c > 0 and c(eta) = c(eta^{0,1}). If `witness` is given it is
  /// checked against the gradient identity; pass `search_radius` >= 0 to look
  /// for one when absent.
  explicit RateModel(WindowFunction c, std::optional<WindowFunction> witness = std::nullopt,
                     int search_radius = -1, std::string name = "custom");

  const WindowFunction& c() const { return c_; }
  double epsilon0() const { return epsilon0_; }
  const std::optional<WindowFunction>& gradient_witness() const { return witness_; }
  bool is_gradient() const { return witness_.has_value(); }
  const std::string& name() const { return name_; }

  /// Value of c on a pattern read with all sites outside [lo_box, hi_box]
  /// empty. Used by the finite-box generator.
  double rate_in_box(const std::vector<std::uint8_t>& box, int bond_left) const;

 private:
  WindowFunction c_;
  double epsilon0_;
  std::optional<WindowFunction> witness_;
  std::string name_;
};

/// c == 1 (the weakly asymmetric simple exclusion process), h = eta(0).
RateModel wasep_rates();

/// c_b = 1 + b(eta(-1) + eta(2)), h_b = eta(0) + b[eta(-1)eta(0) + eta(0)eta(1) - eta(-1)eta(1)].
RateModel gradient_b_rates(double b);

/// Preset lookup: "wasep" or "gradient-b" (uses `b`).
RateModel preset_rates(const std::string& name, double b = 1.0);

/// c(eta)(eta(1)-eta(0))^2 / 2 times `a`: the drift local function.
WindowFunction drift_function(const RateModel& rates, double a);

/// {p eta(0)(1-eta(1)) + q eta(1)(1-eta(0))} c(eta).
WindowFunction quadratic_variation_density(const RateModel& rates, double p);

/// Hydrodynamic coefficients of a gradient rate model at density rho.
struct HydroCoefficients {
  double rho;
  double chi;
  double phi;       // E h
  double phi_p;     // d/drho E h
  double beta;      // chi * E c
  double beta_p;
  double beta_pp;
  double mean_c;
  double mean_forward_activity;  // E[c eta(0)(1 - eta(1))]
};

HydroCoefficients hydro_coefficients(const RateModel& rates, double rho);

/// Exact polynomial psi(rho) = E f and its first two derivatives at rho.
struct DriftMoments {
  double psi;
  double psi_p;
  double psi_pp;
};
DriftMoments drift_moments(const WindowFunction& f, double rho);

/// Density in (0, 1) at which the drift has no linear part, i.e. beta'(rho) = 0
/// (root closest to 1/2). 1/2 for c = 1; nullopt when beta' keeps its sign.
std::optional<double> zero_velocity_density(const RateModel& rates);

}  // namespace kpzlab

#endif  // KPZLAB_LATTICE_HPP
