#ifndef KPZLAB_EXPERIMENTS_HPP
#define KPZLAB_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "kpzlab/she.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

// ---------------------------------------------------------------------------
// Stochastic heat equation checks

/// Deterministic run (lambda = 0) from a few Fourier modes; worst deviation of
/// any mode from exp(-D q^2 t / 2) times its initial coefficient, relative to
/// the largest initial coefficient.
struct HeatModeCheck {
  double max_error = 0.0;
  int steps = 0;
  double t = 0.0;
};
HeatModeCheck heat_mode_check(int M, double dx, double D, double dt, int steps);

/// E[spatial mean of Z_t] / spatial mean of (K_t * Z_0) over independent noise
/// paths from one fixed stationary Z_0.
struct ItoMeanCheck {
  double ratio = 0.0;
  double stderr_ = 0.0;
  double z = 0.0;
  std::int64_t replicas = 0;
};
ItoMeanCheck ito_mean_check(const SheCoefficients& co, int M, double dx, double dt, double t, std::int64_t replicas,
                            std::uint64_t seed, SheInit init = SheInit::PeriodicBridge);

/// Var[h_t(x+r) - h_t(x)] against r, averaged over base points and replicas;
/// `slope` is the least-squares slope over r in [r_min, 10 r_min].
struct StructureCheck {
  double t = 0.0;
  std::vector<double> r;
  std::vector<double> variance;
  double slope = 0.0;
};
std::vector<StructureCheck> structure_function_check(const SheCoefficients& co, int M, double dx, double dt,
                                                     const std::vector<double>& times, std::int64_t replicas,
                                                     int r_min_cells, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Second-order Boltzmann-Gibbs sweep

struct Bg2Config {
  std::vector<std::int64_t> ns{64, 128, 256};
  std::vector<double> epsilons{0.5, 0.25, 0.125, 0.0625};
  double T = 0.25;
  std::int64_t replicas = 100;
  std::int64_t ell = 2;
  double a = 1.0;
  std::string rates = "wasep";
  double b = 1.0;
  std::string test_function = "sin:1";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  double budget_events = 2e10;
};

struct Bg2Point {
  std::int64_t n = 0;
  double eps = 0.0;
  bool skipped = false;
  std::string note;
  double residual = 0.0;  // E[(A_T - Q_T)^2]
  double stderr_ = 0.0;
  double a_second_moment = 0.0;
  double g_norm = 0.0;  // |G|_{1,n}^2
};

struct Bg2Report {
  std::vector<Bg2Point> points;
  stats::TwoTermFit two_term;   // residual ~ c1 T eps + c2 T^2/(eps^2 n)
  stats::OneTermFit one_term;   // residual ~ C (T eps + T^2/(eps^2 n))
  bool decreasing_in_eps = true;     // on the eps > n^{-1/3} branch
  bool decreasing_above_floor = true;  // every halving above the 2l/n floor
  bool n_stable = true;
  std::vector<std::string> notes;
  std::uint64_t events = 0;
  nlohmann::json to_json() const;
};

/// Window floor: eps n must be at least twice the width of the drift window.
Bg2Report bg2_sweep(const Bg2Config& cfg);

// ---------------------------------------------------------------------------
// Particle system against the Cole-Hopf solution

struct CompareConfig {
  std::int64_t n = 256;
  std::int64_t ell = 4;
  double a = 1.0;
  std::vector<double> times{0.25, 0.5};
  std::int64_t particle_replicas = 200;
  std::int64_t she_replicas = 1000;
  int she_cells_per_unit = 256;  // M = ell * she_cells_per_unit
  double she_dt_over_dx = 0.04;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  double budget_events = 2e10;
};

struct CompareRow {
  double t = 0.0;
  double particle_var = 0.0, particle_se = 0.0;
  double she_var = 0.0, she_se = 0.0;
  double discrepancy = 0.0;  // |particle - she| / she
};

struct CompareReport {
  SheCoefficients coefficients;
  std::vector<CompareRow> rows;
  std::string reference;  // "cole-hopf" or "edwards-wilkinson" (a = 0)
  std::uint64_t events = 0;
  nlohmann::json to_json() const;
};

/// Var[theta_t(x)] of the particle system on a ring started from the uniform
/// configuration with L/2 particles, against Var[h_t(x) - h_0(x)] of the
/// stochastic heat equation on a torus of the same length started from a
/// Brownian bridge. Both are averaged over all positions. The model is c = 1
/// at rho = 1/2; for a = 0 the reference is the additive (Edwards-Wilkinson)
/// equation.
CompareReport compare_particle_vs_she(const CompareConfig& cfg);

/// Pooled variance over positions and replicas: values[r][x].
struct PooledVariance {
  double variance = 0.0;
  double stderr_ = 0.0;
};
PooledVariance pooled_variance(const std::vector<std::vector<double>>& values);

}  // namespace kpzlab

#endif  // KPZLAB_EXPERIMENTS_HPP
