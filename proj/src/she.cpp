#include "kpzlab/she.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace kpzlab {

namespace {
// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

SheCoefficients SheCoefficients::from_model(const RateModel& rates, double a, double rho) {
  const auto hc = hydro_coefficients(rates, rho);
  if (!(hc.phi_p > 0.0)) throw std::invalid_argument("SHE coefficients need a gradient model with phi'(rho) > 0");
  SheCoefficients co;
  co.D = hc.phi_p;
  co.chi = hc.chi;
  co.a = a;
  co.lambda = a * hc.beta_pp * std::sqrt(hc.chi / hc.phi_p);
  co.kappa = -a * hc.beta_pp / hc.phi_p;
  return co;
}

double heat_kernel(double t, double x, double D, double period) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be positive");
  const double var = D * t;
  auto g = [var](double y) { return std::exp(-y * y / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var); };
  if (period <= 0.0) return g(x);
  x = std::remainder(x, period);
  double s = g(x);
  const double sd = std::sqrt(var);
  for (int k = 1;; ++k) {
    const double add = g(x + k * period) + g(x - k * period);
    s += add;
    if (k * period > x + 12.0 * sd && add < 1e-300) break;
    if (k > 100000) break;
  }
  return s;
}

std::vector<double> stationary_height(int M, double dx, double chi, Philox& rng, SheInit mode) {
  if (M < 4) throw std::invalid_argument("stationary_height: need M >= 4");
  const double sd = std::sqrt(chi * dx);
  std::vector<double> h(static_cast<std::size_t>(M), 0.0);
  if (mode == SheInit::TwoSidedWalk) {
    const int c = M / 2;
    for (int i = c + 1; i < M; ++i) h[static_cast<std::size_t>(i)] = h[static_cast<std::size_t>(i - 1)] + sd * rng.normal();
    for (int i = c - 1; i >= 0; --i) h[static_cast<std::size_t>(i)] = h[static_cast<std::size_t>(i + 1)] + sd * rng.normal();
  } else {
    std::vector<double> w(static_cast<std::size_t>(M) + 1, 0.0);
    for (int i = 1; i <= M; ++i) w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i - 1)] + sd * rng.normal();
    const double end = w[static_cast<std::size_t>(M)];
    for (int i = 0; i < M; ++i)
      h[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] - end * static_cast<double>(i) / M;
  }
  return h;
}

SheField init_stationary(int M, double dx, const SheCoefficients& co, Philox& rng, SheInit mode) {
  const auto h = stationary_height(M, dx, co.chi, rng, mode);
  SheField f;
  f.dx = dx;
  f.Z.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) f.Z[i] = std::exp(co.kappa * h[i]);
  return f;
}

ColeHopf cole_hopf(const SheField& field, const SheCoefficients& co) {
  if (co.kappa == 0.0) throw std::invalid_argument("cole_hopf: degenerate transform (a = 0)");
  ColeHopf ch;
  const std::size_t M = field.Z.size();
  ch.h.resize(M);
  ch.Y.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    if (!(field.Z[i] > 0.0)) throw std::invalid_argument("cole_hopf: Z must be strictly positive");
    ch.h[i] = std::log(field.Z[i]) / co.kappa;
  }
  for (std::size_t i = 0; i < M; ++i)
    ch.Y[i] = (ch.h[(i + 1) % M] - ch.h[(i + M - 1) % M]) / (2.0 * field.dx);
  return ch;
}

// ---------------------------------------------------------------------------

struct SheSolver::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> q2;  // squared wave numbers per retained mode
};

SheSolver::SheSolver(int M, double dx, SheCoefficients co) : M_(M), dx_(dx), co_(co), plans_(std::make_unique<Plans>()) {
  if (M_ < 4 || M_ % 2 != 0) throw std::invalid_argument("SheSolver: M must be even and >= 4");
  if (!(dx_ > 0.0)) throw std::invalid_argument("SheSolver: dx must be positive");
  plans_->real = fftw_alloc_real(static_cast<std::size_t>(M_));
  plans_->spec = fftw_alloc_complex(static_cast<std::size_t>(M_ / 2 + 1));
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans_->forward = fftw_plan_dft_r2c_1d(M_, plans_->real, plans_->spec, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_c2r_1d(M_, plans_->spec, plans_->real, FFTW_ESTIMATE);
  }
  const double length = dx_ * M_;
  plans_->q2.resize(static_cast<std::size_t>(M_ / 2 + 1));
  for (int k = 0; k <= M_ / 2; ++k) {
    const double q = 2.0 * std::numbers::pi * k / length;
    plans_->q2[static_cast<std::size_t>(k)] = q * q;
  }
  noise_.resize(static_cast<std::size_t>(M_));
}

SheSolver::~SheSolver() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
  fftw_free(plans_->real);
  fftw_free(plans_->spec);
}

std::vector<std::complex<double>> SheSolver::spectrum(const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != M_) throw std::invalid_argument("SheSolver::spectrum: size mismatch");
  std::memcpy(plans_->real, f.data(), sizeof(double) * f.size());
  fftw_execute(plans_->forward);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(M_ / 2 + 1));
  for (int k = 0; k <= M_ / 2; ++k) out[static_cast<std::size_t>(k)] = {plans_->spec[k][0], plans_->spec[k][1]};
  return out;
}

void SheSolver::heat(std::vector<double>& Z, double dt) {
  if (static_cast<int>(Z.size()) != M_) throw std::invalid_argument("SheSolver::heat: size mismatch");
  std::memcpy(plans_->real, Z.data(), sizeof(double) * Z.size());
  fftw_execute(plans_->forward);
  const double inv = 1.0 / M_;
  for (int k = 0; k <= M_ / 2; ++k) {
    const double mult = std::exp(-0.5 * co_.D * plans_->q2[static_cast<std::size_t>(k)] * dt) * inv;
    plans_->spec[k][0] *= mult;
    plans_->spec[k][1] *= mult;
  }
  fftw_execute(plans_->backward);
  std::memcpy(Z.data(), plans_->real, sizeof(double) * Z.size());
}

bool SheSolver::try_step(std::vector<double>& Z, double dt, Philox& rng) {
  const double amp = co_.lambda * std::sqrt(dt / dx_);
  for (int i = 0; i < M_; ++i) noise_[static_cast<std::size_t>(i)] = amp * rng.normal();
  std::vector<double> next(Z);
  heat(next, dt);
  for (int i = 0; i < M_; ++i) {
    next[static_cast<std::size_t>(i)] += Z[static_cast<std::size_t>(i)] * noise_[static_cast<std::size_t>(i)];
    if (!(next[static_cast<std::size_t>(i)] > 0.0)) return false;
  }
  Z.swap(next);
  return true;
}

int SheSolver::step_recursive(std::vector<double>& Z, double dt, Philox& rng, int depth) {
  if (try_step(Z, dt, rng)) return 0;
  if (depth >= 4) throw std::runtime_error("SheSolver: Z lost positivity after four halvings of dt");
  int used = 1;
  used += step_recursive(Z, dt / 2, rng, depth + 1);
  used += step_recursive(Z, dt / 2, rng, depth + 1);
  return used;
}

int SheSolver::step_mild(SheField& field, double dt, Philox& rng) {
  if (static_cast<int>(field.Z.size()) != M_) throw std::invalid_argument("step_mild: size mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("step_mild: dt must be positive");
  if (dt > dx_) throw std::invalid_argument("step_mild: dt must not exceed dx (noise resolution)");
  const int used = step_recursive(field.Z, dt, rng, 0);
  field.t += dt;
  return used;
}

void SheSolver::step_additive(std::vector<double>& h, double dt, double sigma, Philox& rng) {
  if (dt > dx_) throw std::invalid_argument("step_additive: dt must not exceed dx (noise resolution)");
  heat(h, dt);
  const double amp = sigma * std::sqrt(dt / dx_);
  for (auto& v : h) v += amp * rng.normal();
}

}  // namespace kpzlab
