// Acceptance harness: one PASS/FAIL line per criterion.
//
//   acceptance [--criterion N]... [--jobs J] [--seed S] [--json-dir DIR]
//
// Thresholds below are the published gates; sample sizes are chosen so that
// the statistical error sits well inside them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kpzlab/ensembles.hpp"
#include "kpzlab/experiments.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/output.hpp"
#include "kpzlab/plan.hpp"
#include "kpzlab/she.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;
using nlohmann::json;

namespace {

struct Context {
  unsigned jobs = 1;
  std::uint64_t seed = 20240601;
};

struct Outcome {
  bool pass = false;
  std::string summary;
  json detail = json::object();
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Params make_params(std::int64_t n, std::int64_t ell, double a, double rho) {
  Params p;
  p.n = n;
  p.ell = ell;
  p.a = a;
  p.rho = rho;
  return p;
}

ExperimentPlan base_plan(std::int64_t n, std::int64_t ell, double T, double sample_dt, std::int64_t replicas,
                         std::uint64_t seed) {
  ExperimentPlan plan;
  ModelPoint mp;
  mp.params = make_params(n, ell, 1.0, 0.5);
  plan.points = {mp};
  plan.T = T;
  plan.sample_dt = sample_dt;
  plan.replicas = replicas;
  plan.master_seed = seed;
  plan.write_replicas = false;
  return plan;
}

std::size_t column(const std::vector<std::string>& cols, const std::string& name) {
  const auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end()) throw std::logic_error("no column " + name);
  return static_cast<std::size_t>(it - cols.begin());
}

// ---------------------------------------------------------------------------
// 1. Exact canonical expectations against enumeration.

Rational enumerate_block(const WindowFunction& f, int k, int m) {
  Rational total = 0;
  std::int64_t count = 0;
  for (std::uint32_t s = 0; s < (1u << k); ++s) {
    if (__builtin_popcount(s) != m) continue;
    // Canonical law is exchangeable: place the window at the first sites.
    std::uint32_t pat = 0;
    for (int j = 0; j < f.width(); ++j) pat |= ((s >> j) & 1u) << j;
    total += Rational(f.value(pat));
    ++count;
  }
  return total / count;
}

Outcome criterion1(const Context& ctx) {
  Philox g(ctx.seed, 1);
  int functions = 0, sectors = 0, mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int width = 1 + static_cast<int>(g.uniform() * 4);
    const int lo = -1 + static_cast<int>(g.uniform() * 3);
    std::vector<double> t(1u << width);
    const double scale = trial % 2 ? 1.0 : 1.0 / 16;  // small integers or dyadics
    for (auto& v : t) v = (std::floor(g.uniform() * 41) - 20) * scale;
    const WindowFunction f(lo, lo + width - 1, t);
    ++functions;
    for (int k = width; k <= 10; ++k)
      for (int m = 0; m <= k; ++m) {
        ++sectors;
        if (psi_canonical_exact(f, k, m) != enumerate_block(f, k, m)) ++mismatches;
      }
  }
  Outcome o;
  o.pass = mismatches == 0;
  o.summary = std::to_string(functions) + " functions, " + std::to_string(sectors) + " sectors, " +
              std::to_string(mismatches) + " mismatches";
  o.detail = {{"functions", functions}, {"sectors", sectors}, {"mismatches", mismatches}};
  return o;
}

// ---------------------------------------------------------------------------
// 2. k^2 times the first-order equivalence residual for eta(1)eta(2)eta(3).

Outcome criterion2(const Context&) {
  const auto f = WindowFunction::tabulate(1, 3, [](const PatternView& e) { return 1.0 * e(1) * e(2) * e(3); });
  std::vector<double> s;
  for (std::int64_t k = 4; k <= 512; ++k) s.push_back(static_cast<double>(k * k) * prop8_residual(f, k));
  auto at = [&](std::int64_t k) { return s[static_cast<std::size_t>(k - 4)]; };
  const double plateau = at(512);
  double worst_rel = 0, sup = 0, sup_mid = 0, sup_top = 0;
  for (std::int64_t k = 4; k <= 512; ++k) {
    sup = std::max(sup, at(k));
    if (k >= 128) worst_rel = std::max(worst_rel, std::abs(at(k) - plateau) / plateau);
    if (k >= 128 && k < 256) sup_mid = std::max(sup_mid, at(k));
    if (k >= 256) sup_top = std::max(sup_top, at(k));
  }
  Outcome o;
  const bool bounded = std::isfinite(sup) && sup_top <= 1.1 * sup_mid;
  o.pass = bounded && worst_rel <= 0.10;
  o.summary = "plateau k^2 r = " + fmt(plateau) + ", max deviation for k >= 128 = " + fmt(100 * worst_rel, 3) +
              "% (gate 10%), sup over k = " + fmt(sup);
  o.detail = {{"plateau", plateau}, {"max_relative_deviation", worst_rel}, {"sup", sup}, {"k4", at(4)},
              {"k128", at(128)}, {"k256", at(256)}};
  return o;
}

// ---------------------------------------------------------------------------
// 3. k^3 times the second-moment residual of the recentered exclusion drift.

Outcome criterion3(const Context&) {
  const auto raw = drift_function(wasep_rates(), 1.0);
  const auto f = raw - drift_moments(raw, 0.5).psi;
  std::map<std::int64_t, double> q;
  for (std::int64_t k = 8; k <= 4096; ++k) {
    const double kk = static_cast<double>(k);
    q[k] = kk * kk * kk * prop9_moments(f, 0.5, k, 1).residual_moment2;
  }
  double sup = 0, sup_mid = 0, sup_top = 0;
  for (const auto& [k, v] : q) {
    sup = std::max(sup, v);
    if (k >= 1024 && k < 2048) sup_mid = std::max(sup_mid, v);
    if (k >= 2048) sup_top = std::max(sup_top, v);
  }
  Outcome o;
  o.pass = std::isfinite(sup) && sup_top <= 1.1 * sup_mid;
  o.summary = "sup_k k^3 R(k) = " + fmt(sup) + ", last doubling " + fmt(sup_top) + " vs " + fmt(sup_mid) +
              " (no growth allowed beyond 10%)";
  o.detail = {{"sup", sup}, {"sup_1024_2048", sup_mid}, {"sup_2048_4096", sup_top}, {"k8", q[8]}, {"k4096", q[4096]}};
  return o;
}

// ---------------------------------------------------------------------------
// 4. Diffusive scaling of the sector gaps and the ellipticity sandwich.

Outcome criterion4(const Context&) {
  const RateModel ssep = wasep_rates();
  const RateModel cb = gradient_b_rates(1.0);
  const double cmin = cb.c().min_value(), cmax = cb.c().max_value();
  double lo[2] = {INFINITY, INFINITY}, hi[2] = {0, 0};
  int sectors = 0, sandwich_fail = 0;
  for (int k = 4; k <= 12; ++k)
    for (int m = 1; m < k; ++m) {
      const double g0 = spectral_gap(k, m, ssep), g1 = spectral_gap(k, m, cb);
      const double k2 = static_cast<double>(k * k);
      lo[0] = std::min(lo[0], g0 * k2), hi[0] = std::max(hi[0], g0 * k2);
      lo[1] = std::min(lo[1], g1 * k2), hi[1] = std::max(hi[1], g1 * k2);
      if (g1 < cmin * g0 * (1 - 1e-9) || g1 > cmax * g0 * (1 + 1e-9)) ++sandwich_fail;
      ++sectors;
    }
  Outcome o;
  const double r0 = hi[0] / lo[0], r1 = hi[1] / lo[1];
  o.pass = r0 <= 4 && r1 <= 4 && sandwich_fail == 0;
  o.summary = "gap k^2 in [" + fmt(lo[0]) + ", " + fmt(hi[0]) + "] (ratio " + fmt(r0, 3) + ") for c = 1, [" + fmt(lo[1]) +
              ", " + fmt(hi[1]) + "] (ratio " + fmt(r1, 3) + ") for c_b; sandwich violations " +
              std::to_string(sandwich_fail) + " of " + std::to_string(sectors);
  o.detail = {{"wasep", {lo[0], hi[0]}}, {"gradient_b", {lo[1], hi[1]}}, {"sandwich_violations", sandwich_fail},
              {"sectors", sectors}, {"c_range", {cmin, cmax}}};
  return o;
}

// ---------------------------------------------------------------------------
// 5. Exact identities on every replica of a smoke plan.

Outcome criterion5(const Context& ctx) {
  auto plan = base_plan(64, 4, 0.5, 0.05, 50, ctx.seed);
  plan.test_functions = {"sin:1", "gauss:0.25", "bump:1"};
  plan.marked_bonds = {0, 64, 128, 255};
  plan.block_sizes = {8};
  plan.epsilons = {0.25};
  plan.cutoffs = {1};
  RunOptions ro;
  ro.jobs = ctx.jobs;
  const auto res = run_plan(plan, ro);
  double defect = 0;
  int broken = 0, nonmono = 0;
  for (const auto& r : res.points[0].replicas) {
    defect = std::max(defect, r.identity_defect);
    broken += !r.continuity;
    nonmono += !r.qv_monotone;
  }
  Outcome o;
  o.pass = defect == 0.0 && broken == 0 && nonmono == 0;
  o.summary = "50 replicas x 3 test functions x 11 samples: max |Y - Y0 - I - A - M| = " + fmt(defect) +
              ", continuity failures " + std::to_string(broken) + ", QV decreases " + std::to_string(nonmono);
  o.detail = {{"identity_defect_max", defect}, {"continuity_failures", broken}, {"qv_decreases", nonmono},
              {"events", res.total_events}};
  return o;
}

// ---------------------------------------------------------------------------
// 6. Bernoulli product measure is preserved.

Outcome criterion6(const Context& ctx) {
  const std::int64_t n = 128, ell = 1, L = n * ell, R = 200;
  const std::vector<double> times{0.5, 1.0};
  const int max_lag = 3;
  const std::vector<std::pair<std::string, RateModel>> models{{"wasep", wasep_rates()}, {"gradient-b", gradient_b_rates(1.0)}};
  std::vector<double> zs;
  json detail = json::object();
  std::uint64_t events = 0;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const Model model(make_params(n, ell, 1.0, 0.5), models[mi].second);
    // occ[time][replica] = configuration
    std::vector<std::vector<Configuration>> occ(times.size(), std::vector<Configuration>(R));
    std::vector<std::uint64_t> ev(R);
    parallel_for(R, ctx.jobs, [&](std::size_t r) {
      const auto stream = derive_stream(100 + mi, r);
      Philox init(ctx.seed, stream);
      SimState st(model, sample_grand_canonical(L, 0.5, init), ctx.seed, splitmix64(stream));
      ObservableList none;
      MeasureOptions mo;
      mo.sample_times = times;
      mo.on_sample = [&](const SimState& s, std::size_t i, double) { occ[i][r] = s.eta(); };
      ev[r] = run_measured(st, none, times.back(), mo).events;
    });
    for (auto e : ev) events += e;
    double worst = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double rR = static_cast<double>(R);
      for (std::int64_t x = 0; x < L; ++x) {
        double s1 = 0;
        for (std::int64_t r = 0; r < R; ++r) s1 += occ[i][r][x];
        zs.push_back((s1 / rR - 0.5) / std::sqrt(0.25 / rR));
        worst = std::max(worst, std::abs(zs.back()));
        for (int d = 1; d <= max_lag; ++d) {
          double s2 = 0;
          for (std::int64_t r = 0; r < R; ++r) s2 += (occ[i][r][x] - 0.5) * (occ[i][r][x + d] - 0.5);
          zs.push_back((s2 / rR) / std::sqrt(1.0 / 16 / rR));
          worst = std::max(worst, std::abs(zs.back()));
        }
      }
      // Pooled over sites: products at different sites are uncorrelated under the product measure.
      for (int d = 0; d <= max_lag; ++d) {
        double s = 0;
        for (std::int64_t r = 0; r < R; ++r)
          for (std::int64_t x = 0; x < L; ++x)
            s += d == 0 ? occ[i][r][x] - 0.5 : (occ[i][r][x] - 0.5) * (occ[i][r][x + d] - 0.5);
        const double cnt = rR * static_cast<double>(L);
        zs.push_back((s / cnt) / std::sqrt((d == 0 ? 0.25 : 1.0 / 16) / cnt));
        worst = std::max(worst, std::abs(zs.back()));
      }
    }
    detail[models[mi].first] = {{"max_abs_z", worst}};
  }
  const double thr = stats::bonferroni_z(zs.size());
  double worst = 0;
  for (double z : zs) worst = std::max(worst, std::abs(z));
  Outcome o;
  o.pass = worst <= thr;
  o.summary = std::to_string(zs.size()) + " one- and two-point statistics, max |z| = " + fmt(worst, 3) +
              " (family-wise 3 sigma: |z| <= " + fmt(thr, 3) + ")";
  detail["tests"] = zs.size();
  detail["threshold"] = thr;
  detail["events"] = events;
  o.detail = detail;
  return o;
}

// ---------------------------------------------------------------------------
// 7. Variance of the martingale against chi phi' t |G|^2.

Outcome criterion7(const Context& ctx) {
  const std::int64_t R = 1500;
  auto plan = base_plan(128, 1, 1.0, 0.5, R, ctx.seed);
  plan.test_functions = {"sin:1"};
  RunOptions ro;
  ro.jobs = ctx.jobs;
  const auto res = run_plan(plan, ro);
  const auto& pr = res.points[0];
  const auto mcol = column(pr.columns, "M_g0"), qcol = column(pr.columns, "QV_g0");
  std::vector<double> M, QV;
  for (const auto& r : pr.replicas) {
    M.push_back(r.rows.back()[mcol]);
    QV.push_back(r.rows.back()[qcol]);
  }
  const auto h = hydro_coefficients(wasep_rates(), 0.5);
  const auto G = TestFunction::parse("sin:1", 128, 128);
  const double target = h.chi * h.phi_p * plan.T * G.seminorm1_sq();
  const double ratio = stats::variance(M) / target;
  const double se = stats::variance_standard_error(M) / target;
  const double qv_ratio = stats::mean(QV) / target;
  Outcome o;
  o.pass = ratio >= 0.9 && ratio <= 1.1;
  o.summary = "Var M_1 / (chi phi' t |G|^2) = " + fmt(ratio) + " +- " + fmt(se, 2) + " over " + std::to_string(R) +
              " replicas (gate [0.9, 1.1]); E QV / target = " + fmt(qv_ratio, 5);
  o.detail = {{"ratio", ratio}, {"stderr", se}, {"qv_ratio", qv_ratio}, {"target", target}, {"replicas", R},
              {"events", res.total_events}};
  return o;
}

// ---------------------------------------------------------------------------
// 8. Increments of the drift field scale like |t - s|^{3/2}.

Outcome criterion8(const Context& ctx) {
  const std::int64_t R = 100;
  auto plan = base_plan(128, 2, 1.0, 0.01, R, ctx.seed);
  plan.test_functions = {"sin:1"};
  RunOptions ro;
  ro.jobs = ctx.jobs;
  const auto res = run_plan(plan, ro);
  const auto& pr = res.points[0];
  const auto acol = column(pr.columns, "A_g0");
  const std::vector<int> lags{1, 2, 3, 4, 6, 8, 11, 16, 23, 32, 40, 50};
  std::vector<double> delta, moment, sigma;
  for (int lag : lags) {
    std::vector<double> per_replica;
    for (const auto& r : pr.replicas) {
      double acc = 0;
      std::size_t cnt = 0;
      for (std::size_t s = 0; s + static_cast<std::size_t>(lag) < r.rows.size(); ++s) {
        const double d = r.rows[s + static_cast<std::size_t>(lag)][acol] - r.rows[s][acol];
        acc += d * d;
        ++cnt;
      }
      per_replica.push_back(acc / static_cast<double>(cnt));
    }
    delta.push_back(0.01 * lag);
    moment.push_back(stats::mean(per_replica));
    sigma.push_back(stats::standard_error(per_replica));
  }
  const auto fit = stats::scaling_exponent(delta, moment, sigma);
  Outcome o;
  o.pass = fit.slope >= 1.3 && fit.slope <= 1.7;
  o.summary = "slope of E[(A_t - A_s)^2] over |t-s| in [0.01, 0.5] = " + fmt(fit.slope) + " +- " +
              fmt(fit.slope_stderr, 2) + " (gate [1.3, 1.7]), R^2 = " + fmt(fit.r2, 4);
  o.detail = {{"slope", fit.slope}, {"slope_stderr", fit.slope_stderr}, {"r2", fit.r2}, {"lags", delta},
              {"moments", moment}, {"stderr", sigma}, {"events", res.total_events}};
  return o;
}

// ---------------------------------------------------------------------------
// 9. Second-order Boltzmann-Gibbs sweep.

Outcome criterion9(const Context& ctx) {
  Bg2Config cfg;
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.budget_events = 1e11;
  const auto rep = bg2_sweep(cfg);
  Outcome o;
  o.pass = rep.two_term.r2 >= 0.9 && rep.decreasing_in_eps && rep.n_stable;
  o.summary = "two-term fit R^2 = " + fmt(rep.two_term.r2, 3) + " (gate 0.9), decreasing in eps: " +
              (rep.decreasing_in_eps ? "yes" : "no") +
              " on eps > n^{-1/3} (" + (rep.decreasing_above_floor ? "also" : "not") + " everywhere above the floor), n-stable: " + (rep.n_stable ? "yes" : "no") +
              "; single-constant fit R^2 = " + fmt(rep.one_term.r2, 3);
  o.detail = rep.to_json();
  return o;
}

// ---------------------------------------------------------------------------
// 10. Block drift fields: Var[A^{2k} - A^k] grows linearly in k.

Outcome criterion10(const Context& ctx) {
  const std::int64_t R = 100;
  auto plan = base_plan(256, 2, 0.5, 0.5, R, ctx.seed);
  plan.test_functions = {"sin:1"};
  plan.block_sizes = {8, 16, 32, 64, 128, 256};
  RunOptions ro;
  ro.jobs = ctx.jobs;
  ro.budget_events = 1e11;
  const auto res = run_plan(plan, ro);
  const auto& pr = res.points[0];
  std::vector<double> ks, var, se;
  for (std::int64_t k = 8; k <= 128; k *= 2) {
    const auto c1 = column(pr.columns, "B" + std::to_string(k) + "_g0");
    const auto c2 = column(pr.columns, "B" + std::to_string(2 * k) + "_g0");
    std::vector<double> d;
    for (const auto& r : pr.replicas) d.push_back(r.rows.back()[c2] - r.rows.back()[c1]);
    ks.push_back(static_cast<double>(k));
    var.push_back(stats::variance(d));
    se.push_back(stats::variance_standard_error(d));
  }
  const auto fit = stats::scaling_exponent(ks, var, se);
  Outcome o;
  o.pass = std::abs(fit.slope - 1.0) <= 0.3;
  o.summary = "slope of Var[A^{2k} - A^k] in k over 8..128 = " + fmt(fit.slope) + " +- " + fmt(fit.slope_stderr, 2) +
              " (gate 1.0 +- 0.3)";
  o.detail = {{"slope", fit.slope}, {"slope_stderr", fit.slope_stderr}, {"k", ks}, {"variance", var}, {"stderr", se},
              {"events", res.total_events}};
  return o;
}

// ---------------------------------------------------------------------------
// 11. theta_t(0) - Y*_t(G_l) has second moment of order 1/l.

Outcome criterion11(const Context& ctx) {
  const std::int64_t n = 128, ell = 96, L = n * ell, R = 40;
  const double t = 0.5;
  const std::vector<std::int64_t> ls{4, 8, 16, 32, 64};
  const Model model(make_params(n, ell, 1.0, 0.5), wasep_rates());
  std::vector<std::vector<double>> per_replica(ls.size(), std::vector<double>(R));
  std::vector<double> identity_gap(R, 0.0);
  std::vector<std::uint64_t> ev(R);
  parallel_for(R, ctx.jobs, [&](std::size_t r) {
    const auto stream = derive_stream(200, r);
    Philox init(ctx.seed, stream);
    const auto eta0 = sample_grand_canonical(L, 0.5, init);
    SimState st(model, eta0, ctx.seed, splitmix64(stream));
    std::vector<double> theta(static_cast<std::size_t>(L));
    Configuration eta_t;
    ObservableList none;
    MeasureOptions mo;
    mo.sample_times = {t};
    mo.on_sample = [&](const SimState& s, std::size_t, double) {
      for (std::int64_t x = 0; x < L; ++x) theta[static_cast<std::size_t>(x)] = theta_from_current(s.current(x), model, t);
      eta_t = s.eta();
    };
    ev[r] = run_measured(st, none, t, mo).events;
    std::vector<double> prefix(static_cast<std::size_t>(2 * L + 1), 0.0);
    for (std::int64_t i = 0; i < 2 * L; ++i)
      prefix[static_cast<std::size_t>(i + 1)] = prefix[static_cast<std::size_t>(i)] + theta[static_cast<std::size_t>(i % L)];
    for (std::size_t li = 0; li < ls.size(); ++li) {
      const std::int64_t w = ls[li] * n;
      // Explicit test function G_l(x/n) = (1 - x/(n l)) on sites 1..n l - 1, zero elsewhere.
      std::vector<double> samples(static_cast<std::size_t>(L), 0.0);
      for (std::int64_t x = 1; x < w; ++x) samples[static_cast<std::size_t>(x)] = 1.0 - static_cast<double>(x) / static_cast<double>(w);
      const TestFunction Gl(samples, n);
      const double direct = theta[0] - eval_Y_star(eta0, eta_t, Gl);
      const double window = prefix[static_cast<std::size_t>(w)] / static_cast<double>(w);
      identity_gap[r] = std::max(identity_gap[r], std::abs(direct - window));
      // Translation invariance: average over every base point.
      double acc = 0;
      for (std::int64_t x0 = 0; x0 < L; ++x0) {
        const double m = (prefix[static_cast<std::size_t>(x0 + w)] - prefix[static_cast<std::size_t>(x0)]) / static_cast<double>(w);
        acc += m * m;
      }
      per_replica[li][r] = acc / static_cast<double>(L);
    }
  });
  std::vector<double> scaled, se;
  for (std::size_t li = 0; li < ls.size(); ++li) {
    scaled.push_back(static_cast<double>(ls[li]) * stats::mean(per_replica[li]));
    se.push_back(static_cast<double>(ls[li]) * stats::standard_error(per_replica[li]));
  }
  const double gap = *std::max_element(identity_gap.begin(), identity_gap.end());
  const double ratio = *std::max_element(scaled.begin(), scaled.end()) / *std::min_element(scaled.begin(), scaled.end());
  std::uint64_t events = 0;
  for (auto e : ev) events += e;
  Outcome o;
  o.pass = ratio <= 3.0 && gap < 1e-9;
  std::string vals;
  for (std::size_t li = 0; li < ls.size(); ++li) vals += (li ? ", " : "") + fmt(scaled[li], 3);
  o.summary = "l E[(theta(0) - Y*(G_l))^2] for l = 4..64: " + vals + "; max/min = " + fmt(ratio, 3) +
              " (gate 3); pairing identity gap " + fmt(gap, 2);
  o.detail = {{"l", ls}, {"scaled_moment", scaled}, {"stderr", se}, {"max_over_min", ratio}, {"identity_gap", gap},
              {"ring_length", ell}, {"events", events}};
  return o;
}

// ---------------------------------------------------------------------------
// 12. Hoelder regularity of t -> Y_t(G).

Outcome criterion12(const Context& ctx) {
  const std::int64_t R = 16;
  const double dt = 1.0 / 2048;
  auto plan = base_plan(256, 1, 1.0, dt, R, ctx.seed);
  plan.test_functions = {"sin:1"};
  RunOptions ro;
  ro.jobs = ctx.jobs;
  const auto res = run_plan(plan, ro);
  const auto& pr = res.points[0];
  const auto ycol = column(pr.columns, "Y_g0");
  std::vector<std::vector<double>> paths;
  for (const auto& r : pr.replicas) {
    std::vector<double> p;
    for (const auto& row : r.rows) p.push_back(row[ycol]);
    paths.push_back(std::move(p));
  }
  const auto est = stats::holder_estimate(paths, dt);
  // Estimator check on Brownian paths of the same length.
  Philox g(ctx.seed, 12);
  std::vector<std::vector<double>> bm(R, std::vector<double>(paths.front().size(), 0.0));
  for (auto& p : bm)
    for (std::size_t i = 1; i < p.size(); ++i) p[i] = p[i - 1] + std::sqrt(dt) * g.normal();
  const auto bm_est = stats::holder_estimate(bm, dt);
  const bool estimator_ok = std::abs(bm_est.gamma - 0.5) <= 0.05;
  Outcome o;
  o.pass = estimator_ok && est.gamma >= 0.15 && est.gamma <= 0.35;
  o.summary = "gamma(Y) = " + fmt(est.gamma, 3) + " (gate [0.15, 0.35]); estimator on Brownian paths = " +
              fmt(bm_est.gamma, 3) + " (gate 0.5 +- 0.05)";
  o.detail = {{"gamma", est.gamma}, {"slope_stderr", est.fit.slope_stderr}, {"lags", est.lags},
              {"structure", est.structure}, {"brownian_gamma", bm_est.gamma}, {"events", res.total_events}};
  return o;
}

// ---------------------------------------------------------------------------
// 13. Stochastic heat equation solver checks.

Outcome criterion13(const Context& ctx) {
  const auto co = SheCoefficients::from_model(wasep_rates(), 1.0, 0.5);
  const double dx = 1.0 / 256, dt = 0.04 * dx;
  const auto heat = heat_mode_check(4096, dx, co.D, dt, 1000);
  const auto ito = ito_mean_check(co, 1024, dx, dt, 0.05, 400, ctx.seed);
  const auto sf = structure_function_check(co, 4096, dx, dt, {0.0, 0.25, 0.5}, 50, 4, ctx.seed);
  double worst = 0;
  std::string slopes;
  json sfj = json::array();
  for (const auto& s : sf) {
    worst = std::max(worst, std::abs(s.slope / co.chi - 1));
    slopes += (slopes.empty() ? "" : ", ") + fmt(s.slope / co.chi, 3);
    sfj.push_back({{"t", s.t}, {"slope", s.slope}, {"r", s.r}, {"variance", s.variance}});
  }
  Outcome o;
  o.pass = heat.max_error <= 1e-10 && std::abs(ito.z) <= 3.0 && worst <= 0.15;
  o.summary = "heat-mode error " + fmt(heat.max_error, 2) + " (gate 1e-10); Ito mean ratio " + fmt(ito.ratio, 4) +
              ", z = " + fmt(ito.z, 2) + " (gate 3); structure slope / chi at t = 0, 0.25, 0.5: " + slopes +
              " (gate 15%)";
  o.detail = {{"heat_max_error", heat.max_error}, {"ito_ratio", ito.ratio}, {"ito_z", ito.z}, {"structure", sfj}};
  return o;
}

// ---------------------------------------------------------------------------
// 14. Particle system against the Cole-Hopf solution.

Outcome criterion14(const Context& ctx) {
  CompareConfig cfg;
  cfg.n = 256;
  cfg.ell = 4;
  cfg.particle_replicas = 200;
  cfg.she_replicas = 400;
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.budget_events = 1e11;
  const auto rep = compare_particle_vs_she(cfg);
  double worst = 0;
  std::string rows;
  for (const auto& r : rep.rows) {
    worst = std::max(worst, r.discrepancy);
    rows += (rows.empty() ? "" : "; ") + std::string("t = ") + fmt(r.t, 3) + ": " + fmt(r.particle_var, 4) + " vs " +
            fmt(r.she_var, 4);
  }
  Outcome o;
  o.pass = worst < 0.15;
  o.summary = "Var theta_t, particles vs Cole-Hopf, " + rows + "; max discrepancy " + fmt(100 * worst, 3) +
              "% (calibration gate 15%)";
  o.detail = rep.to_json();
  return o;
}

const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> list{
      {"exact ensemble oracle", criterion1},
      {"first-order equivalence scaling", criterion2},
      {"second-moment equivalence bound", criterion3},
      {"spectral gap law", criterion4},
      {"exact trajectory identities", criterion5},
      {"stationarity of Bernoulli measures", criterion6},
      {"martingale quadratic variation", criterion7},
      {"drift-field time scaling", criterion8},
      {"second-order Boltzmann-Gibbs", criterion9},
      {"iterative block bound", criterion10},
      {"current cutoff", criterion11},
      {"Hoelder regularity", criterion12},
      {"heat equation solver", criterion13},
      {"particles vs Cole-Hopf", criterion14},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kpzlab acceptance criteria"};
  std::vector<int> which;
  Context ctx;
  std::string json_dir;
  app.add_option("--criterion", which, "criterion number(s), default all")->check(CLI::Range(1, 14));
  app.add_option("--jobs", ctx.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", ctx.seed, "master seed");
  app.add_option("--json-dir", json_dir, "write one JSON record per criterion here");
  CLI11_PARSE(app, argc, argv);
  if (which.empty())
    for (int i = 1; i <= 14; ++i) which.push_back(i);

  int failures = 0;
  for (int c : which) {
    const auto& [name, fn] = criteria()[static_cast<std::size_t>(c - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %2d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c, name.c_str(), o.summary.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
    if (!json_dir.empty()) {
      std::filesystem::create_directories(json_dir);
      write_json(std::filesystem::path(json_dir) / ("criterion_" + std::to_string(c) + ".json"),
                 {{"criterion", c}, {"name", name}, {"pass", o.pass}, {"summary", o.summary}, {"seconds", secs},
                  {"seed", ctx.seed}, {"detail", o.detail}});
    }
  }
  return failures == 0 ? 0 : 1;
}
