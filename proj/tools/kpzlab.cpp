// kpzlab command-line front end.
//
// Exit codes: 0 success, 1 a gate failed, 2 usage or configuration error,
// 3 refused because the resource estimate exceeds the budget.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "kpzlab/config.hpp"
#include "kpzlab/ensembles.hpp"
#include "kpzlab/experiments.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/output.hpp"
#include "kpzlab/plan.hpp"
#include "kpzlab/she.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kpzlab;

namespace {

constexpr int kOk = 0;
constexpr int kGateFailed = 1;
constexpr int kUsage = 2;
constexpr int kBudget = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::string out = "kpzlab_out";
  std::uint64_t seed = 1;
  bool seed_given = false;
  unsigned jobs = 1;
  double budget = 2e10;
  bool overwrite = false;
};

double effective_budget(const Globals& g) {
  if (const char* env = std::getenv("KPZLAB_BUDGET")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0)) throw UsageError("KPZLAB_BUDGET must be a positive number");
    return v;
  }
  return g.budget;
}

fs::path prepare_out(const Globals& g) {
  const fs::path dir(g.out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("--out " + g.out + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!g.overwrite) throw UsageError("output directory " + g.out + " is not empty (pass --overwrite to replace it)");
      for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());
    }
  }
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// "4,8,16", "4:12" (every integer) or "8:4096:x2" (geometric).
std::vector<std::int64_t> parse_int_list(const std::string& s, const std::string& flag) {
  std::vector<std::int64_t> out;
  try {
    if (s.find(':') != std::string::npos) {
      const auto parts = split(s, ':');
      if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("range");
      const auto lo = std::stoll(parts[0]), hi = std::stoll(parts[1]);
      if (parts.size() == 3) {
        if (parts[2].size() < 2 || parts[2][0] != 'x') throw std::invalid_argument("factor");
        const auto f = std::stoll(parts[2].substr(1));
        if (f < 2 || lo < 1) throw std::invalid_argument("factor");
        for (auto k = lo; k <= hi; k *= f) out.push_back(k);
      } else {
        for (auto k = lo; k <= hi; ++k) out.push_back(k);
      }
    } else {
      for (const auto& p : split(s, ',')) out.push_back(std::stoll(p));
    }
  } catch (const std::exception&) {
    throw UsageError(flag + ": expected a list like 4,8,16 or a range like 4:512 or 8:4096:x2");
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  try {
    for (const auto& p : split(s, ',')) {
      std::size_t used = 0;
      out.push_back(std::stod(p, &used));
      if (used != p.size()) throw std::invalid_argument("trailing");
    }
  } catch (const std::exception&) {
    throw UsageError(flag + ": expected a comma-separated list of numbers");
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Globals& g, bool dump_events) {
  const auto t0 = std::chrono::steady_clock::now();
  if (g.config.empty()) throw UsageError("simulate needs --config");
  if (!fs::exists(g.config)) throw UsageError("config file '" + g.config + "' not found");
  ExperimentPlan plan = plan_from_config(load_toml_file(g.config));
  if (g.seed_given) plan.master_seed = g.seed;
  RunOptions ro;
  ro.jobs = g.jobs;
  ro.budget_events = effective_budget(g);
  const fs::path dir = prepare_out(g);
  if (dump_events) {
    plan.event_log_dir = (dir / "events").string();
    fs::create_directories(plan.event_log_dir);
  }
  const PlanResult res = run_plan(plan, ro);

  Manifest man;
  man.command = "simulate";
  man.parameters = plan.to_json();
  man.master_seed = plan.master_seed;
  man.inputs = {fs::path(g.config)};
  json report;
  report["plan"] = plan.to_json();
  report["estimated_events"] = res.estimated_events;
  report["total_events"] = res.total_events;
  report["points"] = json::array();
  bool identities = true, continuity = true;
  if (plan.write_replicas && !res.points.empty()) fs::create_directories(dir / "replicas");
  {
    CsvWriter moments(dir / "moments.csv", {"point", "column", "t", "mean", "variance", "stderr"});
    for (std::size_t p = 0; p < res.points.size(); ++p) {
      const auto& pr = res.points[p];
      report["points"].push_back(pr.report);
      identities = identities && pr.report.value("identity_defect_max", 0.0) == 0.0;
      continuity = continuity && pr.report.value("continuity_exact", true);
      for (const auto& r : pr.replicas) {
        man.replicas.push_back({{"point", p}, {"replica", r.replica}, {"stream", r.stream}, {"events", r.events}});
        if (plan.write_replicas) {
          CsvWriter w(dir / "replicas" / ("point" + std::to_string(p) + "_replica" + std::to_string(r.replica) + ".csv"),
                      pr.columns);
          for (const auto& row : r.rows) w.row(row);
        }
      }
      if (!pr.replicas.empty()) {
        const auto& mom = pr.report["moments"];
        const auto& times = pr.report["times"];
        for (std::size_t c = 1; c < pr.columns.size(); ++c)
          for (std::size_t s = 0; s < times.size(); ++s)
            moments.row_cells({std::to_string(p), pr.columns[c], format_double(times[s].get<double>()),
                               format_double(mom[pr.columns[c]]["mean"][s].get<double>()),
                               format_double(mom[pr.columns[c]]["variance"][s].get<double>()),
                               format_double(mom[pr.columns[c]]["stderr"][s].get<double>())});
      }
    }
  }
  report["gates"] = {{"identity_exact", identities}, {"continuity_exact", continuity}};
  write_json(dir / "report.json", report);
  man.events = res.total_events;
  man.wall_clock_seconds = seconds_since(t0);
  man.write(dir);
  std::cout << "simulate: " << res.points.size() << " grid point(s), " << plan.replicas << " replica(s) each, "
            << res.total_events << " events (estimated " << res.estimated_events << ")\n"
            << "identities exact: " << (identities ? "yes" : "NO") << ", continuity exact: " << (continuity ? "yes" : "NO")
            << "\noutputs in " << dir.string() << "\n";
  return identities && continuity ? kOk : kGateFailed;
}

// ---------------------------------------------------------------------------

struct EnsembleOpts {
  std::string f = "wasep-drift";
  std::string k = "4:512:x2";
  double rho = 0.5;
  int p = 1;
  bool exact = false;
};

WindowFunction ensemble_function(const std::string& spec, double rho) {
  if (spec.rfind("monomial:", 0) == 0) {
    int l = 0;
    try {
      l = std::stoi(spec.substr(9));
    } catch (const std::exception&) {
      throw UsageError("--f: monomial:l needs an integer l");
    }
    if (l < 1 || l > kMaxWindowWidth) throw UsageError("--f: monomial degree must lie in 1.." + std::to_string(kMaxWindowWidth));
    return WindowFunction::tabulate(1, l, [l](const PatternView& e) {
      double v = 1.0;
      for (int i = 1; i <= l; ++i) v *= e(i);
      return v;
    });
  }
  if (spec == "wasep-drift") {
    const auto f = drift_function(wasep_rates(), 1.0);
    return f - drift_moments(f, rho).psi;
  }
  try {
    return WindowFunction::from_json(json::parse(spec));
  } catch (const std::exception& e) {
    throw UsageError(std::string("--f: expected monomial:l, wasep-drift or a JSON window function (") + e.what() + ")");
  }
}

int cmd_ensembles(const Globals& g, const EnsembleOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(o.rho > 0.0 && o.rho < 1.0)) throw UsageError("--rho must lie in (0, 1)");
  if (o.p < 1) throw UsageError("--p must be >= 1");
  const WindowFunction f = ensemble_function(o.f, o.rho);
  const auto ks = parse_int_list(o.k, "--k");
  const int width = f.hi() - f.lo() + 1;
  double cost = 0.0;
  for (auto k : ks) {
    if (k < width) throw UsageError("--k: block size " + std::to_string(k) + " is smaller than the window width " + std::to_string(width));
    if (o.exact && k > 64) throw UsageError("--exact supports k <= 64");
    cost += static_cast<double>(k + 1) * std::ldexp(1.0, width) * o.p * (o.exact ? 64.0 : 1.0);
  }
  const double budget = effective_budget(g);
  if (cost > budget) {
    std::cerr << "ensembles: exact-sum cost " << cost << " exceeds the budget " << budget
              << "; use smaller k (cost grows like k * 2^width * p)\n";
    return kBudget;
  }
  const auto dm = drift_moments(f, o.rho);
  const bool centered = std::abs(dm.psi) <= 1e-12 && std::abs(dm.psi_p) <= 1e-12;
  const fs::path dir = prepare_out(g);
  std::vector<std::string> header{"k", "prop8_residual", "k2_prop8_residual"};
  if (centered) header.insert(header.end(), {"moment2p", "residual_moment2", "k3_residual_moment2"});
  json rows = json::array();
  {
    CsvWriter w(dir / "ensembles.csv", header);
    std::printf("%s\n", [&] {
      std::string h;
      for (const auto& c : header) h += (h.empty() ? "" : "  ") + c;
      return h;
    }().c_str());
    for (auto k : ks) {
      double r8 = 0.0;
      if (o.exact) {
        // Exact canonical values, grand-canonical polynomial in double.
        const auto poly = grand_canonical_polynomial(f);
        const auto d2 = poly.derivative().derivative();
        for (std::int64_t m = 0; m <= k; ++m) {
          const double x = static_cast<double>(m) / static_cast<double>(k);
          const double canon = static_cast<double>(psi_canonical_exact(f, k, m));
          r8 = std::max(r8, std::abs(canon - poly(x) + x * (1 - x) / (2.0 * static_cast<double>(k)) * d2(x)));
        }
      } else {
        r8 = prop8_residual(f, k);
      }
      const double kk = static_cast<double>(k);
      std::vector<double> row{kk, r8, kk * kk * r8};
      if (centered) {
        const auto cm = prop9_moments(f, o.rho, k, o.p);
        row.insert(row.end(), {cm.moment2p, cm.residual_moment2, kk * kk * kk * cm.residual_moment2});
      }
      w.row(row);
      std::string line;
      for (double v : row) line += (line.empty() ? "" : "  ") + format_double(v);
      std::printf("%s\n", line.c_str());
      rows.push_back(row);
    }
  }
  json summary = {{"f", f.to_json()}, {"rho", o.rho}, {"p", o.p}, {"exact", o.exact}, {"columns", header}, {"rows", rows}};
  if (!centered) summary["note"] = "psi(rho) or psi'(rho) is nonzero: second-moment columns omitted";
  write_json(dir / "ensembles.json", summary);
  Manifest man;
  man.command = "ensembles";
  man.parameters = {{"f", o.f}, {"k", o.k}, {"rho", o.rho}, {"p", o.p}, {"exact", o.exact}};
  man.master_seed = g.seed;
  man.wall_clock_seconds = seconds_since(t0);
  man.write(dir);
  return kOk;
}

// ---------------------------------------------------------------------------

struct GapOpts {
  int k = 2;
  int m = 1;
  std::string rates = "wasep";
  double b = 1.0;
};

int cmd_gap(const Globals& g, const GapOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  RateModel rm = [&] {
    try {
      return preset_rates(o.rates, o.b);
    } catch (const std::exception& e) {
      throw UsageError(std::string("--rates: ") + e.what());
    }
  }();
  if (o.k < 2 || o.m < 0 || o.m > o.k) throw UsageError("need k >= 2 and 0 <= m <= k");
  if (binomial_count(o.k, o.m) > kMaxSectorDimension)
    throw UsageError("sector C(k,m) exceeds " + std::to_string(kMaxSectorDimension) + " states");
  const double gap = spectral_gap(o.k, o.m, rm);
  char line[128];
  std::snprintf(line, sizeof line, "gap = %.12f", gap);
  std::cout << line << "\n";
  std::snprintf(line, sizeof line, "gap * k^2 = %.12f", gap * o.k * o.k);
  std::cout << line << "\n";
  const fs::path dir = prepare_out(g);
  write_json(dir / "gap.json", {{"k", o.k}, {"m", o.m}, {"rates", o.rates}, {"b", o.b}, {"gap", gap}, {"gap_k2", gap * o.k * o.k}});
  Manifest man;
  man.command = "gap";
  man.parameters = {{"k", o.k}, {"m", o.m}, {"rates", o.rates}, {"b", o.b}};
  man.master_seed = g.seed;
  man.wall_clock_seconds = seconds_since(t0);
  man.write(dir);
  return kOk;
}

// ---------------------------------------------------------------------------

struct SheOpts {
  int M = 1024;
  double dx = 1.0 / 256;
  double dt_over_dx = 0.04;
  double T = 0.5;
  double a = 1.0;
  double rho = 0.5;
  std::string rates = "wasep";
  double b = 1.0;
  std::string init = "bridge";
  std::string snapshots = "0,0.25,0.5";
  std::int64_t check_replicas = 100;
};

int cmd_she(const Globals& g, const SheOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.M < 4 || o.M % 2) throw UsageError("--M must be even and >= 4");
  if (!(o.dx > 0.0) || !(o.dt_over_dx > 0.0) || o.dt_over_dx > 1.0) throw UsageError("need dx > 0 and 0 < dt/dx <= 1");
  const RateModel rm = preset_rates(o.rates, o.b);
  const SheCoefficients co = SheCoefficients::from_model(rm, o.a, o.rho);
  const SheInit init = o.init == "bridge" ? SheInit::PeriodicBridge
                       : o.init == "walk" ? SheInit::TwoSidedWalk
                                          : throw UsageError("--init must be bridge or walk");
  const double dt = o.dt_over_dx * o.dx;
  auto snaps = parse_double_list(o.snapshots, "--snapshots");
  std::sort(snaps.begin(), snaps.end());
  for (double s : snaps)
    if (s < 0 || s > o.T) throw UsageError("--snapshots must lie in [0, T]");

  const fs::path dir = prepare_out(g);
  json out;
  out["coefficients"] = {{"D", co.D}, {"lambda", co.lambda}, {"chi", co.chi}, {"kappa", co.kappa}, {"a", co.a}};
  out["grid"] = {{"M", o.M}, {"dx", o.dx}, {"dt", dt}, {"T", o.T}, {"init", o.init}};
  bool pass = true;

  // Deterministic semigroup check on the same grid.
  const int steps = std::max(1, static_cast<int>(std::llround(std::min(o.T, 0.1) / dt)));
  const auto hm = heat_mode_check(o.M, o.dx, co.D, dt, steps);
  out["heat_mode_check"] = {{"max_error", hm.max_error}, {"t", hm.t}, {"tolerance", 1e-10}, {"pass", hm.max_error < 1e-10}};
  pass = pass && hm.max_error < 1e-10;

  if (co.lambda != 0.0 && o.check_replicas >= 2) {
    const double tm = dt * std::max(1.0, std::round(0.05 / dt));
    const auto im = ito_mean_check(co, o.M, o.dx, dt, tm, o.check_replicas, g.seed, init);
    out["ito_mean_check"] = {{"ratio", im.ratio}, {"stderr", im.stderr_}, {"z", im.z}, {"t", tm},
                             {"replicas", im.replicas}, {"pass", std::abs(im.z) <= 3.0}};
    pass = pass && std::abs(im.z) <= 3.0;
  }

  // One trajectory with snapshots.
  Philox rng(g.seed, derive_stream(0, 0));
  SheField f = init_stationary(o.M, o.dx, co, rng, init);
  SheSolver solver(o.M, o.dx, co);
  {
    CsvWriter w(dir / "snapshots.csv", {"t", "x", "Z", "h", "Y"});
    long long done = 0;
    int halvings = 0;
    for (double s : snaps) {
      const auto target = std::llround(s / dt);
      for (; done < target; ++done) halvings += solver.step_mild(f, dt, rng);
      std::vector<double> h(f.Z.size(), std::nan("")), Y(f.Z.size(), std::nan(""));
      if (co.kappa != 0.0) {
        const auto ch = cole_hopf(f, co);
        h = ch.h;
        Y = ch.Y;
      }
      for (std::size_t i = 0; i < f.Z.size(); ++i)
        w.row({static_cast<double>(target) * dt, static_cast<double>(i) * o.dx, f.Z[i], h[i], Y[i]});
    }
    out["halvings"] = halvings;
  }
  out["pass"] = pass;
  write_json(dir / "she.json", out);
  Manifest man;
  man.command = "she";
  man.parameters = {{"M", o.M}, {"dx", o.dx}, {"dt", dt}, {"T", o.T}, {"a", o.a}, {"rho", o.rho}, {"rates", o.rates},
                    {"b", o.b}, {"init", o.init}, {"snapshots", snaps}, {"check_replicas", o.check_replicas}};
  man.master_seed = g.seed;
  man.wall_clock_seconds = seconds_since(t0);
  man.extra = {{"D", co.D}, {"lambda", co.lambda}};
  man.write(dir);
  std::cout << "she: heat-mode error " << hm.max_error << (pass ? ", checks pass" : ", a check FAILED") << "\n";
  return pass ? kOk : kGateFailed;
}

// ---------------------------------------------------------------------------

struct Bg2Opts {
  std::string ns = "64,128,256";
  std::string eps = "0.5,0.25,0.125,0.0625";
  Bg2Config cfg;
};

int cmd_bg2(const Globals& g, Bg2Opts o) {
  const auto t0 = std::chrono::steady_clock::now();
  o.cfg.ns = parse_int_list(o.ns, "--n");
  o.cfg.epsilons = parse_double_list(o.eps, "--eps");
  o.cfg.seed = g.seed;
  o.cfg.jobs = g.jobs;
  o.cfg.budget_events = effective_budget(g);
  const fs::path dir = prepare_out(g);
  const auto rep = bg2_sweep(o.cfg);
  {
    CsvWriter w(dir / "bg2.csv", {"n", "eps", "skipped", "residual", "stderr"});
    for (const auto& p : rep.points)
      w.row_cells({std::to_string(p.n), format_double(p.eps), p.skipped ? "1" : "0",
                   p.skipped ? "" : format_double(p.residual), p.skipped ? "" : format_double(p.stderr_)});
  }
  write_json(dir / "bg2.json", rep.to_json());
  for (const auto& p : rep.points) {
    if (p.skipped) std::cout << "n=" << p.n << " eps=" << p.eps << " skipped: " << p.note << "\n";
    else std::cout << "n=" << p.n << " eps=" << p.eps << " residual=" << p.residual << " +- " << p.stderr_ << "\n";
  }
  std::cout << "two-term fit R^2 = " << rep.two_term.r2 << "\n";
  Manifest man;
  man.command = "bg2";
  man.parameters = {{"n", o.cfg.ns}, {"eps", o.cfg.epsilons}, {"T", o.cfg.T}, {"replicas", o.cfg.replicas},
                    {"ell", o.cfg.ell}, {"a", o.cfg.a}, {"rates", o.cfg.rates}, {"b", o.cfg.b},
                    {"test_function", o.cfg.test_function}};
  man.master_seed = g.seed;
  man.events = rep.events;
  man.wall_clock_seconds = seconds_since(t0);
  man.write(dir);
  return kOk;
}

// ---------------------------------------------------------------------------

struct CompareOpts {
  std::string times = "0.25,0.5";
  std::string rates = "wasep";
  double rho = 0.5;
  CompareConfig cfg;
};

int cmd_compare(const Globals& g, CompareOpts o) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.rates != "wasep" || o.rho != 0.5)
    throw UsageError("coefficient mismatch: the comparison is defined for rates=wasep at rho=0.5");
  o.cfg.times = parse_double_list(o.times, "--times");
  o.cfg.seed = g.seed;
  o.cfg.jobs = g.jobs;
  o.cfg.budget_events = effective_budget(g);
  const fs::path dir = prepare_out(g);
  const auto rep = compare_particle_vs_she(o.cfg);
  json j = rep.to_json();
  bool pass = true;
  for (const auto& r : rep.rows) pass = pass && r.discrepancy < 0.15;
  j["gate"] = {{"max_discrepancy", 0.15}, {"pass", pass}};
  write_json(dir / "compare.json", j);
  for (const auto& r : rep.rows)
    std::cout << "t=" << r.t << "  particle Var=" << r.particle_var << " +- " << r.particle_se << "  " << rep.reference
              << " Var=" << r.she_var << " +- " << r.she_se << "  discrepancy=" << r.discrepancy << "\n";
  Manifest man;
  man.command = "compare";
  man.parameters = {{"n", o.cfg.n}, {"ell", o.cfg.ell}, {"a", o.cfg.a}, {"times", o.cfg.times},
                    {"particle_replicas", o.cfg.particle_replicas}, {"she_replicas", o.cfg.she_replicas},
                    {"cells_per_unit", o.cfg.she_cells_per_unit}, {"dt_over_dx", o.cfg.she_dt_over_dx}};
  man.master_seed = g.seed;
  man.events = rep.events;
  man.wall_clock_seconds = seconds_since(t0);
  man.write(dir);
  return pass ? kOk : kGateFailed;
}

// ---------------------------------------------------------------------------

int cmd_report(const Globals& g, const std::string& in) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!fs::is_directory(in)) throw UsageError("--in " + in + " is not a directory");
  json summary = json::object();
  bool pass = true;
  std::vector<fs::path> inputs;
  auto load = [&](const char* name) -> std::optional<json> {
    const fs::path p = fs::path(in) / name;
    if (!fs::exists(p)) return std::nullopt;
    inputs.push_back(p);
    std::ifstream s(p);
    return json::parse(s);
  };
  auto gate = [&](const std::string& name, bool ok) {
    summary[name] = ok;
    pass = pass && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
  };
  if (auto r = load("report.json")) {
    gate("simulate.identity_exact", (*r)["gates"]["identity_exact"].get<bool>());
    gate("simulate.continuity_exact", (*r)["gates"]["continuity_exact"].get<bool>());
  }
  if (auto r = load("bg2.json")) {
    gate("bg2.decreasing_in_eps", (*r)["decreasing_in_eps"].get<bool>());
    gate("bg2.n_stable", (*r)["n_stable"].get<bool>());
    gate("bg2.two_term_r2", (*r)["two_term_fit"]["r2"].get<double>() >= 0.9);
  }
  if (auto r = load("compare.json")) gate("compare.discrepancy", (*r)["gate"]["pass"].get<bool>());
  if (auto r = load("she.json")) gate("she.checks", (*r)["pass"].get<bool>());
  if (summary.empty()) throw UsageError("no report.json, bg2.json, compare.json or she.json in " + in);
  const fs::path dir = prepare_out(g);
  write_json(dir / "summary.json", {{"source", in}, {"gates", summary}, {"pass", pass}});
  Manifest man;
  man.command = "report";
  man.parameters = {{"in", in}};
  man.master_seed = g.seed;
  man.inputs = inputs;
  man.wall_clock_seconds = seconds_since(t0);
  man.write(dir);
  return pass ? kOk : kGateFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kpzlab: weakly asymmetric speed-change exclusion, fluctuation fields and the stochastic heat equation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "TOML plan file");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
    g.seed = s;
    g.seed_given = true;
  }, "master seed (overrides the config)");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--budget-events", g.budget, "refuse plans estimated above this many events (KPZLAB_BUDGET overrides)")
      ->capture_default_str();
  app.add_flag("--overwrite", g.overwrite, "replace the contents of a non-empty output directory");

  auto* sim = app.add_subcommand("simulate", "run a TOML plan of dynamics and fluctuation fields");
  bool dump_events = false;
  sim->add_flag("--dump-events", dump_events, "write every jump of every replica to events/*.events");
  EnsembleOpts eo;
  auto* ens = app.add_subcommand("ensembles", "canonical expectations and equivalence-of-ensembles residuals");
  ens->add_option("--f", eo.f, "monomial:l, wasep-drift or a JSON window function")->capture_default_str();
  ens->add_option("--k", eo.k, "block sizes: 4,8,16 or 4:512 or 8:4096:x2")->capture_default_str();
  ens->add_option("--rho", eo.rho, "density")->capture_default_str();
  ens->add_option("--p", eo.p, "moment order")->capture_default_str();
  ens->add_flag("--exact", eo.exact, "exact rational canonical expectations (k <= 64)");
  GapOpts go;
  auto* gap = app.add_subcommand("gap", "spectral gap of the exchange dynamics on a box sector");
  gap->add_option("--k", go.k, "box size")->capture_default_str();
  gap->add_option("--m", go.m, "particle number")->capture_default_str();
  gap->add_option("--rates", go.rates, "wasep or gradient-b")->capture_default_str();
  gap->add_option("--b", go.b, "gradient-b coefficient")->capture_default_str();
  SheOpts so;
  auto* she = app.add_subcommand("she", "stochastic heat equation run with built-in checks");
  she->add_option("--M", so.M, "grid points")->capture_default_str();
  she->add_option("--dx", so.dx, "grid spacing")->capture_default_str();
  she->add_option("--dt-over-dx", so.dt_over_dx, "time step in units of dx")->capture_default_str();
  she->add_option("--T", so.T, "final time")->capture_default_str();
  she->add_option("--a", so.a, "asymmetry (0 gives the heat equation)")->capture_default_str();
  she->add_option("--rho", so.rho, "density")->capture_default_str();
  she->add_option("--rates", so.rates, "wasep or gradient-b")->capture_default_str();
  she->add_option("--b", so.b, "gradient-b coefficient")->capture_default_str();
  she->add_option("--init", so.init, "bridge or walk")->capture_default_str();
  she->add_option("--snapshots", so.snapshots, "snapshot times")->capture_default_str();
  she->add_option("--check-replicas", so.check_replicas, "replicas for the Ito-mean check")->capture_default_str();
  Bg2Opts bo;
  auto* bg2 = app.add_subcommand("bg2", "second-order Boltzmann-Gibbs sweep over eps x n");
  bg2->add_option("--n", bo.ns, "scaling parameters")->capture_default_str();
  bg2->add_option("--eps", bo.eps, "block fractions")->capture_default_str();
  bg2->add_option("--T", bo.cfg.T, "time horizon")->capture_default_str();
  bg2->add_option("--replicas", bo.cfg.replicas, "replicas per n")->capture_default_str();
  bg2->add_option("--ell", bo.cfg.ell, "ring length in units of n")->capture_default_str();
  bg2->add_option("--a", bo.cfg.a, "asymmetry")->capture_default_str();
  bg2->add_option("--rates", bo.cfg.rates, "wasep or gradient-b")->capture_default_str();
  bg2->add_option("--b", bo.cfg.b, "gradient-b coefficient")->capture_default_str();
  bg2->add_option("--G", bo.cfg.test_function, "test function")->capture_default_str();
  CompareOpts co;
  auto* cmp = app.add_subcommand("compare", "particle current variance against the Cole-Hopf solution");
  cmp->add_option("--n", co.cfg.n, "scaling parameter")->capture_default_str();
  cmp->add_option("--ell", co.cfg.ell, "ring / torus length")->capture_default_str();
  cmp->add_option("--a", co.cfg.a, "asymmetry")->capture_default_str();
  cmp->add_option("--times", co.times, "comparison times")->capture_default_str();
  cmp->add_option("--rates", co.rates, "must be wasep")->capture_default_str();
  cmp->add_option("--rho", co.rho, "must be 0.5")->capture_default_str();
  cmp->add_option("--particle-replicas", co.cfg.particle_replicas, "particle replicas")->capture_default_str();
  cmp->add_option("--she-replicas", co.cfg.she_replicas, "SHE replicas")->capture_default_str();
  cmp->add_option("--cells-per-unit", co.cfg.she_cells_per_unit, "SHE grid points per unit length")->capture_default_str();
  cmp->add_option("--dt-over-dx", co.cfg.she_dt_over_dx, "SHE time step in units of dx")->capture_default_str();
  std::string report_in;
  auto* rep = app.add_subcommand("report", "re-check the gates of an output directory");
  rep->add_option("--in", report_in, "directory written by another command")->required();
  for (auto* s : {sim, ens, gap, she, bg2, cmp, rep}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    if (*sim) return cmd_simulate(g, dump_events);
    if (*ens) return cmd_ensembles(g, eo);
    if (*gap) return cmd_gap(g, go);
    if (*she) return cmd_she(g, so);
    if (*bg2) return cmd_bg2(g, bo);
    if (*cmp) return cmd_compare(g, co);
    if (*rep) return cmd_report(g, report_in);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const BudgetExceeded& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kBudget;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kGateFailed;
  }
  return kUsage;
}
