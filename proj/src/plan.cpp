#include "kpzlab/plan.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "kpzlab/config.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/measure.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

using nlohmann::json;

json ModelPoint::to_json() const {
  json j = params.to_json();
  j["rates"] = rates;
  if (rates == "gradient-b") j["b"] = b;
  return j;
}

std::vector<double> ExperimentPlan::sample_times() const { return uniform_times(T, sample_dt, true); }

json ExperimentPlan::to_json() const {
  json j;
  j["replicas"] = replicas;
  j["T"] = T;
  j["sample_dt"] = sample_dt;
  j["master_seed"] = master_seed;
  j["init"] = init == InitialLaw::GrandCanonical ? "grand-canonical" : "canonical";
  j["points"] = json::array();
  for (const auto& p : points) j["points"].push_back(p.to_json());
  j["test_functions"] = test_functions;
  j["marked_bonds"] = marked_bonds;
  j["epsilons"] = epsilons;
  j["block_sizes"] = block_sizes;
  j["cutoffs"] = cutoffs;
  j["write_replicas"] = write_replicas;
  return j;
}

// ---------------------------------------------------------------------------
// Config

namespace {

void reject_unknown(const json& table, const std::string& name, const std::set<std::string>& allowed) {
  if (!table.is_object()) throw ConfigError(name, "expected a table");
  for (const auto& [k, v] : table.items())
    if (!allowed.count(k)) throw ConfigError(name.empty() ? k : name + "." + k, "unknown key");
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<std::int64_t>();
}

std::vector<json> as_list(const json& v) {
  if (v.is_array()) return std::vector<json>(v.begin(), v.end());
  return {v};
}

}  // namespace

ExperimentPlan plan_from_config(const json& cfg) {
  if (!cfg.is_object()) throw ConfigError("", "config must be a table");
  reject_unknown(cfg, "", {"run", "model", "fields", "output"});
  ExperimentPlan plan;

  const json run = cfg.value("run", json::object());
  reject_unknown(run, "run", {"replicas", "T", "sample_dt", "master_seed", "init"});
  if (run.contains("replicas")) plan.replicas = as_integer(run["replicas"], "run.replicas");
  if (plan.replicas < 0) throw ConfigError("run.replicas", "must be >= 0");
  if (run.contains("T")) plan.T = as_number(run["T"], "run.T");
  if (!(plan.T > 0.0)) throw ConfigError("run.T", "must be positive");
  if (run.contains("sample_dt")) plan.sample_dt = as_number(run["sample_dt"], "run.sample_dt");
  if (!(plan.sample_dt > 0.0) || plan.sample_dt > plan.T) throw ConfigError("run.sample_dt", "must lie in (0, T]");
  if (run.contains("master_seed")) {
    const auto s = as_integer(run["master_seed"], "run.master_seed");
    if (s < 0) throw ConfigError("run.master_seed", "must be nonnegative");
    plan.master_seed = static_cast<std::uint64_t>(s);
  }
  if (run.contains("init")) {
    if (!run["init"].is_string()) throw ConfigError("run.init", "expected a string");
    const auto s = run["init"].get<std::string>();
    if (s == "grand-canonical") plan.init = InitialLaw::GrandCanonical;
    else if (s == "canonical") plan.init = InitialLaw::Canonical;
    else throw ConfigError("run.init", "expected 'grand-canonical' or 'canonical'");
  }

  const json model = cfg.value("model", json::object());
  reject_unknown(model, "model", {"n", "a", "theta", "rho", "ell", "rates", "b"});
  auto list = [&](const char* key, json dflt) { return model.contains(key) ? as_list(model[key]) : std::vector<json>{dflt}; };
  const auto ns = list("n", 64), as = list("a", 1.0), thetas = list("theta", 0.5), rhos = list("rho", 0.5),
             ells = list("ell", 4), ratess = list("rates", "wasep"), bs = list("b", 1.0);
  for (const auto& n : ns)
    for (const auto& a : as)
      for (const auto& th : thetas)
        for (const auto& rho : rhos)
          for (const auto& ell : ells)
            for (const auto& r : ratess)
              for (const auto& b : bs) {
                ModelPoint mp;
                mp.params.n = as_integer(n, "model.n");
                mp.params.a = as_number(a, "model.a");
                mp.params.theta = as_number(th, "model.theta");
                const bool rho_auto = rho.is_string() && rho.get<std::string>() == "zero-velocity";
                mp.params.rho = rho_auto ? 0.5 : as_number(rho, "model.rho");
                mp.params.ell = as_integer(ell, "model.ell");
                if (!r.is_string()) throw ConfigError("model.rates", "expected a preset name");
                mp.rates = r.get<std::string>();
                mp.b = as_number(b, "model.b");
                try {
                  mp.params.validate();
                } catch (const std::exception& e) {
                  const Params& q = mp.params;
                  const char* key = q.n < 1 ? "model.n" : q.ell < 1 ? "model.ell" : q.theta < 0.0 ? "model.theta"
                                    : !(q.rho > 0.0 && q.rho < 1.0) ? "model.rho" : "model.a";
                  throw ConfigError(key, e.what());
                }
                RateModel rm = [&] {
                  try {
                    return mp.rate_model();
                  } catch (const std::exception& e) {
                    throw ConfigError("model.rates", e.what());
                  }
                }();
                if (rho_auto) {
                  const auto r = zero_velocity_density(rm);
                  if (!r) throw ConfigError("model.rho", "these rates have no zero-velocity density");
                  mp.params.rho = *r;
                }
                try {
                  make_drift_setup(Model(mp.params, rm));
                } catch (const std::exception& e) {
                  throw ConfigError("model.rho", e.what());
                }
                // Avoid duplicated points when "b" is given for wasep.
                if (mp.rates != "gradient-b" && &b != &bs.front()) continue;
                plan.points.push_back(mp);
              }

  const json fields = cfg.value("fields", json::object());
  reject_unknown(fields, "fields", {"test_functions", "marked_bonds", "epsilon", "k", "cutoff_l"});
  if (fields.contains("test_functions")) {
    plan.test_functions.clear();
    for (const auto& v : as_list(fields["test_functions"])) {
      if (!v.is_string()) throw ConfigError("fields.test_functions", "expected strings like \"sin:1\"");
      plan.test_functions.push_back(v.get<std::string>());
    }
  }
  if (fields.contains("marked_bonds")) {
    plan.marked_bonds.clear();
    for (const auto& v : as_list(fields["marked_bonds"])) plan.marked_bonds.push_back(as_integer(v, "fields.marked_bonds"));
  }
  if (fields.contains("epsilon"))
    for (const auto& v : as_list(fields["epsilon"])) plan.epsilons.push_back(as_number(v, "fields.epsilon"));
  if (fields.contains("k"))
    for (const auto& v : as_list(fields["k"])) {
      const auto k = as_integer(v, "fields.k");
      if (k < 1) throw ConfigError("fields.k", "block sizes must be >= 1");
      plan.block_sizes.push_back(k);
    }
  if (fields.contains("cutoff_l"))
    for (const auto& v : as_list(fields["cutoff_l"])) {
      const double l = as_number(v, "fields.cutoff_l");
      if (!(l > 0.0)) throw ConfigError("fields.cutoff_l", "must be positive");
      plan.cutoffs.push_back(l);
    }

  const json output = cfg.value("output", json::object());
  reject_unknown(output, "output", {"write_replicas"});
  if (output.contains("write_replicas")) {
    if (!output["write_replicas"].is_boolean()) throw ConfigError("output.write_replicas", "expected true or false");
    plan.write_replicas = output["write_replicas"].get<bool>();
  }

  // Field definitions must make sense on every ring of the grid.
  for (const auto& mp : plan.points) {
    const auto n = mp.params.n, L = mp.params.L();
    for (const auto& g : plan.test_functions) try {
        TestFunction::parse(g, n, L);
      } catch (const std::exception& e) {
        throw ConfigError("fields.test_functions", e.what());
      }
    for (double eps : plan.epsilons) try {
        const auto k = block_length(eps, n);
        if (L % k != 0) throw std::invalid_argument("block length must divide the ring size");
      } catch (const std::exception& e) {
        throw ConfigError("fields.epsilon", e.what());
      }
    for (auto k : plan.block_sizes)
      if (L % k != 0) throw ConfigError("fields.k", "block size " + std::to_string(k) + " does not divide L");
    for (double l : plan.cutoffs)
      if (l * n >= L / 2) throw ConfigError("fields.cutoff_l", "cutoff support must fit in half the ring");
  }
  return plan;
}

std::uint64_t replica_stream(std::size_t point, std::int64_t replica) {
  return derive_stream(point, static_cast<std::uint64_t>(replica));
}

double estimate_events(const ExperimentPlan& plan) {
  double total = 0.0;
  for (const auto& mp : plan.points) {
    const auto hc = hydro_coefficients(mp.rate_model(), mp.params.rho);
    const double n = static_cast<double>(mp.params.n);
    total += n * n * static_cast<double>(mp.params.L()) * plan.T * static_cast<double>(plan.replicas) *
             hc.mean_forward_activity;
  }
  return total;
}

BudgetExceeded::BudgetExceeded(double est, double bud)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "estimated " << est << " events exceeds the budget of " << bud
           << " (raise --budget-events or KPZLAB_BUDGET, or shrink the plan)";
        return os.str();
      }()),
      estimate(est),
      budget(bud) {}

// ---------------------------------------------------------------------------
// Execution

namespace {

std::string num_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct PointContext {
  Model model;
  DriftSetup drift;
  std::vector<TestFunction> Gs;
  std::vector<TestFunction> cutoffs;
  ObservableList prototypes;
  std::size_t n_martingale = 0;

  PointContext(const ExperimentPlan& plan, const ModelPoint& mp)
      : model(mp.params, mp.rate_model()), drift(make_drift_setup(model)) {
    const auto n = mp.params.n, L = mp.params.L();
    for (const auto& g : plan.test_functions) Gs.push_back(TestFunction::parse(g, n, L));
    for (double l : plan.cutoffs) cutoffs.push_back(TestFunction::parse("cutoff:" + num_label(l), n, L));
    auto mf = build_martingale_fields(Gs, drift);
    prototypes = std::move(mf.observables);
    n_martingale = prototypes.size();
    for (const auto& G : Gs)
      for (auto k : plan.block_sizes) prototypes.push_back(make_block_observable(G, k, drift));
    for (const auto& G : Gs)
      for (double eps : plan.epsilons) prototypes.push_back(make_quad_observable(G, eps, drift));
    for (const auto& G : cutoffs) prototypes.push_back(make_Y_observable(G, mp.params.rho));
  }
};

ReplicaResult run_with(const ExperimentPlan& plan, const PointContext& ctx, std::size_t point, std::int64_t replica) {
  const auto& P = ctx.model.params();
  ReplicaResult rr;
  rr.replica = replica;
  rr.stream = replica_stream(point, replica);
  Philox init_rng(plan.master_seed, rr.stream);
  Configuration eta0 = plan.init == InitialLaw::GrandCanonical
                           ? sample_grand_canonical(P.L(), P.rho, init_rng)
                           : sample_canonical(P.L(), std::llround(P.rho * static_cast<double>(P.L())), init_rng);
  SimState state(ctx.model, eta0, plan.master_seed, splitmix64(rr.stream));
  ObservableList obs = clone_all(ctx.prototypes);

  std::ofstream log_file;
  std::optional<EventLogWriter> log;
  if (!plan.event_log_dir.empty()) {
    const auto path = std::filesystem::path(plan.event_log_dir) /
                      ("point" + std::to_string(point) + "_replica" + std::to_string(replica) + ".events");
    log_file.open(path, std::ios::binary);
    if (!log_file) throw std::runtime_error("cannot write " + path.string());
    log.emplace(log_file, json{{"point", plan.points[point].to_json()}, {"master_seed", plan.master_seed},
                               {"stream", rr.stream}, {"replica", replica}, {"initial", eta0.to_string()}});
    state.set_event_log(&*log);
  }

  MeasureOptions mo;
  mo.sample_times = plan.sample_times();
  mo.marked_bonds = plan.marked_bonds;
  mo.on_sample = [&](const SimState& s, std::size_t, double) {
    if (!continuity_holds(eta0, s.eta(), s.currents())) rr.continuity = false;
  };
  const FieldSeries fs = run_measured(state, obs, plan.T, mo);
  rr.events = fs.events;

  const std::size_t S = fs.times.size();
  std::vector<Decomposition> dec;
  for (std::size_t g = 0; g < ctx.Gs.size(); ++g) {
    dec.push_back(martingale_decompose(fs, g * MartingaleFields::kPerG));
    rr.identity_defect = std::max(rr.identity_defect, dec.back().max_identity_defect());
    rr.qv_monotone = rr.qv_monotone && dec.back().qv_nondecreasing();
  }
  rr.rows.assign(S, {});
  for (std::size_t s = 0; s < S; ++s) {
    auto& row = rr.rows[s];
    row.push_back(fs.times[s]);
    for (const auto& d : dec) {
      row.push_back(d.Y[s]);
      row.push_back(d.I[s]);
      row.push_back(d.A[s]);
      row.push_back(d.M[s]);
      row.push_back(d.QV[s]);
    }
    std::size_t i = ctx.n_martingale;
    for (std::size_t j = 0; j < ctx.Gs.size() * (plan.block_sizes.size() + plan.epsilons.size()); ++j, ++i)
      row.push_back(fs.integrals[i][s]);
    for (std::size_t j = 0; j < ctx.cutoffs.size(); ++j, ++i) row.push_back(fs.values[i][s] - fs.values[i][0]);
    for (std::size_t b = 0; b < plan.marked_bonds.size(); ++b) {
      const auto J = fs.currents[s][b];
      row.push_back(static_cast<double>(J));
      row.push_back(theta_from_current(J, ctx.model, fs.times[s]));
    }
  }
  return rr;
}

}  // namespace

std::vector<std::string> plan_columns(const ExperimentPlan& plan) {
  std::vector<std::string> c{"t"};
  for (std::size_t g = 0; g < plan.test_functions.size(); ++g)
    for (const char* f : {"Y", "I", "A", "M", "QV"}) c.push_back(std::string(f) + "_g" + std::to_string(g));
  for (std::size_t g = 0; g < plan.test_functions.size(); ++g)
    for (auto k : plan.block_sizes) c.push_back("B" + std::to_string(k) + "_g" + std::to_string(g));
  for (std::size_t g = 0; g < plan.test_functions.size(); ++g)
    for (double e : plan.epsilons) c.push_back("Q" + num_label(e) + "_g" + std::to_string(g));
  for (double l : plan.cutoffs) c.push_back("Ystar_l" + num_label(l));
  for (auto x : plan.marked_bonds) {
    c.push_back("J_" + std::to_string(x));
    c.push_back("theta_" + std::to_string(x));
  }
  return c;
}

ReplicaResult run_replica(const ExperimentPlan& plan, std::size_t point, std::int64_t replica) {
  const PointContext ctx(plan, plan.points.at(point));
  return run_with(plan, ctx, point, replica);
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json moment_report(const ExperimentPlan& plan, const PointResult& pr) {
  json rep;
  rep["point"] = pr.point.to_json();
  rep["replicas"] = pr.replicas.size();
  rep["columns"] = pr.columns;
  if (pr.replicas.empty()) return rep;
  const std::size_t S = pr.replicas.front().rows.size();
  const std::size_t C = pr.columns.size();
  const std::size_t R = pr.replicas.size();
  std::vector<double> times;
  for (std::size_t s = 0; s < S; ++s) times.push_back(pr.replicas.front().rows[s][0]);
  rep["times"] = times;

  auto column = [&](std::size_t c, std::size_t s) {
    std::vector<double> v(R);
    for (std::size_t r = 0; r < R; ++r) v[r] = pr.replicas[r].rows[s][c];
    return v;
  };

  json moments = json::object();
  json ci = json::object();
  for (std::size_t c = 1; c < C; ++c) {
    json m;
    std::vector<double> mean, var, se;
    for (std::size_t s = 0; s < S; ++s) {
      const auto v = column(c, s);
      mean.push_back(stats::mean(v));
      var.push_back(R > 1 ? stats::variance(v) : 0.0);
      se.push_back(R > 1 ? stats::standard_error(v) : 0.0);
    }
    m["mean"] = mean;
    m["variance"] = var;
    m["stderr"] = se;
    moments[pr.columns[c]] = m;
    if (R >= 20) {
      const auto bm = stats::batch_means(column(c, S - 1), 20);
      ci[pr.columns[c]] = {{"mean", bm.mean}, {"lo", bm.lo}, {"hi", bm.hi}, {"batches", bm.batches}};
    }
  }
  rep["moments"] = moments;
  rep["final_ci95"] = ci;

  // Covariance of the Y columns at the final sample.
  std::vector<std::size_t> ycols;
  for (std::size_t c = 0; c < C; ++c)
    if (pr.columns[c].rfind("Y_g", 0) == 0) ycols.push_back(c);
  if (R > 1) {
    json cov = json::array();
    for (auto a : ycols) {
      json row = json::array();
      for (auto b : ycols) row.push_back(stats::covariance(column(a, S - 1), column(b, S - 1)));
      cov.push_back(row);
    }
    rep["covariance_Y_final"] = cov;
  }

  // E[A_t^2] against t, and Var M_T / (chi phi' T |G|_1^2).
  const auto hc = hydro_coefficients(pr.point.rate_model(), pr.point.params.rho);
  json expo = json::object(), qv = json::object();
  for (std::size_t g = 0; g < plan.test_functions.size(); ++g) {
    const std::size_t a_col = 1 + 5 * g + 2, m_col = 1 + 5 * g + 3;
    std::vector<double> dt, mom;
    for (std::size_t s = 1; s < S; ++s) {
      const auto v = column(a_col, s);
      double m2 = 0.0;
      for (double x : v) m2 += x * x;
      dt.push_back(times[s]);
      mom.push_back(m2 / static_cast<double>(R));
    }
    try {
      const auto f = stats::scaling_exponent(dt, mom);
      expo["A_g" + std::to_string(g)] = {{"slope", f.slope}, {"stderr", f.slope_stderr}, {"r2", f.r2}};
    } catch (const std::exception& e) {
      expo["A_g" + std::to_string(g)] = {{"error", e.what()}};
    }
    if (R > 1) {
      const auto G = TestFunction::parse(plan.test_functions[g], pr.point.params.n, pr.point.params.L());
      const double denom = hc.chi * hc.phi_p * times.back() * G.seminorm1_sq();
      qv["g" + std::to_string(g)] = denom > 0.0 ? json(stats::variance(column(m_col, S - 1)) / denom) : json(nullptr);
    }
  }
  rep["exponents"] = expo;
  rep["martingale_variance_ratio"] = qv;

  double defect = 0.0;
  bool cont = true, mono = true;
  std::uint64_t events = 0;
  for (const auto& r : pr.replicas) {
    defect = std::max(defect, r.identity_defect);
    cont = cont && r.continuity;
    mono = mono && r.qv_monotone;
    events += r.events;
  }
  rep["identity_defect_max"] = defect;
  rep["continuity_exact"] = cont;
  rep["qv_nondecreasing"] = mono;
  rep["events"] = events;
  return rep;
}

PlanResult run_plan(const ExperimentPlan& plan, const RunOptions& opts) {
  PlanResult out;
  out.estimated_events = estimate_events(plan);
  if (out.estimated_events > opts.budget_events) throw BudgetExceeded(out.estimated_events, opts.budget_events);

  std::vector<std::unique_ptr<PointContext>> ctx;
  for (const auto& mp : plan.points) ctx.push_back(std::make_unique<PointContext>(plan, mp));

  const auto R = static_cast<std::size_t>(plan.replicas);
  const std::size_t total = plan.points.size() * R;
  std::vector<ReplicaResult> results(total);
  std::mutex progress_mutex;
  parallel_for(total, opts.jobs, [&](std::size_t i) {
    const std::size_t p = i / R;
    const auto r = static_cast<std::int64_t>(i % R);
    results[i] = run_with(plan, *ctx[p], p, r);
    if (opts.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      opts.progress(p, r, results[i].events);
    }
  });

  const auto columns = plan_columns(plan);
  for (std::size_t p = 0; p < plan.points.size(); ++p) {
    PointResult pr;
    pr.point = plan.points[p];
    pr.columns = columns;
    for (std::size_t r = 0; r < R; ++r) {
      out.total_events += results[p * R + r].events;
      pr.replicas.push_back(std::move(results[p * R + r]));
    }
    pr.report = moment_report(plan, pr);
    out.points.push_back(std::move(pr));
  }
  return out;
}

}  // namespace kpzlab
