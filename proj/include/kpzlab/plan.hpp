#ifndef KPZLAB_PLAN_HPP
#define KPZLAB_PLAN_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "kpzlab/dynamics.hpp"
#include "kpzlab/lattice.hpp"

namespace kpzlab {

/// One point of the parameter grid.
struct ModelPoint {
  Params params;
  std::string rates = "wasep";  // preset name
  double b = 1.0;               // gradient-b coefficient

  RateModel rate_model() const { return preset_rates(rates, b); }
  nlohmann::json to_json() const;
};

enum class InitialLaw {
  GrandCanonical,  // Bernoulli product at density rho
  Canonical,       // uniform with exactly round(rho L) particles
};

struct ExperimentPlan {
  std::vector<ModelPoint> points;
  std::int64_t replicas = 1;
  double T = 1.0;
  double sample_dt = 0.1;
  std::uint64_t master_seed = 1;
  InitialLaw init = InitialLaw::GrandCanonical;
  std::vector<std::string> test_functions{"sin:1"};
  std::vector<std::int64_t> marked_bonds{0};
  std::vector<double> epsilons;             // quadratic fields, block length eps n
  std::vector<std::int64_t> block_sizes;    // block drift fields
  std::vector<double> cutoffs;              // Y*(G_l) for the cutoff profiles G_l
  bool write_replicas = true;
  std::string event_log_dir;  // when set, every replica dumps its jumps here

  std::vector<double> sample_times() const;
  nlohmann::json to_json() const;
};

/// Build a plan from parsed TOML. Keys live in [run], [model], [fields]
/// and [output]; every [model] entry may be a scalar or a list, and the grid
/// is the Cartesian product of the lists. model.rho = "zero-velocity" picks
/// the density where the drift has no linear part for each rate model.
/// Unknown keys are rejected by name.
ExperimentPlan plan_from_config(const nlohmann::json& cfg);

/// Seed stream of replica r at grid point p (initial law); the dynamics use
/// splitmix64 of it.
std::uint64_t replica_stream(std::size_t point, std::int64_t replica);

/// n^2 L T R E[c eta(0)(1 - eta(1))], summed over the grid: the mean number
/// of jump attempts the plan will execute.
double estimate_events(const ExperimentPlan& plan);

struct ReplicaResult {
  std::int64_t replica = 0;
  std::uint64_t stream = 0;
  std::uint64_t events = 0;
  std::vector<std::vector<double>> rows;  // [sample][column]
  double identity_defect = 0.0;           // max |Y - Y0 - I - A - M|
  bool continuity = true;                 // at every sample
  bool qv_monotone = true;
};

struct PointResult {
  ModelPoint point;
  std::vector<std::string> columns;
  std::vector<ReplicaResult> replicas;
  nlohmann::json report;  // MomentReport
};

struct PlanResult {
  std::vector<PointResult> points;
  std::uint64_t total_events = 0;
  double estimated_events = 0.0;
};

struct RunOptions {
  unsigned jobs = 1;
  double budget_events = 2e10;
  /// Called after each replica finishes (from worker threads, serialized).
  std::function<void(std::size_t point, std::int64_t replica, std::uint64_t events)> progress;
};

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(double estimate, double budget);
  double estimate;
  double budget;
};

/// Column names of one grid point, in output order.
std::vector<std::string> plan_columns(const ExperimentPlan& plan);

/// Run one replica of one grid point.
ReplicaResult run_replica(const ExperimentPlan& plan, std::size_t point, std::int64_t replica);

/// Run every replica of every point on a pool of `jobs` workers. Results are
/// stored by index and reduced in order, so the output does not depend on
/// the number of workers.
PlanResult run_plan(const ExperimentPlan& plan, const RunOptions& opts = {});

/// Per-column moments at every sample, covariances of the Y columns at the
/// final sample, batch-means intervals and the A-increment exponent.
nlohmann::json moment_report(const ExperimentPlan& plan, const PointResult& pr);

/// Run `fn(i)` for i in [0, count) on `jobs` threads; exceptions are rethrown
/// in the caller (first by index).
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace kpzlab

#endif  // KPZLAB_PLAN_HPP
