#ifndef KPZLAB_DYNAMICS_HPP
#define KPZLAB_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kpzlab/configuration.hpp"
#include "kpzlab/lattice.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

/// Scaling parameters. The ring has L = ell * n sites and the asymmetry is
/// p_n - q_n = a n^{-theta}.
struct Params {
  std::int64_t n = 64;
  double a = 1.0;
  double theta = 0.5;
  double rho = 0.5;
  std::int64_t ell = 4;

  std::int64_t L() const { return ell * n; }
  double asymmetry() const;  // a n^{-theta}
  double p() const { return 0.5 * (1.0 + asymmetry()); }
  double q() const { return 1.0 - p(); }
  void validate() const;
  nlohmann::json to_json() const;
};

/// Binary tree of partial sums over a fixed number of leaves. Internal nodes
/// are always recomputed from their children, so an incrementally maintained
/// tree is bitwise identical to one rebuilt from the same leaves.
class SumTree {
 public:
  SumTree() = default;
  explicit SumTree(std::size_t leaves);

  std::size_t size() const { return leaves_; }
  double total() const { return node_[1]; }
  double leaf(std::size_t i) const { return node_[cap_ + i]; }
  void set(std::size_t i, double v);
  void rebuild(const std::vector<double>& leaves);
  /// Leaf index whose cumulative interval contains `target` in [0, total).
  std::size_t find(double target) const;
  friend bool operator==(const SumTree& a, const SumTree& b) { return a.node_ == b.node_; }

 private:
  std::size_t leaves_ = 0;
  std::size_t cap_ = 1;
  std::vector<double> node_ = std::vector<double>(2, 0.0);
};

/// Immutable description of the jump process: parameters, rates and the
/// per-pattern bond activity table.
class Model {
 public:
  Model(Params params, RateModel rates);

  const Params& params() const { return params_; }
  const RateModel& rates() const { return rates_; }
  std::int64_t L() const { return L_; }
  double n2() const { return n2_; }

  /// Sites read by the activity of bond (x, x+1), relative to x.
  int window_lo() const { return wlo_; }
  int window_hi() const { return whi_; }

  std::uint32_t bond_pattern(const Configuration& eta, std::int64_t x) const;
  /// n^2 c_x(eta)[p eta(x)(1-eta(x+1)) + q eta(x+1)(1-eta(x))]
  double bond_rate(const Configuration& eta, std::int64_t x) const { return rate_[bond_pattern(eta, x)]; }

 private:
  Params params_;
  RateModel rates_;
  std::int64_t L_;
  double n2_;
  int wlo_;
  int whi_;
  std::vector<double> rate_;
};

struct Event {
  double dt;           // holding time before the jump
  std::int64_t bond;   // jump across (bond, bond+1)
  int direction;       // +1 rightward, -1 leftward
};

/// Binary event log: "KPZLOG1\n", u32 header length, JSON header, then
/// records (f64 absolute time, u32 bond, u8 direction: 0 right / 1 left),
/// all little-endian.
class EventLogWriter {
 public:
  EventLogWriter(std::ostream& out, const nlohmann::json& header);
  void record(double t, std::int64_t bond, int direction);

 private:
  std::ostream& out_;
};

struct EventRecord {
  double t;
  std::uint32_t bond;
  int direction;  // +1 rightward, -1 leftward, as in Event
};

struct EventLog {
  nlohmann::json header;
  std::vector<EventRecord> records;
};

EventLog read_event_log(std::istream& in);

/// Mutable simulation state of one replica.
class SimState {
 public:
  SimState(const Model& model, Configuration eta, std::uint64_t seed, std::uint64_t stream);

  const Model& model() const { return *model_; }
  const Configuration& eta() const { return eta_; }
  double t() const { return t_; }
  std::uint64_t events() const { return events_; }
  double total_rate() const { return tree_.total(); }
  const SumTree& rate_index() const { return tree_; }

  std::int64_t right_jumps(std::int64_t x) const { return right_[static_cast<std::size_t>(eta_.wrap(x))]; }
  std::int64_t left_jumps(std::int64_t x) const { return left_[static_cast<std::size_t>(eta_.wrap(x))]; }
  /// Net particle current across (x, x+1).
  std::int64_t current(std::int64_t x) const { return right_jumps(x) - left_jumps(x); }
  std::vector<std::int64_t> currents() const;

  /// Draw the next holding time and bond without applying it. Returns nullopt
  /// in an absorbing state (total rate zero).
  std::optional<Event> draw();
  /// Apply a drawn event: advance the clock by ev.dt, swap, update counts and rates.
  void apply(const Event& ev);
  /// draw + apply.
  std::optional<Event> step();

  /// Advance the clock without an event (used when a run stops between events).
  void advance_clock_to(double t);

  /// True when the incremental rate index equals a full rebuild bit for bit.
  bool audit() const;

  void set_event_log(EventLogWriter* log) { log_ = log; }

 private:
  void refresh_bond(std::int64_t x);

  const Model* model_;
  Configuration eta_;
  double t_ = 0.0;
  std::uint64_t events_ = 0;
  SumTree tree_;
  std::vector<std::int64_t> right_;
  std::vector<std::int64_t> left_;
  Philox rng_;
  EventLogWriter* log_ = nullptr;
};

using Functional = std::function<double(const Configuration&)>;

/// Pointwise L_n F(eta) = sum_x rate_x(eta)[F(eta^{x,x+1}) - F(eta)].
double apply_generator(const Functional& F, const Configuration& eta, const Model& model);

/// L_n(F^2) - 2 F L_n F at eta.
double carre_du_champ(const Functional& F, const Configuration& eta, const Model& model);

}  // namespace kpzlab

#endif  // KPZLAB_DYNAMICS_HPP
