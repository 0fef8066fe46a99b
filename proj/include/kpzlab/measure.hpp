#ifndef KPZLAB_MEASURE_HPP
#define KPZLAB_MEASURE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "kpzlab/configuration.hpp"
#include "kpzlab/dynamics.hpp"
#include "kpzlab/window_function.hpp"

namespace kpzlab {

/// A functional of the configuration that is kept up to date across swaps.
/// Subclasses adjust `value_` in before_swap/after_swap using only the sites
/// touched by the swap.
class Observable {
 public:
  virtual ~Observable() = default;
  virtual double evaluate(const Configuration& eta) const = 0;
  virtual std::unique_ptr<Observable> clone() const = 0;
  virtual void before_swap(const Configuration& eta, std::int64_t bond) = 0;
  virtual void after_swap(const Configuration& eta, std::int64_t bond) = 0;

  /// Rebuild any cached state and the value from scratch.
  void reset(const Configuration& eta) {
    prepare(eta);
    value_ = evaluate(eta);
  }
  double value() const { return value_; }

 protected:
  virtual void prepare(const Configuration&) {}
  double value_ = 0.0;
};

class ConstantObservable final : public Observable {
 public:
  explicit ConstantObservable(double v) : v_(v) { value_ = v; }
  double evaluate(const Configuration&) const override { return v_; }
  std::unique_ptr<Observable> clone() const override { return std::make_unique<ConstantObservable>(*this); }
  void before_swap(const Configuration&, std::int64_t) override {}
  void after_swap(const Configuration&, std::int64_t) override {}

 private:
  double v_;
};

/// offset + sum_x w_x eta(x)
class LinearObservable final : public Observable {
 public:
  LinearObservable(std::vector<double> weights, double offset) : w_(std::move(weights)), offset_(offset) {}
  double evaluate(const Configuration& eta) const override;
  std::unique_ptr<Observable> clone() const override { return std::make_unique<LinearObservable>(*this); }
  void before_swap(const Configuration&, std::int64_t) override {}
  void after_swap(const Configuration& eta, std::int64_t bond) override;

 private:
  std::vector<double> w_;
  double offset_;
};

/// offset + sum_x w_x tau_x phi(eta)
class LocalSumObservable final : public Observable {
 public:
  LocalSumObservable(WindowFunction phi, std::vector<double> weights, double offset = 0.0);
  double evaluate(const Configuration& eta) const override;
  std::unique_ptr<Observable> clone() const override { return std::make_unique<LocalSumObservable>(*this); }
  void before_swap(const Configuration& eta, std::int64_t bond) override { adjust(eta, bond, -1.0); }
  void after_swap(const Configuration& eta, std::int64_t bond) override { adjust(eta, bond, +1.0); }

 private:
  void adjust(const Configuration& eta, std::int64_t bond, double sign);
  WindowFunction phi_;
  std::vector<double> w_;
  double offset_;
};

/// offset + sum_j w_j table[N_j], where N_j is the particle number of block j,
/// the k sites first + j k, ..., first + j k + k - 1.
class BlockObservable final : public Observable {
 public:
  BlockObservable(std::int64_t k, std::int64_t first, std::vector<double> table, std::vector<double> block_weights,
                  double offset = 0.0);
  double evaluate(const Configuration& eta) const override;
  std::unique_ptr<Observable> clone() const override { return std::make_unique<BlockObservable>(*this); }
  void before_swap(const Configuration&, std::int64_t) override {}
  void after_swap(const Configuration& eta, std::int64_t bond) override;

 protected:
  void prepare(const Configuration& eta) override;

 private:
  std::int64_t block_of(std::int64_t site, std::int64_t L) const;
  std::int64_t k_;
  std::int64_t first_;
  std::vector<double> table_;
  std::vector<double> w_;
  double offset_;
  std::vector<std::int64_t> counts_;
};

/// Sum of two observables with coefficients.
class CombinationObservable final : public Observable {
 public:
  CombinationObservable(std::unique_ptr<Observable> a, double ca, std::unique_ptr<Observable> b, double cb);
  CombinationObservable(const CombinationObservable& o);
  double evaluate(const Configuration& eta) const override;
  std::unique_ptr<Observable> clone() const override { return std::make_unique<CombinationObservable>(*this); }
  void before_swap(const Configuration& eta, std::int64_t bond) override;
  void after_swap(const Configuration& eta, std::int64_t bond) override;

 protected:
  void prepare(const Configuration& eta) override;

 private:
  std::unique_ptr<Observable> a_;
  std::unique_ptr<Observable> b_;
  double ca_;
  double cb_;
};

using ObservableList = std::vector<std::unique_ptr<Observable>>;
ObservableList clone_all(const ObservableList& list);

/// Sampled trajectory of a set of observables. `values[i][s]` is observable i
/// at sample s; `integrals[i][s]` is its exact time integral from the start
/// of the run to sample s; `currents[s][j]` is the net current at marked bond j.
struct FieldSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> integrals;
  std::vector<std::vector<std::int64_t>> currents;
  std::uint64_t events = 0;
};

struct MeasureOptions {
  std::vector<double> sample_times;        // sorted, within [t0, T]
  std::vector<std::int64_t> marked_bonds;  // currents recorded at samples
  /// Called at every sample (index, time) after values are refreshed. The
  /// state's own clock still shows the last event time.
  std::function<void(const SimState&, std::size_t, double)> on_sample;
};

/// Run until time T. The configuration is piecewise constant, so every time
/// integral is accumulated as value times holding time, with a segment closed
/// only when the value changes. Values are recomputed from scratch at samples.
FieldSeries run_measured(SimState& state, ObservableList& observables, double T, const MeasureOptions& opts);

/// Uniform grid dt, 2dt, ..., up to T (and 0 when include_zero).
std::vector<double> uniform_times(double T, double dt, bool include_zero = true);

}  // namespace kpzlab

#endif  // KPZLAB_MEASURE_HPP
