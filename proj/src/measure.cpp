#include "kpzlab/measure.hpp"

#include <algorithm>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kpzlab {

double LinearObservable::evaluate(const Configuration& eta) const {
  if (static_cast<std::int64_t>(w_.size()) != eta.size())
    throw std::invalid_argument("LinearObservable: weight vector does not match the ring");
  double v = 0.0;
  for (std::int64_t x = 0; x < eta.size(); ++x)
    if (eta.at_unchecked(x)) v += w_[static_cast<std::size_t>(x)];
  return offset_ + v;
}

void LinearObservable::after_swap(const Configuration& eta, std::int64_t bond) {
  const std::int64_t x = eta.wrap(bond);
  const std::int64_t y = eta.wrap(bond + 1);
  const int d = eta.at_unchecked(x) - eta.at_unchecked(y);
  value_ += d * (w_[static_cast<std::size_t>(x)] - w_[static_cast<std::size_t>(y)]);
}

LocalSumObservable::LocalSumObservable(WindowFunction phi, std::vector<double> weights, double offset)
    : phi_(std::move(phi)), w_(std::move(weights)), offset_(offset) {}

double LocalSumObservable::evaluate(const Configuration& eta) const {
  if (static_cast<std::int64_t>(w_.size()) != eta.size())
    throw std::invalid_argument("LocalSumObservable: weight vector does not match the ring");
  double v = 0.0;
  for (std::int64_t x = 0; x < eta.size(); ++x) {
    const double w = w_[static_cast<std::size_t>(x)];
    if (w != 0.0) v += w * phi_.eval(eta, x);
  }
  return offset_ + v;
}

void LocalSumObservable::adjust(const Configuration& eta, std::int64_t bond, double sign) {
  const std::int64_t from = bond - phi_.hi();
  const std::int64_t to = bond + 1 - phi_.lo();
  for (std::int64_t x = from; x <= to; ++x) {
    const std::int64_t y = eta.wrap(x);
    const double w = w_[static_cast<std::size_t>(y)];
    if (w != 0.0) value_ += sign * w * phi_.value(phi_.pattern_at(eta, y));
  }
}

BlockObservable::BlockObservable(std::int64_t k, std::int64_t first, std::vector<double> table,
                                 std::vector<double> block_weights, double offset)
    : k_(k), first_(first), table_(std::move(table)), w_(std::move(block_weights)), offset_(offset) {
  if (k_ < 1) throw std::invalid_argument("BlockObservable: k must be positive");
  if (static_cast<std::int64_t>(table_.size()) != k_ + 1)
    throw std::invalid_argument("BlockObservable: table must have k+1 entries");
}

std::int64_t BlockObservable::block_of(std::int64_t site, std::int64_t L) const {
  std::int64_t r = (site - first_) % L;
  if (r < 0) r += L;
  return r / k_;
}

void BlockObservable::prepare(const Configuration& eta) {
  const std::int64_t L = eta.size();
  if (L % k_ != 0) throw std::invalid_argument("BlockObservable: k must divide the ring length");
  if (static_cast<std::int64_t>(w_.size()) != L / k_)
    throw std::invalid_argument("BlockObservable: need one weight per block");
  counts_.assign(static_cast<std::size_t>(L / k_), 0);
  for (std::int64_t j = 0; j < L / k_; ++j)
    for (std::int64_t i = 0; i < k_; ++i) counts_[static_cast<std::size_t>(j)] += eta[first_ + j * k_ + i];
}

double BlockObservable::evaluate(const Configuration& eta) const {
  const std::int64_t L = eta.size();
  if (L % k_ != 0) throw std::invalid_argument("BlockObservable: k must divide the ring length");
  double v = 0.0;
  for (std::int64_t j = 0; j < L / k_; ++j) {
    std::int64_t c = 0;
    for (std::int64_t i = 0; i < k_; ++i) c += eta[first_ + j * k_ + i];
    v += w_[static_cast<std::size_t>(j)] * table_[static_cast<std::size_t>(c)];
  }
  return offset_ + v;
}

void BlockObservable::after_swap(const Configuration& eta, std::int64_t bond) {
  const std::int64_t L = eta.size();
  if (counts_.empty()) prepare(eta);
  const std::int64_t bx = block_of(bond, L);
  const std::int64_t by = block_of(bond + 1, L);
  if (bx == by) return;
  // After the swap, site bond holds what site bond+1 held and vice versa.
  const int moved_right = eta[bond + 1] - eta[bond];  // +1: a particle moved from bx to by
  auto& cx = counts_[static_cast<std::size_t>(bx)];
  auto& cy = counts_[static_cast<std::size_t>(by)];
  const double wx = w_[static_cast<std::size_t>(bx)];
  const double wy = w_[static_cast<std::size_t>(by)];
  value_ -= wx * table_[static_cast<std::size_t>(cx)] + wy * table_[static_cast<std::size_t>(cy)];
  cx -= moved_right;
  cy += moved_right;
  value_ += wx * table_[static_cast<std::size_t>(cx)] + wy * table_[static_cast<std::size_t>(cy)];
}

CombinationObservable::CombinationObservable(std::unique_ptr<Observable> a, double ca, std::unique_ptr<Observable> b,
                                             double cb)
    : a_(std::move(a)), b_(std::move(b)), ca_(ca), cb_(cb) {}

CombinationObservable::CombinationObservable(const CombinationObservable& o)
    : Observable(o), a_(o.a_->clone()), b_(o.b_->clone()), ca_(o.ca_), cb_(o.cb_) {}

double CombinationObservable::evaluate(const Configuration& eta) const {
  a_->reset(eta);
  b_->reset(eta);
  return ca_ * a_->value() + cb_ * b_->value();
}

void CombinationObservable::prepare(const Configuration& eta) {
  a_->reset(eta);
  b_->reset(eta);
}

void CombinationObservable::before_swap(const Configuration& eta, std::int64_t bond) {
  a_->before_swap(eta, bond);
  b_->before_swap(eta, bond);
}

void CombinationObservable::after_swap(const Configuration& eta, std::int64_t bond) {
  a_->after_swap(eta, bond);
  b_->after_swap(eta, bond);
  value_ = ca_ * a_->value() + cb_ * b_->value();
}

ObservableList clone_all(const ObservableList& list) {
  ObservableList out;
  out.reserve(list.size());
  for (const auto& o : list) out.push_back(o->clone());
  return out;
}

std::vector<double> uniform_times(double T, double dt, bool include_zero) {
  if (!(dt > 0.0)) throw std::invalid_argument("uniform_times: dt must be positive");
  std::vector<double> t;
  if (include_zero) t.push_back(0.0);
  const auto steps = static_cast<std::int64_t>(std::floor(T / dt + 1e-9));
  for (std::int64_t i = 1; i <= steps; ++i) t.push_back(std::min(T, static_cast<double>(i) * dt));
  return t;
}

FieldSeries run_measured(SimState& state, ObservableList& observables, double T, const MeasureOptions& opts) {
  const double t0 = state.t();
  if (T < t0) throw std::invalid_argument("run_measured: T precedes the current time");
  for (std::size_t s = 0; s < opts.sample_times.size(); ++s) {
    const double ts = opts.sample_times[s];
    if (ts < t0 || ts > T || (s > 0 && ts < opts.sample_times[s - 1]))
      throw std::invalid_argument("run_measured: sample times must be sorted and lie in [t0, T]");
  }
  const std::size_t nobs = observables.size();
  const std::size_t nsamp = opts.sample_times.size();
  FieldSeries out;
  out.times = opts.sample_times;
  out.values.assign(nobs, std::vector<double>(nsamp, 0.0));
  out.integrals.assign(nobs, std::vector<double>(nsamp, 0.0));
  out.currents.assign(nsamp, std::vector<std::int64_t>(opts.marked_bonds.size(), 0));

  for (auto& o : observables) o->reset(state.eta());
  // Integral bookkeeping: closed segments in acc, the open one since seg_start.
  std::vector<double> acc(nobs, 0.0);
  std::vector<double> seg_start(nobs, t0);
  std::vector<double> seg_value(nobs);
  for (std::size_t i = 0; i < nobs; ++i) seg_value[i] = observables[i]->value();

  auto close_if_changed = [&](std::size_t i, double t) {
    const double v = observables[i]->value();
    if (v != seg_value[i]) {
      acc[i] += seg_value[i] * (t - seg_start[i]);
      seg_start[i] = t;
      seg_value[i] = v;
    }
  };

  const std::uint64_t events0 = state.events();
  std::size_t next = 0;
  for (;;) {
    const auto ev = state.draw();
    const double t_next = ev ? state.t() + ev->dt : std::numeric_limits<double>::infinity();
    while (next < nsamp && opts.sample_times[next] < t_next) {
      const double ts = opts.sample_times[next];
      for (std::size_t i = 0; i < nobs; ++i) {
        observables[i]->reset(state.eta());
        close_if_changed(i, ts);
        out.values[i][next] = observables[i]->value();
        out.integrals[i][next] = acc[i] + seg_value[i] * (ts - seg_start[i]);
      }
      for (std::size_t j = 0; j < opts.marked_bonds.size(); ++j)
        out.currents[next][j] = state.current(opts.marked_bonds[j]);
      if (opts.on_sample) opts.on_sample(state, next, ts);
      ++next;
    }
    if (!(t_next <= T)) {
      state.advance_clock_to(std::max(state.t(), T));
      break;
    }
    for (auto& o : observables) o->before_swap(state.eta(), ev->bond);
    state.apply(*ev);
    for (std::size_t i = 0; i < nobs; ++i) {
      observables[i]->after_swap(state.eta(), ev->bond);
      close_if_changed(i, state.t());
    }
  }
  out.events = state.events() - events0;
  return out;
}

}  // namespace kpzlab
