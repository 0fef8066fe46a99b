#include "kpzlab/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace kpzlab {

double Params::asymmetry() const { return a * std::pow(static_cast<double>(n), -theta); }

void Params::validate() const {
  if (n < 1) throw std::invalid_argument("params: n must be >= 1");
  if (ell < 1) throw std::invalid_argument("params: ell must be >= 1");
  if (theta < 0.0) throw std::invalid_argument("params: theta must be >= 0");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("params: rho must lie in (0,1)");
  if (std::abs(asymmetry()) > 1.0) throw std::invalid_argument("params: |a n^{-theta}| must be <= 1");
}

nlohmann::json Params::to_json() const {
  return {{"n", n}, {"a", a}, {"theta", theta}, {"rho", rho}, {"ell", ell}, {"L", L()}};
}

// ---------------------------------------------------------------------------

SumTree::SumTree(std::size_t leaves) : leaves_(leaves), cap_(std::bit_ceil(std::max<std::size_t>(leaves, 1))) {
  node_.assign(2 * cap_, 0.0);
}

void SumTree::set(std::size_t i, double v) {
  std::size_t k = cap_ + i;
  node_[k] = v;
  for (k >>= 1; k >= 1; k >>= 1) node_[k] = node_[2 * k] + node_[2 * k + 1];
}

void SumTree::rebuild(const std::vector<double>& leaves) {
  if (leaves.size() != leaves_) throw std::invalid_argument("SumTree::rebuild: size mismatch");
  std::fill(node_.begin(), node_.end(), 0.0);
  std::copy(leaves.begin(), leaves.end(), node_.begin() + static_cast<std::ptrdiff_t>(cap_));
  for (std::size_t k = cap_ - 1; k >= 1; --k) node_[k] = node_[2 * k] + node_[2 * k + 1];
}

std::size_t SumTree::find(double target) const {
  std::size_t k = 1;
  while (k < cap_) {
    const double left = node_[2 * k];
    if (target < left || node_[2 * k + 1] <= 0.0) {
      k = 2 * k;
    } else {
      target -= left;
      k = 2 * k + 1;
    }
  }
  return std::min(k - cap_, leaves_ - 1);
}

// ---------------------------------------------------------------------------

Model::Model(Params params, RateModel rates) : params_(params), rates_(std::move(rates)) {
  params_.validate();
  L_ = params_.L();
  n2_ = static_cast<double>(params_.n) * static_cast<double>(params_.n);
  const auto& c = rates_.c();
  wlo_ = std::min(c.lo(), 0);
  whi_ = std::max(c.hi(), 1);
  if (whi_ - wlo_ + 1 >= L_) throw std::invalid_argument("Model: rate window does not fit in the ring");
  const double p = params_.p();
  const double q = params_.q();
  rate_.resize(std::size_t{1} << (whi_ - wlo_ + 1));
  for (std::uint32_t pat = 0; pat < rate_.size(); ++pat) {
    const PatternView e(wlo_, pat);
    const double cv = eval_on_pattern(c, wlo_, pat);
    rate_[pat] = n2_ * cv * (p * e(0) * (1 - e(1)) + q * e(1) * (1 - e(0)));
  }
}

std::uint32_t Model::bond_pattern(const Configuration& eta, std::int64_t x) const {
  std::uint32_t p = 0;
  const int w = whi_ - wlo_ + 1;
  const std::int64_t s = x + wlo_;
  if (s >= 0 && s + w <= L_) {
    for (int j = 0; j < w; ++j) p |= static_cast<std::uint32_t>(eta.at_unchecked(s + j)) << j;
  } else {
    for (int j = 0; j < w; ++j) p |= static_cast<std::uint32_t>(eta[s + j]) << j;
  }
  return p;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
bool get_le(std::istream& in, T& v) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  std::memcpy(&v, buf, sizeof(T));
  return true;
}

constexpr char kLogMagic[] = "KPZLOG1\n";

}  // namespace

EventLogWriter::EventLogWriter(std::ostream& out, const nlohmann::json& header) : out_(out) {
  out_.write(kLogMagic, 8);
  const std::string h = header.dump();
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(h.size()));
  out_.write(h.data(), static_cast<std::streamsize>(h.size()));
}

void EventLogWriter::record(double t, std::int64_t bond, int direction) {
  put_le<double>(out_, t);
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(bond));
  put_le<std::uint8_t>(out_, direction > 0 ? 0 : 1);
}

EventLog read_event_log(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kLogMagic, 8) != 0)
    throw std::runtime_error("event log: bad magic");
  std::uint32_t hlen = 0;
  if (!get_le(in, hlen)) throw std::runtime_error("event log: truncated header");
  std::string h(hlen, '\0');
  if (!in.read(h.data(), hlen)) throw std::runtime_error("event log: truncated header");
  EventLog log;
  log.header = nlohmann::json::parse(h);
  for (;;) {
    EventRecord r{};
    if (!get_le(in, r.t)) break;
    std::uint8_t d = 0;
    if (!get_le(in, r.bond) || !get_le(in, d)) throw std::runtime_error("event log: truncated record");
    r.direction = d == 0 ? 1 : -1;
    log.records.push_back(r);
  }
  return log;
}

// ---------------------------------------------------------------------------

SimState::SimState(const Model& model, Configuration eta, std::uint64_t seed, std::uint64_t stream)
    : model_(&model),
      eta_(std::move(eta)),
      tree_(static_cast<std::size_t>(model.L())),
      right_(static_cast<std::size_t>(model.L()), 0),
      left_(static_cast<std::size_t>(model.L()), 0),
      rng_(seed, stream) {
  if (eta_.size() != model.L())
    throw std::invalid_argument("SimState: configuration length " + std::to_string(eta_.size()) +
                                " differs from ring length " + std::to_string(model.L()));
  std::vector<double> r(static_cast<std::size_t>(model.L()));
  for (std::int64_t x = 0; x < model.L(); ++x) r[static_cast<std::size_t>(x)] = model.bond_rate(eta_, x);
  tree_.rebuild(r);
}

std::vector<std::int64_t> SimState::currents() const {
  std::vector<std::int64_t> j(right_.size());
  for (std::size_t i = 0; i < j.size(); ++i) j[i] = right_[i] - left_[i];
  return j;
}

std::optional<Event> SimState::draw() {
  const double total = tree_.total();
  if (!(total > 0.0)) return std::nullopt;
  const double dt = rng_.exponential(total);
  const auto bond = static_cast<std::int64_t>(tree_.find(rng_.uniform() * total));
  const int dir = eta_.at_unchecked(bond) == 1 ? 1 : -1;
  return Event{dt, bond, dir};
}

void SimState::refresh_bond(std::int64_t x) {
  const std::int64_t y = eta_.wrap(x);
  tree_.set(static_cast<std::size_t>(y), model_->bond_rate(eta_, y));
}

void SimState::apply(const Event& ev) {
  t_ += ev.dt;
  eta_.swap_in_place(ev.bond);
  if (ev.direction > 0)
    ++right_[static_cast<std::size_t>(ev.bond)];
  else
    ++left_[static_cast<std::size_t>(ev.bond)];
  ++events_;
  const std::int64_t from = ev.bond - model_->window_hi();
  const std::int64_t to = ev.bond + 1 - model_->window_lo();
  for (std::int64_t y = from; y <= to; ++y) refresh_bond(y);
  if (log_) log_->record(t_, ev.bond, ev.direction);
}

std::optional<Event> SimState::step() {
  auto ev = draw();
  if (ev) apply(*ev);
  return ev;
}

void SimState::advance_clock_to(double t) {
  if (t < t_) throw std::invalid_argument("SimState: clock cannot run backwards");
  t_ = t;
}

bool SimState::audit() const {
  SumTree fresh(static_cast<std::size_t>(model_->L()));
  std::vector<double> r(static_cast<std::size_t>(model_->L()));
  for (std::int64_t x = 0; x < model_->L(); ++x) r[static_cast<std::size_t>(x)] = model_->bond_rate(eta_, x);
  fresh.rebuild(r);
  return fresh == tree_;
}

// ---------------------------------------------------------------------------

double apply_generator(const Functional& F, const Configuration& eta, const Model& model) {
  const double base = F(eta);
  double v = 0.0;
  for (std::int64_t x = 0; x < eta.size(); ++x) {
    const double r = model.bond_rate(eta, x);
    if (r == 0.0) continue;
    v += r * (F(swap_bond(eta, x)) - base);
  }
  return v;
}

double carre_du_champ(const Functional& F, const Configuration& eta, const Model& model) {
  const Functional F2 = [&F](const Configuration& e) {
    const double v = F(e);
    return v * v;
  };
  return apply_generator(F2, eta, model) - 2.0 * F(eta) * apply_generator(F, eta, model);
}

}  // namespace kpzlab
