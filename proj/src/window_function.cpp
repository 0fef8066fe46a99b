#include "kpzlab/window_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace kpzlab {

WindowFunction::WindowFunction(int lo, int hi, std::vector<double> table)
    : lo_(lo), hi_(hi), table_(std::move(table)) {
  if (hi_ < lo_) throw std::invalid_argument("WindowFunction: window must satisfy lo <= hi");
  if (width() > kMaxWindowWidth)
    throw std::invalid_argument("WindowFunction: window wider than " + std::to_string(kMaxWindowWidth) +
                                " sites");
  if (table_.size() != (std::size_t{1} << width()))
    throw std::invalid_argument("WindowFunction: table must have 2^w entries (w = " + std::to_string(width()) +
                                ", got " + std::to_string(table_.size()) + ")");
}

WindowFunction WindowFunction::tabulate(int lo, int hi, const std::function<double(const PatternView&)>& fn) {
  if (hi < lo || hi - lo + 1 > kMaxWindowWidth) throw std::invalid_argument("WindowFunction: bad window");
  const std::size_t n = std::size_t{1} << (hi - lo + 1);
  std::vector<double> t(n);
  for (std::size_t p = 0; p < n; ++p) t[p] = fn(PatternView(lo, static_cast<std::uint32_t>(p)));
  return WindowFunction(lo, hi, std::move(t));
}

WindowFunction WindowFunction::occupation(int site) {
  return WindowFunction(site, site, {0.0, 1.0});
}

std::uint32_t WindowFunction::pattern_at(const Configuration& eta, std::int64_t x) const {
  std::uint32_t p = 0;
  const int w = width();
  for (int j = 0; j < w; ++j) p |= static_cast<std::uint32_t>(eta[x + lo_ + j]) << j;
  return p;
}

double WindowFunction::eval(const Configuration& eta, std::int64_t x) const {
  if (width() >= eta.size())
    throw std::invalid_argument("WindowFunction::eval: window width " + std::to_string(width()) +
                                " does not fit in ring of length " + std::to_string(eta.size()));
  return table_[pattern_at(eta, x)];
}

double eval_on_pattern(const WindowFunction& f, int lo, std::uint32_t bits) {
  const int shift = f.lo() - lo;
  const std::uint32_t mask = (1u << f.width()) - 1u;
  return f.value((bits >> shift) & mask);
}

WindowFunction WindowFunction::extended(int lo2, int hi2) const {
  if (lo2 > lo_ || hi2 < hi_) throw std::invalid_argument("WindowFunction::extended: window must grow");
  return tabulate(lo2, hi2, [&](const PatternView& v) { return eval_on_pattern(*this, lo2, v.bits()); });
}

bool WindowFunction::independent_of(int site) const {
  if (site < lo_ || site > hi_) return true;
  const std::uint32_t bit = 1u << (site - lo_);
  for (std::uint32_t p = 0; p < table_.size(); ++p)
    if ((p & bit) == 0 && table_[p] != table_[p | bit]) return false;
  return true;
}

WindowFunction WindowFunction::trimmed() const {
  int lo = lo_;
  int hi = hi_;
  while (lo < hi && independent_of(lo)) ++lo;
  while (hi > lo && independent_of(hi)) --hi;
  if (lo == lo_ && hi == hi_) return *this;
  // Read the table with the dropped sites fixed to 0.
  return tabulate(lo, hi, [&](const PatternView& v) { return table_[v.bits() << (lo - lo_)]; });
}

WindowFunction WindowFunction::combine(const WindowFunction& other,
                                       const std::function<double(double, double)>& op) const {
  const int lo = std::min(lo_, other.lo_);
  const int hi = std::max(hi_, other.hi_);
  return tabulate(lo, hi, [&](const PatternView& v) {
    return op(eval_on_pattern(*this, lo, v.bits()), eval_on_pattern(other, lo, v.bits()));
  });
}

WindowFunction WindowFunction::operator+(const WindowFunction& o) const {
  return combine(o, [](double u, double v) { return u + v; });
}
WindowFunction WindowFunction::operator-(const WindowFunction& o) const {
  return combine(o, [](double u, double v) { return u - v; });
}
WindowFunction WindowFunction::operator*(const WindowFunction& o) const {
  return combine(o, [](double u, double v) { return u * v; });
}
WindowFunction WindowFunction::operator*(double s) const {
  auto t = table_;
  for (auto& v : t) v *= s;
  return WindowFunction(lo_, hi_, std::move(t));
}
WindowFunction WindowFunction::operator+(double s) const {
  auto t = table_;
  for (auto& v : t) v += s;
  return WindowFunction(lo_, hi_, std::move(t));
}

double WindowFunction::min_value() const { return *std::min_element(table_.begin(), table_.end()); }
double WindowFunction::max_value() const { return *std::max_element(table_.begin(), table_.end()); }

nlohmann::json WindowFunction::to_json() const {
  return nlohmann::json{{"window", {lo_, hi_}}, {"table", table_}};
}

WindowFunction WindowFunction::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("window") || !j.contains("table"))
    throw std::invalid_argument("WindowFunction JSON: expected {\"window\":[lo,hi],\"table\":[...]}");
  const auto& w = j.at("window");
  if (!w.is_array() || w.size() != 2) throw std::invalid_argument("WindowFunction JSON: window must be [lo,hi]");
  return WindowFunction(w[0].get<int>(), w[1].get<int>(), j.at("table").get<std::vector<double>>());
}

}  // namespace kpzlab
