#ifndef KPZLAB_WINDOW_FUNCTION_HPP
#define KPZLAB_WINDOW_FUNCTION_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kpzlab/configuration.hpp"

namespace kpzlab {

inline constexpr int kMaxWindowWidth = 16;

/// Read-only view of the sites of one window pattern: bit j of the pattern is
/// the occupancy of site lo + j.
class PatternView {
 public:
  PatternView(int lo, std::uint32_t bits) : lo_(lo), bits_(bits) {}
  int operator()(int site) const { return static_cast<int>((bits_ >> (site - lo_)) & 1u); }
  std::uint32_t bits() const { return bits_; }

 private:
  int lo_;
  std::uint32_t bits_;
};

/// A local function f(eta) depending on the sites lo..hi (relative to the
/// origin), stored as a dense value table over all 2^w patterns, w = hi-lo+1.
/// Pattern index bit j is the occupancy of site lo + j (least significant bit
/// is the leftmost site).
class WindowFunction {
 public:
  WindowFunction() : WindowFunction(0, 0, {0.0, 0.0}) {}
  WindowFunction(int lo, int hi, std::vector<double> table);

  /// Tabulate `fn` over all patterns of the window [lo, hi].
  static WindowFunction tabulate(int lo, int hi, const std::function<double(const PatternView&)>& fn);
  static WindowFunction constant(double value) { return WindowFunction(0, 0, {value, value}); }
  /// eta(site)
  static WindowFunction occupation(int site);

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  int width() const { return hi_ - lo_ + 1; }
  std::size_t table_size() const { return table_.size(); }
  const std::vector<double>& table() const { return table_; }
  double value(std::uint32_t pattern) const { return table_[pattern]; }

  /// Pattern of eta read at sites x+lo .. x+hi (periodically).
  std::uint32_t pattern_at(const Configuration& eta, std::int64_t x) const;

  /// tau_x f(eta). Rejects windows that do not fit strictly inside the ring.
  double eval(const Configuration& eta, std::int64_t x) const;

  /// Same table read on the window [lo2, hi2] containing [lo, hi].
  WindowFunction extended(int lo2, int hi2) const;

  /// tau_s f: the same function translated so that (tau_s f)(eta) = f(tau_s eta).
  WindowFunction translated(int s) const { return WindowFunction(lo_ + s, hi_ + s, table_); }

  /// Smallest window outside of which the function does not depend on any site.
  WindowFunction trimmed() const;

  /// True if flipping `site` (inside the window) never changes the value.
  bool independent_of(int site) const;

  WindowFunction operator+(const WindowFunction& other) const;
  WindowFunction operator-(const WindowFunction& other) const;
  WindowFunction operator*(const WindowFunction& other) const;
  WindowFunction operator*(double s) const;
  WindowFunction operator+(double s) const;
  WindowFunction operator-(double s) const { return *this + (-s); }

  double min_value() const;
  double max_value() const;

  nlohmann::json to_json() const;
  static WindowFunction from_json(const nlohmann::json& j);

  friend bool operator==(const WindowFunction&, const WindowFunction&) = default;

 private:
  WindowFunction combine(const WindowFunction& other, const std::function<double(double, double)>& op) const;

  int lo_;
  int hi_;
  std::vector<double> table_;
};

/// Value of `f` evaluated on a window-relative pattern of a wider window
/// [lo, hi] (bit j = site lo + j).
double eval_on_pattern(const WindowFunction& f, int lo, std::uint32_t bits);

}  // namespace kpzlab

#endif  // KPZLAB_WINDOW_FUNCTION_HPP
