#ifndef KPZLAB_CONFIGURATION_HPP
#define KPZLAB_CONFIGURATION_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpzlab {

/// Occupancy state of a periodic ring of L sites. Site x is identified with
/// x mod L for every integer x, including negative ones.
class Configuration {
 public:
  Configuration() = default;

  explicit Configuration(std::int64_t L) : sites_(check_size(L), 0) {}

  explicit Configuration(std::vector<std::uint8_t> sites) : sites_(std::move(sites)) {
    check_size(static_cast<std::int64_t>(sites_.size()));
    for (auto s : sites_)
      if (s > 1) throw std::invalid_argument("Configuration: occupancies must be 0 or 1");
  }

  /// Parse a string of '0'/'1' characters, leftmost character is site 0.
  static Configuration from_string(const std::string& bits) {
    std::vector<std::uint8_t> v;
    v.reserve(bits.size());
    for (char ch : bits) {
      if (ch != '0' && ch != '1') throw std::invalid_argument("Configuration: expected 0/1 string");
      v.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    return Configuration(std::move(v));
  }

  std::int64_t size() const { return static_cast<std::int64_t>(sites_.size()); }

  std::int64_t wrap(std::int64_t x) const {
    const std::int64_t L = size();
    x %= L;
    return x < 0 ? x + L : x;
  }

  int operator[](std::int64_t x) const { return sites_[static_cast<std::size_t>(wrap(x))]; }

  /// Unchecked access for 0 <= x < L.
  int at_unchecked(std::int64_t x) const { return sites_[static_cast<std::size_t>(x)]; }

  void set(std::int64_t x, int value) {
    if (value != 0 && value != 1) throw std::invalid_argument("Configuration: occupancy must be 0 or 1");
    sites_[static_cast<std::size_t>(wrap(x))] = static_cast<std::uint8_t>(value);
  }

  /// Exchange occupancies at x and x+1 in place.
  void swap_in_place(std::int64_t x) {
    const auto i = static_cast<std::size_t>(wrap(x));
    const auto j = static_cast<std::size_t>(wrap(x + 1));
    std::swap(sites_[i], sites_[j]);
  }

  std::int64_t particle_count() const {
    std::int64_t n = 0;
    for (auto s : sites_) n += s;
    return n;
  }

  std::span<const std::uint8_t> sites() const { return sites_; }

  std::string to_string() const {
    std::string s;
    s.reserve(sites_.size());
    for (auto v : sites_) s.push_back(static_cast<char>('0' + v));
    return s;
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  static std::size_t check_size(std::int64_t L) {
    if (L < 1) throw std::invalid_argument("Configuration: ring length must be positive");
    return static_cast<std::size_t>(L);
  }

  std::vector<std::uint8_t> sites_;
};

/// eta^{x,x+1}: copy of eta with the occupancies at x and x+1 exchanged.
inline Configuration swap_bond(Configuration eta, std::int64_t x) {
  eta.swap_in_place(x);
  return eta;
}

}  // namespace kpzlab

#endif  // KPZLAB_CONFIGURATION_HPP
