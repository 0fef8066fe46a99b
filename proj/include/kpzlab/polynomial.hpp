#ifndef KPZLAB_POLYNOMIAL_HPP
#define KPZLAB_POLYNOMIAL_HPP

#include <algorithm>
#include <cstddef>
#include <vector>

namespace kpzlab {

/// Real polynomial in one variable, coefficient i multiplies x^i.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

  const std::vector<double>& coeffs() const { return c_; }
  int degree() const { return c_.empty() ? -1 : static_cast<int>(c_.size()) - 1; }

  double operator()(double x) const {
    double v = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) v = v * x + c_[i];
    return v;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial();
    std::vector<double> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
    return Polynomial(std::move(d));
  }

  Polynomial operator+(const Polynomial& o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
    return Polynomial(std::move(r));
  }

  Polynomial operator*(const Polynomial& o) const {
    if (c_.empty() || o.c_.empty()) return Polynomial();
    std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i)
      for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return Polynomial(std::move(r));
  }

  Polynomial operator*(double s) const {
    auto r = c_;
    for (auto& v : r) v *= s;
    return Polynomial(std::move(r));
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
  }
  std::vector<double> c_;
};

}  // namespace kpzlab

#endif  // KPZLAB_POLYNOMIAL_HPP
