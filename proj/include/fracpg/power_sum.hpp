#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fracpg/errors.hpp"

namespace fracpg {

struct Term {
  double coeff;
  double exponent;
  friend bool operator==(const Term&, const Term&) = default;
};

/**
 * Finite sum  sum_k c_k x^{p_k}  with real exponents p_k > -1.
 *
 * Kept canonical: exponents strictly increasing, exponents that agree to
 * within a few ulps merged, vanishing coefficients dropped.
 */
class PowerSum {
 public:
  PowerSum() = default;

  explicit PowerSum(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
      if (!std::isfinite(t.coeff) || !std::isfinite(t.exponent)) throw DomainError("PowerSum: non-finite term");
      if (!(t.exponent > -1.0)) {
        std::ostringstream msg;
        msg << "PowerSum: exponent " << t.exponent << " is not > -1";
        throw DomainError(msg.str());
      }
    }
    canonicalize();
  }

  static PowerSum monomial(double coeff, double exponent) { return PowerSum({{coeff, exponent}}); }
  static PowerSum constant(double c) { return monomial(c, 0.0); }

  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  double min_exponent() const {
    return terms_.empty() ? std::numeric_limits<double>::infinity() : terms_.front().exponent;
  }

  /// Coefficient of x^p (0 if absent), matching exponents like canonicalisation does.
  double coefficient(double exponent) const {
    for (const auto& t : terms_)
      if (same_exponent(t.exponent, exponent)) return t.coeff;
    return 0.0;
  }

  double operator()(double x) const {
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.coeff * power(x, t.exponent);
    return sum;
  }

  /// k-th classical derivative evaluated pointwise (x > 0); no exponent restriction.
  double derivative_at(double x, int k = 1) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
      double c = t.coeff;
      for (int j = 0; j < k; ++j) c *= (t.exponent - j);
      if (c == 0.0) continue;
      sum += c * power(x, t.exponent - k);
    }
    return sum;
  }

  /// Symbolic first derivative; throws UnsupportedExponent if an exponent would drop to <= -1.
  PowerSum derivative() const {
    std::vector<Term> out;
    for (const auto& t : terms_) {
      if (t.exponent == 0.0) continue;
      if (!(t.exponent - 1.0 > -1.0)) throw UnsupportedExponent("PowerSum::derivative: exponent leaves (-1, inf)");
      out.push_back({t.coeff * t.exponent, t.exponent - 1.0});
    }
    return PowerSum(std::move(out));
  }

  PowerSum& operator+=(const PowerSum& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    canonicalize();
    return *this;
  }
  PowerSum& operator-=(const PowerSum& o) { return *this += (-1.0) * o; }
  PowerSum& operator*=(double s) {
    for (auto& t : terms_) t.coeff *= s;
    canonicalize();
    return *this;
  }

  friend PowerSum operator+(PowerSum a, const PowerSum& b) { return a += b; }
  friend PowerSum operator-(PowerSum a, const PowerSum& b) { return a -= b; }
  friend PowerSum operator*(double s, PowerSum p) { return p *= s; }
  friend PowerSum operator*(PowerSum p, double s) { return p *= s; }
  friend PowerSum operator-(PowerSum p) { return p *= -1.0; }

  friend PowerSum operator*(const PowerSum& a, const PowerSum& b) {
    std::vector<Term> out;
    out.reserve(a.size() * b.size());
    for (const auto& s : a.terms_)
      for (const auto& t : b.terms_) out.push_back({s.coeff * t.coeff, s.exponent + t.exponent});
    return PowerSum(std::move(out));
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (i) os << " + ";
      os << terms_[i].coeff << "*x^" << terms_[i].exponent;
    }
    return os.str();
  }

  static bool same_exponent(double p, double q) {
    return std::abs(p - q) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(p));
  }

 private:
  static double power(double x, double p) {
    if (p == 0.0) return 1.0;
    if (x == 0.0) {
      if (p < 0.0) throw DomainError("PowerSum: negative exponent evaluated at x = 0");
      return 0.0;
    }
    if (x < 0.0) throw DomainError("PowerSum: evaluation at negative x");
    return std::pow(x, p);
  }

  void canonicalize() {
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.exponent < b.exponent; });
    std::vector<Term> merged;
    merged.reserve(terms_.size());
    for (const auto& t : terms_) {
      if (!merged.empty() && same_exponent(merged.back().exponent, t.exponent)) {
        auto& m = merged.back();
        const double scale = std::abs(m.coeff) + std::abs(t.coeff);
        m.coeff += t.coeff;
        if (std::abs(m.coeff) <= 4.0 * std::numeric_limits<double>::epsilon() * scale) m.coeff = 0.0;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coeff == 0.0; });
    terms_ = std::move(merged);
  }

  std::vector<Term> terms_;
};

}  // namespace fracpg
