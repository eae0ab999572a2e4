#pragma once

/**
 * @file fraccalc.hpp
 * @brief Riemann-Liouville integrals and Riemann-Liouville/Caputo derivatives.
 *
 * On power sums everything is exact through the power rule
 *
 *     I^g x^p = Gamma(p+1)/Gamma(p+1+g) x^{p+g}.
 *
 * Derivatives of order beta in (n-1, n) are written as n classical
 * derivatives of I^{n-beta}, so the coefficient becomes
 * Gamma(p+1)/Gamma(p+1+n-beta) * prod_{k=1..n} (p+k-beta) and no Gamma
 * function is ever evaluated at a pole or a negative argument; a vanishing
 * factor (e.g. D^alpha x^{alpha-1}) gives an exact zero.
 *
 * frac_integral_point() handles arbitrary integrands numerically, one-sided
 * in either direction.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <type_traits>
#include <sstream>
#include <vector>

#include "fracpg/errors.hpp"
#include "fracpg/power_sum.hpp"
#include "fracpg/quadrature.hpp"
#include "fracpg/special.hpp"

namespace fracpg {

enum class Derivative { RiemannLiouville, Caputo };

inline const char* to_string(Derivative kind) {
  return kind == Derivative::RiemannLiouville ? "Riemann-Liouville" : "Caputo";
}

/// Left-sided fractional integral of order gamma_order > 0 (from 0 to x).
inline PowerSum frac_integral(const PowerSum& p, double gamma_order) {
  if (!(gamma_order > 0.0)) throw DomainError("frac_integral: order must be positive");
  std::vector<Term> out;
  out.reserve(p.size());
  for (const auto& t : p.terms()) {
    const double ratio = gamma(t.exponent + 1.0) / gamma(t.exponent + 1.0 + gamma_order);
    out.push_back({t.coeff * ratio, t.exponent + gamma_order});
  }
  return PowerSum(std::move(out));
}

namespace detail {

inline int derivative_steps(double beta) {
  if (!(beta > 0.0) || !(beta < 2.0)) throw DomainError("frac_derivative: order must lie in (0, 2)");
  return static_cast<int>(std::ceil(beta));
}

/// Treat p + k - beta as exactly zero when it vanishes up to rounding.
inline bool vanishes(double v, double scale) { return std::abs(v) <= 1e-12 * std::max(1.0, scale); }

}  // namespace detail

/// Left-sided fractional derivative of order beta in (0, 2).
inline PowerSum frac_derivative(const PowerSum& p, double beta, Derivative kind) {
  const int n = detail::derivative_steps(beta);
  const double residual_order = n - beta;
  std::vector<Term> out;

  if (kind == Derivative::RiemannLiouville) {
    for (const auto& t : p.terms()) {
      double factor = 1.0;
      for (int k = 1; k <= n; ++k) {
        const double f = t.exponent + k - beta;
        if (detail::vanishes(f, std::abs(t.exponent))) {
          factor = 0.0;
          break;
        }
        factor *= f;
      }
      if (factor == 0.0) continue;
      const double c = t.coeff * factor * gamma(t.exponent + 1.0) / gamma(t.exponent + 1.0 + residual_order);
      const double e = t.exponent - beta;
      if (!(e > -1.0)) {
        std::ostringstream msg;
        msg << "frac_derivative: x^" << t.exponent << " maps to the non-integrable power x^" << e;
        throw UnsupportedExponent(msg.str());
      }
      out.push_back({c, e});
    }
    return PowerSum(std::move(out));
  }

  // Caputo: n classical derivatives, then I^{n - beta}
  for (const auto& t : p.terms()) {
    const double rounded = std::round(t.exponent);
    if (rounded >= 0.0 && rounded < n && detail::vanishes(t.exponent - rounded, 1.0)) continue;  // killed
    if (!(t.exponent - n > -1.0)) {
      std::ostringstream msg;
      msg << "frac_derivative: Caputo derivative of x^" << t.exponent << " needs the numeric path";
      throw UnsupportedExponent(msg.str());
    }
    double c = t.coeff;
    for (int k = 0; k < n; ++k) c *= (t.exponent - k);
    out.push_back({c, t.exponent - n});
  }
  PowerSum d(std::move(out));
  return residual_order > 0.0 ? frac_integral(d, residual_order) : d;
}

/// Pointwise Riemann-Liouville derivative, valid even when the result leaves the PowerSum class.
inline double frac_derivative_at(const PowerSum& p, double beta, double x) {
  const int n = detail::derivative_steps(beta);
  const double residual_order = n - beta;
  const PowerSum inner = residual_order > 0.0 ? frac_integral(p, residual_order) : p;
  return inner.derivative_at(x, n);
}

enum class Side { Left, Right };

struct PointIntegralOptions {
  int order = 16;
  /// Integrand behaves like t^{-origin_exponent} near t = 0 (0 when regular).
  double origin_exponent = 0.0;
  /// Grade toward t = 0 even without a singular exponent (e.g. for t^{0.6}).
  bool nonsmooth_origin = false;
  /// Negative: enough levels that the innermost piece carries about 2^-40 of the weight mass.
  int origin_grading_levels = -1;
  /// Interior points where the integrand is not smooth; pieces are split there.
  std::vector<double> breakpoints;
  /// Geometric grading toward each breakpoint from both sides.
  int breakpoint_grading_levels = 0;
};

/**
 * Left: (1/Gamma(g)) \int_0^x (x-t)^{g-1} f(t) dt.
 * Right: (1/Gamma(g)) \int_x^1 (t-x)^{g-1} f(t) dt.
 */
template <class F>
  requires(!std::same_as<std::remove_cvref_t<F>, PowerSum>)
double frac_integral_point(F&& f, double gamma_order, double x, Side side, const PointIntegralOptions& opts = {}) {
  if (!(gamma_order > 0.0)) throw DomainError("frac_integral_point: order must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("frac_integral_point: x must lie in [0, 1]");
  if (!(opts.origin_exponent >= 0.0 && opts.origin_exponent < 1.0))
    throw DomainError("frac_integral_point: origin exponent must lie in [0, 1)");

  const double lo = side == Side::Left ? 0.0 : x;
  const double hi = side == Side::Left ? x : 1.0;
  if (!(hi > lo)) return 0.0;

  std::vector<double> pts{lo};
  for (double b : opts.breakpoints)
    if (b > lo && b < hi) pts.push_back(b);
  std::sort(pts.begin() + 1, pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  pts.push_back(hi);

  const double kernel_exp = gamma_order - 1.0;
  const double sigma = opts.origin_exponent;
  const int origin_levels = opts.origin_grading_levels >= 0
                                ? opts.origin_grading_levels
                                : static_cast<int>(std::ceil(40.0 / (1.0 - sigma)));
  CompensatedSum acc;
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    const double a = pts[p];
    const double b = pts[p + 1];
    const bool at_origin = a == 0.0 && (sigma > 0.0 || opts.nonsmooth_origin);
    const bool kernel_left = side == Side::Right && p == 0;
    const bool kernel_right = side == Side::Left && p + 2 == pts.size();

    EndpointWeight left;
    EndpointWeight right;
    if (kernel_left) left.exponent = kernel_exp;
    if (at_origin) {
      left.exponent -= sigma;  // kernel and origin singularities coincide when x = 0
      left.grading_levels = origin_levels;
    } else if (p > 0) {
      left.grading_levels = opts.breakpoint_grading_levels;
    }
    if (kernel_right) {
      right.exponent = kernel_exp;
    } else {
      right.grading_levels = opts.breakpoint_grading_levels;
    }
    // pieces ending at the interval end are never graded there
    if (p + 2 == pts.size()) right.grading_levels = 0;

    auto integrand = [&](double t) {
      double v = f(t);
      if (at_origin && sigma > 0.0) v *= std::pow(t, sigma);
      if (side == Side::Left && !kernel_right) v *= std::pow(x - t, kernel_exp);
      if (side == Side::Right && !kernel_left) v *= std::pow(t - x, kernel_exp);
      return v;
    };
    acc.add(integrate_weighted(integrand, a, b, left, right, opts.order));
  }
  const double result = acc.value() / gamma(gamma_order);
  if (!std::isfinite(result)) {
    std::ostringstream msg;
    msg << "frac_integral_point: non-finite value at x = " << x;
    throw NumericalError(msg.str());
  }
  return result;
}

/// Convenience overload for power sums (origin exponent taken from the most singular term).
inline double frac_integral_point(const PowerSum& p, double gamma_order, double x, Side side) {
  PointIntegralOptions opts;
  opts.origin_exponent = std::max(0.0, -p.min_exponent());
  opts.nonsmooth_origin = std::any_of(p.terms().begin(), p.terms().end(),
                                      [](const Term& t) { return t.exponent != std::floor(t.exponent); });
  return frac_integral_point([&](double t) { return p(t); }, gamma_order, x, side, opts);
}

}  // namespace fracpg
