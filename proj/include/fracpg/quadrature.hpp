#pragma once

/**
 * @file quadrature.hpp
 * @brief Composite quadrature for integrands with algebraic endpoint singularities.
 *
 * integrate_weighted() approximates
 *
 *     \int_lo^hi (t - lo)^{el} (hi - t)^{er} g(t) dt
 *
 * for a smooth factor g. The weight factor touching a piece's singular end
 * is absorbed exactly into a Gauss-Jacobi rule; on pieces that do not touch
 * it, the weight is evaluated explicitly. Optional geometric grading (ratio
 * 2) toward either endpoint resolves factors that are only piecewise
 * analytic after the weight is extracted, e.g. x^{2-alpha} next to
 * x^{alpha-2}.
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include "fracpg/special.hpp"

namespace fracpg {

/// Algebraic behaviour (t - endpoint)^exponent at one end of an interval.
struct EndpointWeight {
  double exponent = 0.0;
  int grading_levels = 0;
};

struct WeightedNode {
  double t;
  double weight;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

inline std::vector<double> graded_breakpoints(double lo, double hi, EndpointWeight left, EndpointWeight right) {
  const int gl = std::max(left.grading_levels, 0);
  const int gr = std::max(right.grading_levels, 0);
  if (gl == 0 && gr == 0) return {lo, hi};
  // with grading on both sides each half is graded toward its own end
  const double mid = (gl > 0 && gr > 0) ? 0.5 * (lo + hi) : (gl > 0 ? hi : lo);
  std::vector<double> pts{lo};
  for (int k = gl; k >= 1; --k) pts.push_back(lo + (mid - lo) * std::ldexp(1.0, -k));
  if (gl > 0 && gr > 0) pts.push_back(mid);
  for (int k = 1; k <= gr; ++k) pts.push_back(hi - (hi - mid) * std::ldexp(1.0, -k));
  pts.push_back(hi);
  return pts;
}

}  // namespace detail

/// Nodes and weights W_k such that sum_k W_k g(t_k) approximates the weighted integral.
inline std::vector<WeightedNode> weighted_nodes(double lo, double hi, EndpointWeight left, EndpointWeight right,
                                                int order = 16) {
  std::vector<WeightedNode> out;
  if (!(hi > lo)) return out;
  const auto pts = detail::graded_breakpoints(lo, hi, left, right);
  const std::size_t pieces = pts.size() - 1;
  out.reserve(pieces * static_cast<std::size_t>(order));
  for (std::size_t p = 0; p < pieces; ++p) {
    const double a = pts[p];
    const double b = pts[p + 1];
    const bool touches_lo = p == 0;
    const bool touches_hi = p + 1 == pieces;
    const double ea = touches_lo ? left.exponent : 0.0;   // extracted at the left end of the piece
    const double eb = touches_hi ? right.exponent : 0.0;  // extracted at the right end of the piece
    const QuadRule& rule = cached_rule(order, eb, ea);
    const double half = 0.5 * (b - a);
    const double scale = std::pow(half, 1.0 + ea + eb);
    for (int k = 0; k < rule.order; ++k) {
      const double s = rule.nodes[k];
      const double t = a + half * (1.0 + s);
      double w = scale * rule.weights[k];
      if (!touches_lo && left.exponent != 0.0) w *= std::pow(t - lo, left.exponent);
      if (!touches_hi && right.exponent != 0.0) w *= std::pow(hi - t, right.exponent);
      out.push_back({t, w});
    }
  }
  return out;
}

/// \int_lo^hi (t-lo)^{left.exponent} (hi-t)^{right.exponent} g(t) dt.
template <class G>
double integrate_weighted(G&& g, double lo, double hi, EndpointWeight left = {}, EndpointWeight right = {},
                          int order = 16) {
  CompensatedSum acc;
  for (const auto& node : weighted_nodes(lo, hi, left, right, order)) acc.add(node.weight * g(node.t));
  return acc.value();
}

}  // namespace fracpg
