#pragma once

/**
 * @file special.hpp
 * @brief Gamma and Beta functions and Gauss-Jacobi quadrature rules.
 *
 * Only positive Gamma arguments occur in this library, so the Lanczos
 * approximation (g = 7, nine coefficients) is used on (0, inf) with the
 * reflection formula below 1/2.
 *
 * Gauss-Jacobi rules integrate (1-t)^a (1+t)^b p(t) on [-1, 1] exactly for
 * polynomials p of degree <= 2n-1. Nodes come from the symmetric Jacobi
 * matrix (Golub-Welsch) and are then polished by Newton's method on
 * P_n^{(a,b)}; weights use the closed Christoffel formula so that small
 * weights keep full relative accuracy.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fracpg/errors.hpp"

namespace fracpg {

namespace detail {

inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczosCoeffs = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_series(double z) {
  double acc = kLanczosCoeffs[0];
  for (std::size_t i = 1; i < kLanczosCoeffs.size(); ++i) acc += kLanczosCoeffs[i] / (z + static_cast<double>(i));
  return acc;
}

}  // namespace detail

/// Natural logarithm of Gamma for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
  if (x < 0.5) {
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  const double t = z + detail::kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(detail::lanczos_series(z));
}

/// Gamma function for x > 0.
inline double gamma(double x) {
  if (!(x > 0.0)) throw DomainError("gamma: argument must be positive");
  if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma(1.0 - x));
  const double z = x - 1.0;
  const double t = z + detail::kLanczosG + 0.5;
  // split the power so large arguments do not overflow before exp(-t) is applied
  const double half = std::pow(t, 0.5 * (z + 0.5));
  return std::sqrt(2.0 * std::numbers::pi) * half * (half * std::exp(-t)) * detail::lanczos_series(z);
}

/// Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b), evaluated in log space.
inline double beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta: arguments must be positive");
  return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

/// Quadrature rule on [-1, 1] for the weight (1-t)^jacobi_a (1+t)^jacobi_b.
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double jacobi_a = 0.0;
  double jacobi_b = 0.0;
  int order = 0;
};

namespace detail {

/// P_n^{(a,b)}(x) in the standard normalisation, by the three-term recurrence.
inline double jacobi_p(int n, double a, double b, double x) {
  if (n == 0) return 1.0;
  double p_prev = 1.0;
  double p = (a + 1.0) + 0.5 * (a + b + 2.0) * (x - 1.0);
  for (int k = 2; k <= n; ++k) {
    const double kk = k;
    const double s = 2.0 * kk + a + b;
    const double c1 = 2.0 * kk * (kk + a + b) * (s - 2.0);
    const double c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
    const double c3 = 2.0 * (kk + a - 1.0) * (kk + b - 1.0) * s;
    const double next = (c2 * p - c3 * p_prev) / c1;
    p_prev = p;
    p = next;
  }
  return p;
}

inline double jacobi_p_derivative(int n, double a, double b, double x) {
  if (n == 0) return 0.0;
  return 0.5 * (n + a + b + 1.0) * jacobi_p(n - 1, a + 1.0, b + 1.0, x);
}

}  // namespace detail

/// n-point Gauss-Jacobi rule for the weight (1-t)^a (1+t)^b on [-1, 1].
inline QuadRule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_jacobi: n must be >= 1");
  if (!(a > -1.0) || !(b > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");

  // monic recurrence coefficients of the Jacobi matrix
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 1));
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    diag[k] = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double kk = k;
    const double s = 2.0 * kk + a + b;
    double beta_k;
    if (k == 1) {
      beta_k = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) * (2.0 + a + b) * (3.0 + a + b));
    } else {
      beta_k = 4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub[k - 1] = std::sqrt(beta_k);
  }

  std::vector<double> nodes(n);
  if (n == 1) {
    nodes[0] = diag[0];
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "gauss_jacobi: eigenvalue iteration failed for (n, a, b) = (" << n << ", " << a << ", " << b << ")";
      throw NumericalError(msg.str());
    }
    for (int k = 0; k < n; ++k) nodes[k] = solver.eigenvalues()[k];
  }

  for (auto& x : nodes) {
    for (int it = 0; it < 8; ++it) {
      const double p = detail::jacobi_p(n, a, b, x);
      const double dp = detail::jacobi_p_derivative(n, a, b, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * (1.0 + std::abs(x))) break;
    }
  }
  std::sort(nodes.begin(), nodes.end());
  for (int k = 0; k < n; ++k) {
    const bool inside = nodes[k] > -1.0 && nodes[k] < 1.0;
    const bool ordered = k == 0 || nodes[k] > nodes[k - 1];
    if (!inside || !ordered || !std::isfinite(nodes[k])) {
      std::ostringstream msg;
      msg << "gauss_jacobi: node solve did not converge for (n, a, b) = (" << n << ", " << a << ", " << b << ")";
      throw NumericalError(msg.str());
    }
  }

  const double nn = n;
  const double log_c = (a + b + 1.0) * std::log(2.0) + log_gamma(nn + a + 1.0) + log_gamma(nn + b + 1.0) -
                       log_gamma(nn + a + b + 1.0) - log_gamma(nn + 1.0);
  const double c = std::exp(log_c);

  QuadRule rule;
  rule.nodes = nodes;
  rule.weights.resize(n);
  rule.jacobi_a = a;
  rule.jacobi_b = b;
  rule.order = n;
  for (int k = 0; k < n; ++k) {
    const double x = nodes[k];
    const double dp = detail::jacobi_p_derivative(n, a, b, x);
    rule.weights[k] = c / ((1.0 - x) * (1.0 + x) * dp * dp);
  }
  return rule;
}

inline QuadRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Process-wide cache of immutable rules; the returned reference stays valid.
inline const QuadRule& cached_rule(int n, double a, double b) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, std::unique_ptr<const QuadRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, a, b}];
  if (!slot) slot = std::make_unique<const QuadRule>(gauss_jacobi(n, a, b));
  return *slot;
}

}  // namespace fracpg
