#pragma once

/**
 * @file solver.hpp
 * @brief Dense LU, the O(n^2) structured solve, and 2-norm condition numbers.
 *
 * The structured solve uses S = T + u v^T with T = diag I + L lower
 * triangular: two forward substitutions and a Sherman-Morrison correction.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/SVD>

#include "fracpg/errors.hpp"
#include "fracpg/femcore.hpp"
#include "fracpg/matrix.hpp"

namespace fracpg {

/// LU factorisation with partial pivoting, PA = LU, stored in place.
class LUFactorization {
 public:
  explicit LUFactorization(DenseMatrix a) : lu_(std::move(a)), perm_(lu_.size()) {
    const int n = lu_.size();
    std::iota(perm_.begin(), perm_.end(), 0);
    double scale = 0.0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) scale = std::max(scale, std::abs(lu_(r, c)));
    const double tiny = std::max(1, n) * std::numeric_limits<double>::epsilon() * scale;

    for (int k = 0; k < n; ++k) {
      int p = k;
      for (int r = k + 1; r < n; ++r)
        if (std::abs(lu_(r, k)) > std::abs(lu_(p, k))) p = r;
      if (!(std::abs(lu_(p, k)) > tiny)) {
        std::ostringstream msg;
        msg << "solve_dense: matrix is singular to working precision at pivot " << k;
        throw SingularMatrix(k, msg.str());
      }
      if (p != k) {
        std::swap(perm_[p], perm_[k]);
        for (int c = 0; c < n; ++c) std::swap(lu_(p, c), lu_(k, c));
      }
      const double piv = lu_(k, k);
      for (int r = k + 1; r < n; ++r) {
        const double f = lu_(r, k) / piv;
        lu_(r, k) = f;
        if (f == 0.0) continue;
        double* dst = &lu_(r, 0);
        const double* src = &lu_(k, 0);
        for (int c = k + 1; c < n; ++c) dst[c] -= f * src[c];
      }
    }
  }

  int size() const noexcept { return lu_.size(); }

  /// Solves A x = b.
  std::vector<double> solve(const std::vector<double>& b) const {
    const int n = size();
    check(b);
    std::vector<double> x(n);
    for (int r = 0; r < n; ++r) {
      double s = b[perm_[r]];
      for (int c = 0; c < r; ++c) s -= lu_(r, c) * x[c];
      x[r] = s;
    }
    for (int r = n - 1; r >= 0; --r) {
      double s = x[r];
      for (int c = r + 1; c < n; ++c) s -= lu_(r, c) * x[c];
      x[r] = s / lu_(r, r);
    }
    return x;
  }

  /// Solves A^T x = b.
  std::vector<double> solve_transpose(const std::vector<double>& b) const {
    const int n = size();
    check(b);
    // A^T = U^T L^T P
    std::vector<double> y(b);
    for (int c = 0; c < n; ++c) {
      y[c] /= lu_(c, c);
      const double yc = y[c];
      for (int r = c + 1; r < n; ++r) y[r] -= lu_(c, r) * yc;
    }
    for (int c = n - 1; c >= 0; --c) {
      const double yc = y[c];
      for (int r = 0; r < c; ++r) y[r] -= lu_(c, r) * yc;
    }
    std::vector<double> x(n);
    for (int r = 0; r < n; ++r) x[perm_[r]] = y[r];
    return x;
  }

 private:
  void check(const std::vector<double>& b) const {
    if (static_cast<int>(b.size()) != size()) throw DomainError("LU solve: right-hand side has the wrong length");
  }

  DenseMatrix lu_;
  std::vector<int> perm_;
};

inline std::vector<double> solve_dense(const DenseMatrix& S, const std::vector<double>& F) {
  return LUFactorization(S).solve(F);
}

namespace detail {

inline std::vector<double> forward_substitute(double diag, const LowerTriangular& L, const std::vector<double>& b) {
  const int n = L.size();
  std::vector<double> y(n);
  for (int r = 0; r < n; ++r) {
    const double* row = L.row(r);
    double s = b[r];
    for (int c = 0; c < r; ++c) s -= row[c] * y[c];
    const double piv = diag + row[r];
    if (piv == 0.0) {
      std::ostringstream msg;
      msg << "solve_structured: zero diagonal in the triangular factor at row " << r;
      throw SingularMatrix(r, msg.str());
    }
    y[r] = s / piv;
  }
  return y;
}

}  // namespace detail

/// (diag I + L + u v^T) x = F by Sherman-Morrison; O(n^2).
inline std::vector<double> solve_structured(double diag, const LowerTriangular& L, const std::vector<double>& u,
                                            const std::vector<double>& v, const std::vector<double>& F) {
  const int n = L.size();
  if (static_cast<int>(u.size()) != n || static_cast<int>(v.size()) != n || static_cast<int>(F.size()) != n)
    throw DomainError("solve_structured: size mismatch");
  if (diag == 0.0) throw DomainError("solve_structured: diagonal must be nonzero");
  std::vector<double> y = detail::forward_substitute(diag, L, F);
  std::vector<double> z = detail::forward_substitute(diag, L, u);
  double vz = 0.0;
  double vy = 0.0;
  for (int k = 0; k < n; ++k) {
    vz += v[k] * z[k];
    vy += v[k] * y[k];
  }
  const double denom = 1.0 + vz;
  if (std::abs(denom) < 1e-12) {
    std::ostringstream msg;
    msg << "solve_structured: Sherman-Morrison denominator 1 + v^T z = " << denom << " vanishes";
    throw SolverBreakdown(msg.str());
  }
  const double t = vy / denom;
  for (int k = 0; k < n; ++k) y[k] -= t * z[k];
  return y;
}

inline std::vector<double> solve_structured(const AssembledSystem& sys) {
  return solve_structured(sys.diag, sys.lower, sys.rank_one_u, sys.rank_one_v, sys.load);
}

/// Structured solve with a dense fallback when the rank-one update breaks down.
inline std::vector<double> solve(const AssembledSystem& sys) {
  try {
    return solve_structured(sys);
  } catch (const SolverBreakdown&) {
    return solve_dense(sys.dense(), sys.load);
  } catch (const SingularMatrix&) {
    return solve_dense(sys.dense(), sys.load);
  }
}

struct ConditionOptions {
  /// Scale by 1/leading_diag first (kappa_2 is scale invariant, so this only affects rounding).
  bool precondition = false;
  double leading_diag = 1.0;
  /// Largest n handled by a full SVD; above it power/inverse-power iteration is used.
  int svd_limit = 1024;
  int max_iterations = 20000;
  double tolerance = 1e-12;
};

namespace detail {

inline double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline std::vector<double> start_vector(int n) {
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[k] = 1.0 + 0.5 * std::sin(1.0 + 7.0 * k);  // fixed, generic direction
  return x;
}

/// Dominant eigenvalue of the SPD operator op by power iteration.
template <class Op>
double power_iteration(Op&& op, int n, const ConditionOptions& opts, const char* what) {
  std::vector<double> x = start_vector(n);
  double nx = norm2(x);
  for (double& v : x) v /= nx;
  double lambda = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::vector<double> y = op(x);
    double rayleigh = 0.0;
    for (int k = 0; k < n; ++k) rayleigh += x[k] * y[k];
    const double ny = norm2(y);
    if (!(ny > 0.0) || !std::isfinite(ny)) throw NumericalError(std::string("condition_number: ") + what + " iteration produced a degenerate vector");
    for (int k = 0; k < n; ++k) x[k] = y[k] / ny;
    if (it > 0 && std::abs(rayleigh - lambda) <= opts.tolerance * std::abs(rayleigh)) return rayleigh;
    lambda = rayleigh;
  }
  std::ostringstream msg;
  msg << "condition_number: " << what << " iteration did not converge in " << opts.max_iterations
      << " steps (last estimate " << lambda << ")";
  throw NumericalError(msg.str());
}

}  // namespace detail

/// kappa_2(S) = sigma_max / sigma_min.
inline double condition_number(const DenseMatrix& S, const ConditionOptions& opts = {}) {
  const int n = S.size();
  if (n == 0) throw DomainError("condition_number: empty matrix");
  DenseMatrix A = S;
  if (opts.precondition) {
    if (opts.leading_diag == 0.0) throw DomainError("condition_number: leading diagonal must be nonzero");
    const double s = 1.0 / opts.leading_diag;
    for (int k = 0; k < n * n; ++k) A.data()[k] *= s;
  }

  if (n <= opts.svd_limit) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(A.data(), n, n);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    const double smin = sv[n - 1];
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return sv[0] / smin;
  }

  const LUFactorization lu(A);
  const auto ata = [&](const std::vector<double>& x) {
    std::vector<double> y = A.apply(x);
    std::vector<double> z(n, 0.0);
    for (int r = 0; r < n; ++r) {
      const double yr = y[r];
      const double* row = &A(r, 0);
      for (int c = 0; c < n; ++c) z[c] += row[c] * yr;
    }
    return z;
  };
  const auto ata_inv = [&](const std::vector<double>& x) { return lu.solve(lu.solve_transpose(x)); };
  const double lmax = detail::power_iteration(ata, n, opts, "power");
  const double lmin_inv = detail::power_iteration(ata_inv, n, opts, "inverse power");
  return std::sqrt(lmax * lmin_inv);
}

inline double condition_number(const AssembledSystem& sys, bool precondition) {
  ConditionOptions opts;
  opts.precondition = precondition;
  opts.leading_diag = sys.diag;
  return condition_number(sys.dense(), opts);
}

}  // namespace fracpg
