#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fracpg {

/// Row-major square matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  static DenseMatrix identity(int n) {
    DenseMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int size() const noexcept { return n_; }
  double& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * n_ + c]; }
  double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * n_ + c]; }
  const double* data() const noexcept { return a_.data(); }
  double* data() noexcept { return a_.data(); }

  std::vector<double> apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("DenseMatrix::apply: size mismatch");
    std::vector<double> y(n_, 0.0);
    for (int r = 0; r < n_; ++r) {
      double s = 0.0;
      for (int c = 0; c < n_; ++c) s += (*this)(r, c) * x[c];
      y[r] = s;
    }
    return y;
  }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

/// Packed lower triangle (diagonal included), row by row.
class LowerTriangular {
 public:
  LowerTriangular() = default;
  explicit LowerTriangular(int n) : n_(n), a_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {}

  int size() const noexcept { return n_; }

  /// Requires c <= r.
  double& operator()(int r, int c) { return a_[offset(r) + c]; }
  double operator()(int r, int c) const { return a_[offset(r) + c]; }

  /// Zero above the diagonal.
  double at(int r, int c) const { return c <= r ? (*this)(r, c) : 0.0; }

  const double* row(int r) const { return a_.data() + offset(r); }
  double* row(int r) { return a_.data() + offset(r); }

  friend bool operator==(const LowerTriangular&, const LowerTriangular&) = default;

 private:
  static std::size_t offset(int r) { return static_cast<std::size_t>(r) * (r + 1) / 2; }
  int n_ = 0;
  std::vector<double> a_;
};

}  // namespace fracpg
