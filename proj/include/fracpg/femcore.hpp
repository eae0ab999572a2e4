#pragma once

/**
 * @file femcore.hpp
 * @brief Uniform mesh, trial/test bases and assembly of the Petrov-Galerkin system.
 *
 * Trial functions are the interior hats psi_j. Test functions are
 *
 *     phi_i = (x_i - x)^{alpha-1} chi_[0,x_i] - c_i (1-x)^{alpha-1},
 *
 * with c_i = x_i^{alpha-1} (Riemann-Liouville, phi_i(0) = 0) or c_i = x_i
 * (Caputo, (phi_i, x^{1-alpha}) = 0). The right-sided derivative of order
 * alpha-1 of phi_i is Gamma(alpha)(chi_[0,x_i] - c_i), so
 *
 *     -(psi_j', D^{alpha-1} phi_i) = -Gamma(alpha) psi_j(x_i) = -Gamma(alpha) delta_ij.
 *
 * Every lower-order entry and load entry reduces to a kernel moment
 * \int_0^{x_i} g(t) (x_i - t)^{alpha-1} dt, so the rank-one part comes from
 * the same moments taken at x_m = 1:
 *
 *     S = -Gamma(alpha) I + L - c w^T,   F_i = P_i - c_i P_m.
 *
 * On a uniform mesh the kernel on element e < i depends only on i - e, so it
 * is tabulated once per Gauss-Legendre node. The element touching x_i uses a
 * Gauss-Jacobi rule with weight (1-t)^{alpha-1}.
 */

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fracpg/errors.hpp"
#include "fracpg/expr.hpp"
#include "fracpg/fraccalc.hpp"
#include "fracpg/matrix.hpp"
#include "fracpg/power_sum.hpp"
#include "fracpg/quadrature.hpp"
#include "fracpg/special.hpp"

namespace fracpg {

inline void validate_alpha(double alpha) {
  if (!(alpha > 1.5 && alpha < 2.0)) {
    std::ostringstream msg;
    msg << "alpha = " << alpha << " must lie strictly inside (1.5, 2)";
    throw DomainError(msg.str());
  }
}

/// Uniform partition of (0, 1) into m elements.
class Mesh {
 public:
  explicit Mesh(int m) : m_(m) {
    if (m < 2) throw DomainError("Mesh: need at least 2 elements");
    h_ = 1.0 / m;
  }

  int elements() const noexcept { return m_; }
  int interior() const noexcept { return m_ - 1; }
  double h() const noexcept { return h_; }
  double node(int i) const noexcept { return static_cast<double>(i) / m_; }

  std::vector<double> nodes() const {
    std::vector<double> x(m_ + 1);
    for (int i = 0; i <= m_; ++i) x[i] = node(i);
    return x;
  }

  friend bool operator==(const Mesh& a, const Mesh& b) { return a.m_ == b.m_; }

 private:
  int m_;
  double h_;
};

/// -D^alpha u + b u' + q u = f on (0, 1), u(0) = u(1) = 0.
struct ProblemSpec {
  double alpha;
  Derivative kind;
  expr::Expression b;
  expr::Expression q;
  expr::Expression f;
  /// f behaves like x^{f_origin_exponent} at 0; in (-1, 0].
  double f_origin_exponent = 0.0;

  /// Parses b, q, f. Without an explicit origin exponent it is read off a classified f.
  static ProblemSpec make(double alpha, Derivative kind, std::string_view b, std::string_view q, std::string_view f,
                          std::optional<double> f_origin_exponent = std::nullopt) {
    ProblemSpec spec{alpha, kind, expr::parse(b), expr::parse(q), expr::parse(f), 0.0};
    if (f_origin_exponent) {
      spec.f_origin_exponent = *f_origin_exponent;
    } else if (auto ps = spec.f.classify(); ps && !ps->empty()) {
      spec.f_origin_exponent = std::min(0.0, ps->min_exponent());
    }
    spec.validate();
    return spec;
  }

  void validate() const {
    validate_alpha(alpha);
    if (!(f_origin_exponent > -1.0 && f_origin_exponent <= 0.0))
      throw DomainError("f origin exponent must lie in (-1, 0]");
  }

  bool lower_order_vanishes() const { return b.is_zero() && q.is_zero(); }
};

/// Behaviour of an integrand at t = 0: t^{-sigma} times something possibly nonsmooth.
struct OriginProfile {
  double sigma = 0.0;
  bool nonsmooth = false;

  bool needs_grading() const { return sigma > 0.0 || nonsmooth; }

  static OriginProfile of_source(const ProblemSpec& spec) {
    OriginProfile p;
    p.sigma = -spec.f_origin_exponent;
    p.nonsmooth = p.sigma > 0.0;
    if (auto ps = spec.f.classify()) {
      for (const auto& t : ps->terms())
        if (t.exponent != std::floor(t.exponent)) p.nonsmooth = true;
    }
    return p;
  }
};

struct HatValue {
  double value;
  double derivative;
};

/// Interior hat function psi_j, j = 1..m-1.
inline HatValue hat(const Mesh& mesh, int j, double x) {
  const double xl = mesh.node(j - 1);
  const double xc = mesh.node(j);
  const double xr = mesh.node(j + 1);
  const double h = mesh.h();
  if (x >= xl && x < xc) return {(x - xl) / h, 1.0 / h};
  if (x >= xc && x < xr) return {(xr - x) / h, -1.0 / h};
  return {0.0, 0.0};
}

class TestBasis {
 public:
  TestBasis(Derivative kind, double alpha, const Mesh& mesh) : kind_(kind), alpha_(alpha), mesh_(mesh) {
    validate_alpha(alpha);
    c_.resize(mesh.elements() + 1);
    for (int i = 0; i <= mesh.elements(); ++i) {
      const double xi = mesh.node(i);
      c_[i] = kind == Derivative::RiemannLiouville ? std::pow(xi, alpha - 1.0) : xi;
    }
  }

  Derivative kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  const Mesh& mesh() const noexcept { return mesh_; }

  /// c_i for i = 0..m; c_m = 1 for both kinds.
  double c(int i) const { return c_[i]; }

  double value(int i, double x) const {
    const double xi = mesh_.node(i);
    const double left = x <= xi ? std::pow(xi - x, alpha_ - 1.0) : 0.0;
    return left - c_[i] * std::pow(1.0 - x, alpha_ - 1.0);
  }

  /// Right-sided Riemann-Liouville derivative of order alpha-1.
  double frac_derivative(int i, double x) const {
    const double g = gamma(alpha_);
    return (x <= mesh_.node(i) ? g : 0.0) - c_[i] * g;
  }

 private:
  Derivative kind_;
  double alpha_;
  Mesh mesh_;
  std::vector<double> c_;
};

/// Diagonal value of the leading block.
inline double assemble_leading(const Mesh& mesh, double alpha) {
  static_cast<void>(mesh);  // the identity holds on any uniform mesh
  validate_alpha(alpha);
  return -gamma(alpha);
}

struct AssemblyOptions {
  int quad_order = 16;
  int origin_grading_levels = 24;
  /// Use the closed-form kernel moments when f classifies as a power sum.
  bool symbolic_load = true;
};

/// Reference rules and the tabulated kernel for one (mesh, alpha, order).
class KernelQuadrature {
 public:
  KernelQuadrature(const Mesh& mesh, double alpha, int order = 16)
      : mesh_(mesh), alpha_(alpha), order_(order), scale_(std::pow(mesh.h(), alpha)) {
    if (order < 1) throw DomainError("KernelQuadrature: order must be >= 1");
    const QuadRule& gl = cached_rule(order, 0.0, 0.0);
    const QuadRule& gj = cached_rule(order, alpha - 1.0, 0.0);
    lambda_.resize(order);
    omega_.resize(order);
    lambda_j_.resize(order);
    omega_j_.resize(order);
    const double jscale = std::pow(2.0, -alpha);
    for (int k = 0; k < order; ++k) {
      lambda_[k] = 0.5 * (1.0 + gl.nodes[k]);
      omega_[k] = 0.5 * gl.weights[k];
      lambda_j_[k] = 0.5 * (1.0 + gj.nodes[k]);
      omega_j_[k] = jscale * gj.weights[k];
    }
    const int m = mesh.elements();
    kernel_.resize(static_cast<std::size_t>(m) * order);
    for (int d = 1; d < m; ++d)
      for (int k = 0; k < order; ++k) kernel_[static_cast<std::size_t>(d) * order + k] = std::pow(d + 1.0 - lambda_[k], alpha - 1.0);
  }

  const Mesh& mesh() const noexcept { return mesh_; }
  double alpha() const noexcept { return alpha_; }
  int order() const noexcept { return order_; }
  /// h^alpha: element integrals of g (x_i - t)^{alpha-1} in the reference variable.
  double scale() const noexcept { return scale_; }

  const std::vector<double>& lambda() const noexcept { return lambda_; }
  const std::vector<double>& omega() const noexcept { return omega_; }
  const std::vector<double>& jacobi_lambda() const noexcept { return lambda_j_; }
  /// Weights for \int_0^1 g(l) (1-l)^{alpha-1} dl.
  const std::vector<double>& jacobi_omega() const noexcept { return omega_j_; }

  /// (d + 1 - lambda_k)^{alpha-1} for d >= 1.
  const double* kernel_row(int d) const { return kernel_.data() + static_cast<std::size_t>(d) * order_; }

  double dot_kernel(const double* weighted, int d) const {
    const double* kr = kernel_row(d);
    double s = 0.0;
    for (int k = 0; k < order_; ++k) s += weighted[k] * kr[k];
    return s;
  }

 private:
  Mesh mesh_;
  double alpha_;
  int order_;
  double scale_;
  std::vector<double> lambda_, omega_, lambda_j_, omega_j_;
  std::vector<double> kernel_;
};

namespace detail {

template <class F>
double checked_eval(F& f, double t, int element) {
  double v;
  try {
    v = f(t);
  } catch (const DomainError& e) {
    std::ostringstream msg;
    msg << "element " << element << ": " << e.what();
    throw DomainError(msg.str());
  }
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "element " << element << ": non-finite integrand at t = " << t;
    throw NumericalError(msg.str());
  }
  return v;
}

}  // namespace detail

/**
 * P_i = \int_0^{x_i} g(t) (x_i - t)^{alpha-1} dt for i = 0..m (P_0 = 0).
 *
 * When the origin profile asks for it, element 1 is graded geometrically
 * toward 0 and its innermost piece carries the Jacobi weight t^{-sigma}.
 */
template <class F>
std::vector<double> kernel_moments(const KernelQuadrature& kq, F&& g, const OriginProfile& origin = {},
                                   int origin_grading_levels = 24) {
  const Mesh& mesh = kq.mesh();
  const int m = mesh.elements();
  const int n = kq.order();
  const double h = mesh.h();
  const double am1 = kq.alpha() - 1.0;
  const bool graded = origin.needs_grading();
  const double sigma = origin.sigma;

  std::vector<double> gw(static_cast<std::size_t>(m + 1) * n, 0.0);
  std::vector<double> touch(m + 1, 0.0);
  for (int e = graded ? 2 : 1; e <= m; ++e) {
    const double x0 = mesh.node(e - 1);
    for (int k = 0; k < n; ++k) gw[static_cast<std::size_t>(e) * n + k] = kq.omega()[k] * detail::checked_eval(g, x0 + kq.lambda()[k] * h, e);
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += kq.jacobi_omega()[k] * detail::checked_eval(g, x0 + kq.jacobi_lambda()[k] * h, e);
    touch[e] = kq.scale() * s;
  }

  std::vector<WeightedNode> first;
  std::vector<double> first_g;
  if (graded) {
    auto regular = [&](double t) {
      const double v = detail::checked_eval(g, t, 1);
      return sigma > 0.0 ? v * std::pow(t, sigma) : v;
    };
    first = weighted_nodes(0.0, h, {-sigma, origin_grading_levels}, {}, n);
    first_g.reserve(first.size());
    for (const auto& nd : first) first_g.push_back(regular(nd.t));
    touch[1] = integrate_weighted(regular, 0.0, h, {-sigma, origin_grading_levels}, {am1, 0}, n);
  }

  std::vector<double> P(m + 1, 0.0);
  for (int i = 1; i <= m; ++i) {
    const double xi = mesh.node(i);
    CompensatedSum acc;
    for (int e = 1; e < i; ++e) {
      if (e == 1 && graded) {
        CompensatedSum s;
        for (std::size_t k = 0; k < first.size(); ++k) s.add(first[k].weight * first_g[k] * std::pow(xi - first[k].t, am1));
        acc.add(s.value());
      } else {
        acc.add(kq.scale() * kq.dot_kernel(&gw[static_cast<std::size_t>(e) * n], i - e));
      }
    }
    acc.add(touch[i]);
    P[i] = acc.value();
    if (!std::isfinite(P[i])) {
      std::ostringstream msg;
      msg << "kernel moment at node " << i << " is not finite";
      throw NumericalError(msg.str());
    }
  }
  return P;
}

/// Stored rank-one pair is (u, v) = (-c, w), so the full block is L + u v^T.
struct LowerOrderBlock {
  LowerTriangular lower;
  std::vector<double> rank_one_u;
  std::vector<double> rank_one_v;
};

/**
 * L_ij = \int_{supp psi_j, t < x_i} (b psi_j' + q psi_j)(t) (x_i - t)^{alpha-1} dt  (j <= i),
 * w_j  = the same integral with x_i replaced by 1.
 */
inline LowerOrderBlock assemble_lower_order(const ProblemSpec& spec, const TestBasis& tb, const KernelQuadrature& kq) {
  const Mesh& mesh = kq.mesh();
  const int m = mesh.elements();
  const int nint = m - 1;
  const int n = kq.order();
  const double h = mesh.h();

  LowerOrderBlock block{LowerTriangular(nint), std::vector<double>(nint), std::vector<double>(nint, 0.0)};
  for (int i = 1; i <= nint; ++i) block.rank_one_u[i - 1] = -tb.c(i);
  if (spec.lower_order_vanishes()) return block;

  // rise: psi_e on element e; fall: psi_{e-1} on element e
  std::vector<double> rise(static_cast<std::size_t>(m + 1) * n), fall(static_cast<std::size_t>(m + 1) * n);
  std::vector<double> rise_touch(m + 1), fall_touch(m + 1);
  for (int e = 1; e <= m; ++e) {
    const double x0 = mesh.node(e - 1);
    for (int k = 0; k < n; ++k) {
      const double lam = kq.lambda()[k];
      const double t = x0 + lam * h;
      const double bv = detail::checked_eval(spec.b, t, e);
      const double qv = detail::checked_eval(spec.q, t, e);
      rise[static_cast<std::size_t>(e) * n + k] = kq.omega()[k] * (bv / h + qv * lam);
      fall[static_cast<std::size_t>(e) * n + k] = kq.omega()[k] * (-bv / h + qv * (1.0 - lam));
    }
    double sr = 0.0;
    double sf = 0.0;
    for (int k = 0; k < n; ++k) {
      const double lam = kq.jacobi_lambda()[k];
      const double t = x0 + lam * h;
      const double bv = detail::checked_eval(spec.b, t, e);
      const double qv = detail::checked_eval(spec.q, t, e);
      sr += kq.jacobi_omega()[k] * (bv / h + qv * lam);
      sf += kq.jacobi_omega()[k] * (-bv / h + qv * (1.0 - lam));
    }
    rise_touch[e] = kq.scale() * sr;
    fall_touch[e] = kq.scale() * sf;
  }

  auto rise_at = [&](int i, int e) {
    return e == i ? rise_touch[e] : kq.scale() * kq.dot_kernel(&rise[static_cast<std::size_t>(e) * n], i - e);
  };
  auto fall_at = [&](int i, int e) {
    return e == i ? fall_touch[e] : kq.scale() * kq.dot_kernel(&fall[static_cast<std::size_t>(e) * n], i - e);
  };

  for (int i = 1; i <= m; ++i) {
    double* row = i < m ? block.lower.row(i - 1) : block.rank_one_v.data();
    const int jmax = std::min(i, nint);
    for (int j = 1; j <= jmax; ++j) {
      CompensatedSum s;
      s.add(rise_at(i, j));
      if (j + 1 <= i) s.add(fall_at(i, j + 1));
      row[j - 1] = s.value();
    }
  }
  return block;
}

/// F_i = (f, phi_i) = P_i - c_i P_m.
inline std::vector<double> assemble_load(const ProblemSpec& spec, const TestBasis& tb, const KernelQuadrature& kq,
                                         const AssemblyOptions& opts = {}) {
  const Mesh& mesh = kq.mesh();
  const int m = mesh.elements();
  std::vector<double> P;
  std::optional<PowerSum> fps = opts.symbolic_load ? spec.f.classify() : std::nullopt;
  if (fps) {
    const PowerSum integral = frac_integral(*fps, spec.alpha);
    const double g = gamma(spec.alpha);
    P.resize(m + 1);
    for (int i = 0; i <= m; ++i) P[i] = g * integral(mesh.node(i));
  } else {
    P = kernel_moments(kq, spec.f, OriginProfile::of_source(spec), opts.origin_grading_levels);
  }
  std::vector<double> F(m - 1);
  for (int i = 1; i < m; ++i) F[i - 1] = P[i] - tb.c(i) * P[m];
  return F;
}

/// S = diag I + L + u v^T with load F.
struct AssembledSystem {
  double diag = 0.0;
  LowerTriangular lower;
  std::vector<double> rank_one_u;
  std::vector<double> rank_one_v;
  std::vector<double> load;

  int size() const noexcept { return lower.size(); }

  double entry(int r, int c) const {
    return (r == c ? diag : 0.0) + lower.at(r, c) + rank_one_u[r] * rank_one_v[c];
  }

  DenseMatrix dense() const {
    const int n = size();
    DenseMatrix S(n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) S(r, c) = entry(r, c);
    return S;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    const int n = size();
    double vx = 0.0;
    for (int c = 0; c < n; ++c) vx += rank_one_v[c] * x[c];
    std::vector<double> y(n);
    for (int r = 0; r < n; ++r) {
      const double* row = lower.row(r);
      double s = diag * x[r];
      for (int c = 0; c <= r; ++c) s += row[c] * x[c];
      y[r] = s + rank_one_u[r] * vx;
    }
    return y;
  }
};

inline AssembledSystem assemble(const ProblemSpec& spec, const Mesh& mesh, const AssemblyOptions& opts = {}) {
  spec.validate();
  const TestBasis tb(spec.kind, spec.alpha, mesh);
  const KernelQuadrature kq(mesh, spec.alpha, opts.quad_order);
  LowerOrderBlock block = assemble_lower_order(spec, tb, kq);
  AssembledSystem sys;
  sys.diag = assemble_leading(mesh, spec.alpha);
  sys.lower = std::move(block.lower);
  sys.rank_one_u = std::move(block.rank_one_u);
  sys.rank_one_v = std::move(block.rank_one_v);
  sys.load = assemble_load(spec, tb, kq, opts);
  return sys;
}

}  // namespace fracpg
