#pragma once

/**
 * @file analysis.hpp
 * @brief Closed-form solutions, residual checks, error norms and convergence studies.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fracpg/errors.hpp"
#include "fracpg/femcore.hpp"
#include "fracpg/fraccalc.hpp"
#include "fracpg/power_sum.hpp"
#include "fracpg/quadrature.hpp"
#include "fracpg/solver.hpp"

namespace fracpg {

/// Continuous piecewise-linear function on a uniform mesh, zero at both ends.
class FemSolution {
 public:
  FemSolution(const Mesh& mesh, std::vector<double> nodal, double alpha, Derivative kind)
      : mesh_(mesh), nodal_(std::move(nodal)), alpha_(alpha), kind_(kind) {
    if (static_cast<int>(nodal_.size()) != mesh.elements() + 1)
      throw DomainError("FemSolution: need m + 1 nodal values");
    nodal_.front() = 0.0;
    nodal_.back() = 0.0;
  }

  /// Interior values (length m-1) padded with the homogeneous boundary values.
  static FemSolution from_interior(const Mesh& mesh, const std::vector<double>& interior, double alpha,
                                   Derivative kind) {
    std::vector<double> v(mesh.elements() + 1, 0.0);
    std::copy(interior.begin(), interior.end(), v.begin() + 1);
    return FemSolution(mesh, std::move(v), alpha, kind);
  }

  const Mesh& mesh() const noexcept { return mesh_; }
  const std::vector<double>& nodal_values() const noexcept { return nodal_; }
  double alpha() const noexcept { return alpha_; }
  Derivative kind() const noexcept { return kind_; }

  double operator()(double x) const {
    const int k = element_of(x);
    const double s = x * mesh_.elements() - k;
    return nodal_[k] + (nodal_[k + 1] - nodal_[k]) * s;
  }

  /// Derivative on the element containing x (elements are half-open on the right).
  double slope(double x) const { return slope_on(element_of(x) + 1); }

  /// Derivative on element e = 1..m.
  double slope_on(int e) const { return (nodal_[e] - nodal_[e - 1]) * mesh_.elements(); }

 private:
  int element_of(double x) const {
    const int m = mesh_.elements();
    return std::clamp(static_cast<int>(std::floor(x * m)), 0, m - 1);
  }

  Mesh mesh_;
  std::vector<double> nodal_;
  double alpha_;
  Derivative kind_;
};

namespace detail {

/// 33 Chebyshev points of the first kind mapped to (0.01, 0.99).
inline std::vector<double> residual_points() {
  std::vector<double> x(33);
  for (int k = 0; k < 33; ++k) x[k] = 0.5 + 0.49 * std::cos((2.0 * k + 1.0) * std::numbers::pi / 66.0);
  return x;
}

inline double frac_derivative_value(const PowerSum& u, double alpha, Derivative kind, double x) {
  try {
    return frac_derivative(u, alpha, kind)(x);
  } catch (const UnsupportedExponent&) {
    if (kind == Derivative::RiemannLiouville) return frac_derivative_at(u, alpha, x);
    // Caputo: I^{2-alpha} u''
    PointIntegralOptions opts;
    double worst = 0.0;
    for (const auto& t : u.terms())
      if (t.exponent != 0.0 && t.exponent != 1.0) worst = std::max(worst, 2.0 - t.exponent);
    if (!(worst < 1.0)) throw;
    opts.origin_exponent = worst;
    opts.nonsmooth_origin = true;
    return frac_integral_point([&](double t) { return u.derivative_at(t, 2); }, 2.0 - alpha, x, Side::Left, opts);
  }
}

}  // namespace detail

/// max |-D^alpha u + b u' + q u - f| over 33 Chebyshev points in (0.01, 0.99).
inline double residual_check(const PowerSum& u, const ProblemSpec& spec) {
  double worst = 0.0;
  for (double x : detail::residual_points()) {
    const double r = -detail::frac_derivative_value(u, spec.alpha, spec.kind, x) + spec.b(x) * u.derivative_at(x, 1) +
                     spec.q(x) * u(x) - spec.f(x);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

/// Same check for b = q = 0 with a power-sum source.
inline double residual_check(const PowerSum& u, const PowerSum& f, double alpha, Derivative kind) {
  double worst = 0.0;
  for (double x : detail::residual_points())
    worst = std::max(worst, std::abs(-detail::frac_derivative_value(u, alpha, kind, x) - f(x)));
  return worst;
}

/**
 * Closed-form solution for b = q = 0:
 *   Riemann-Liouville: u = -I^alpha f + (I^alpha f)(1) x^{alpha-1},
 *   Caputo:            u = -I^alpha f + (I^alpha f)(1) x.
 * Only served after it passes the residual check.
 */
inline PowerSum exact_solution_bq0(const PowerSum& f, double alpha, Derivative kind) {
  validate_alpha(alpha);
  const PowerSum integral = frac_integral(f, alpha);
  const double at_one = integral(1.0);
  const double kernel = kind == Derivative::RiemannLiouville ? alpha - 1.0 : 1.0;
  PowerSum u = PowerSum::monomial(at_one, kernel) - integral;

  double scale = 1.0;
  for (double x : detail::residual_points()) scale = std::max(scale, std::abs(f(x)));
  const double res = residual_check(u, f, alpha, kind);
  if (!(res <= 1e-9 * scale)) {
    std::ostringstream msg;
    msg << "exact_solution_bq0: closed form fails its residual check (" << res << ")";
    throw NumericalError(msg.str());
  }
  return u;
}

inline FemSolution solve_fbvp(const ProblemSpec& spec, int m, const AssemblyOptions& opts = {}) {
  if (m < 4) throw DomainError("solve_fbvp: need m >= 4");
  const Mesh mesh(m);
  const AssembledSystem sys = assemble(spec, mesh, opts);
  return FemSolution::from_interior(mesh, solve(sys), spec.alpha, spec.kind);
}

/// Reference given by value and derivative callables, smooth on each element.
struct SmoothReference {
  std::function<double(double)> value;
  std::function<double(double)> slope;
};

using Reference = std::variant<PowerSum, FemSolution, SmoothReference>;

struct ErrorNorms {
  double l2;
  double h1;
};

struct ErrorNormOptions {
  int order = 16;
  /// If set, the H1 seminorm is replaced by the discrete seminorm of the error
  /// sampled at the nodes of a uniform grid with this many intervals.
  std::optional<int> sampled_h1_grid;
};

namespace detail {

inline double sampled_h1(const FemSolution& uh, const std::function<double(double)>& ref, int M) {
  if (M < uh.mesh().elements()) throw DomainError("sampled H1 grid must be at least as fine as the mesh");
  CompensatedSum acc;
  double prev = ref(0.0) - uh(0.0);
  for (int k = 1; k <= M; ++k) {
    const double x = static_cast<double>(k) / M;
    const double e = ref(x) - uh(x);
    const double d = (e - prev) * M;
    acc.add(d * d / M);
    prev = e;
  }
  return std::sqrt(acc.value());
}

/// \int_0^b p(t) dt for a power sum with every exponent > -1.
inline double integral_from_zero(const PowerSum& p, double b) {
  CompensatedSum acc;
  for (const auto& t : p.terms()) {
    if (!(t.exponent > -1.0)) throw DomainError("error_norms: squared error is not integrable at 0");
    acc.add(t.coeff * std::pow(b, t.exponent + 1.0) / (t.exponent + 1.0));
  }
  return acc.value();
}

inline ErrorNorms norms_power_sum(const FemSolution& uh, const PowerSum& u, const ErrorNormOptions& opts) {
  const Mesh& mesh = uh.mesh();
  const int m = mesh.elements();
  bool nonsmooth = false;
  for (const auto& t : u.terms()) {
    if (t.exponent != std::floor(t.exponent)) nonsmooth = true;
  }

  CompensatedSum l2;
  CompensatedSum h1;
  for (int e = 1; e <= m; ++e) {
    const double a = mesh.node(e - 1);
    const double b = mesh.node(e);
    const double s = uh.slope_on(e);
    const double ua = uh.nodal_values()[e - 1];
    auto err = [&](double t) { return u(t) - (ua + s * (t - a)); };
    auto derr = [&](double t) { return u.derivative_at(t, 1) - s; };
    if (e == 1 && nonsmooth) {
      // the error is itself a power sum on the first element: integrate its square exactly
      const PowerSum err_ps = u - PowerSum::monomial(s, 1.0);
      l2.add(integral_from_zero(err_ps * err_ps, b));
      const PowerSum derr_ps = u.derivative() - PowerSum::constant(s);
      h1.add(integral_from_zero(derr_ps * derr_ps, b));
    } else {
      l2.add(integrate_weighted([&](double t) { return err(t) * err(t); }, a, b, {}, {}, opts.order));
      h1.add(integrate_weighted([&](double t) { const double d = derr(t); return d * d; }, a, b, {}, {}, opts.order));
    }
  }
  ErrorNorms out{std::sqrt(l2.value()), std::sqrt(h1.value())};
  if (opts.sampled_h1_grid) out.h1 = sampled_h1(uh, [&](double x) { return u(x); }, *opts.sampled_h1_grid);
  return out;
}

inline ErrorNorms norms_fem(const FemSolution& uh, const FemSolution& ref, const ErrorNormOptions& opts) {
  // both are linear between consecutive points of the merged node set
  std::vector<double> pts = uh.mesh().nodes();
  const std::vector<double> fine = ref.mesh().nodes();
  pts.insert(pts.end(), fine.begin(), fine.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(), [](double a, double b) { return std::abs(a - b) <= 1e-15; }),
            pts.end());

  const QuadRule& g4 = cached_rule(4, 0.0, 0.0);
  CompensatedSum l2;
  CompensatedSum h1;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k];
    const double b = pts[k + 1];
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double ds = ref.slope(mid) - uh.slope(mid);
    double sl2 = 0.0;
    double sh1 = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double t = mid + half * g4.nodes[q];
      const double e = ref(t) - uh(t);
      sl2 += g4.weights[q] * e * e;
      sh1 += g4.weights[q] * ds * ds;
    }
    l2.add(half * sl2);
    h1.add(half * sh1);
  }
  ErrorNorms out{std::sqrt(l2.value()), std::sqrt(h1.value())};
  if (opts.sampled_h1_grid) out.h1 = sampled_h1(uh, [&](double x) { return ref(x); }, *opts.sampled_h1_grid);
  return out;
}

inline ErrorNorms norms_smooth(const FemSolution& uh, const SmoothReference& ref, const ErrorNormOptions& opts) {
  const Mesh& mesh = uh.mesh();
  CompensatedSum l2;
  CompensatedSum h1;
  for (int e = 1; e <= mesh.elements(); ++e) {
    const double a = mesh.node(e - 1);
    const double s = uh.slope_on(e);
    const double ua = uh.nodal_values()[e - 1];
    l2.add(integrate_weighted([&](double t) { const double d = ref.value(t) - (ua + s * (t - a)); return d * d; }, a,
                              mesh.node(e), {}, {}, opts.order));
    h1.add(integrate_weighted([&](double t) { const double d = ref.slope(t) - s; return d * d; }, a, mesh.node(e), {},
                              {}, opts.order));
  }
  ErrorNorms out{std::sqrt(l2.value()), std::sqrt(h1.value())};
  if (opts.sampled_h1_grid) out.h1 = sampled_h1(uh, ref.value, *opts.sampled_h1_grid);
  return out;
}

}  // namespace detail

/// L2 norm and H1 seminorm of reference - u_h.
inline ErrorNorms error_norms(const FemSolution& uh, const Reference& reference, const ErrorNormOptions& opts = {}) {
  if (!(uh.alpha() > 1.5)) throw DomainError("error_norms: alpha <= 3/2 gives a derivative outside L2");
  return std::visit(
      [&](const auto& ref) -> ErrorNorms {
        using T = std::decay_t<decltype(ref)>;
        if constexpr (std::is_same_v<T, PowerSum>) {
          return detail::norms_power_sum(uh, ref, opts);
        } else if constexpr (std::is_same_v<T, FemSolution>) {
          return detail::norms_fem(uh, ref, opts);
        } else {
          return detail::norms_smooth(uh, ref, opts);
        }
      },
      reference);
}

/// Nodal interpolant of a callable.
template <class F>
FemSolution interpolate(const Mesh& mesh, F&& u, double alpha, Derivative kind) {
  std::vector<double> v(mesh.elements() + 1);
  for (int i = 0; i <= mesh.elements(); ++i) v[i] = u(mesh.node(i));
  return FemSolution(mesh, std::move(v), alpha, kind);
}

enum class ReferenceKind { Auto, Exact, FineMesh };

struct ReferencePolicy {
  ReferenceKind kind = ReferenceKind::Auto;
  int m_ref = 5120;
  std::optional<int> sampled_h1_grid;
};

struct ConvergenceReport {
  std::vector<int> mesh_sizes;
  std::vector<double> h;
  std::vector<double> l2_errors;
  std::vector<double> h1_errors;
  std::vector<double> l2_rates;
  std::vector<double> h1_rates;
  double ls_rate_l2 = 0.0;
  double ls_rate_h1 = 0.0;
  ReferenceKind reference = ReferenceKind::Exact;
  int m_ref = 0;  // 0 for an exact reference
};

/// log(e_k/e_{k+1}) / log(h_k/h_{k+1}) for consecutive pairs.
inline std::vector<double> pairwise_rates(const std::vector<double>& h, const std::vector<double>& e) {
  std::vector<double> r;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) r.push_back(std::log(e[k] / e[k + 1]) / std::log(h[k] / h[k + 1]));
  return r;
}

/// Least-squares slope of log e against log h.
inline double least_squares_rate(const std::vector<double>& h, const std::vector<double>& e) {
  const std::size_t n = e.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = std::log(h[k]);
    const double y = std::log(e[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline void validate_mesh_list(const std::vector<int>& m_list) {
  if (m_list.empty()) throw DomainError("mesh list is empty");
  for (std::size_t k = 0; k < m_list.size(); ++k) {
    if (m_list[k] < 4) throw DomainError("mesh sizes must be >= 4");
    if (k > 0 && m_list[k] <= m_list[k - 1]) throw DomainError("mesh sizes must be strictly increasing");
  }
}

inline ConvergenceReport make_report(const std::vector<int>& m_list, const std::vector<ErrorNorms>& errs) {
  ConvergenceReport rep;
  rep.mesh_sizes = m_list;
  for (std::size_t k = 0; k < m_list.size(); ++k) {
    rep.h.push_back(1.0 / m_list[k]);
    rep.l2_errors.push_back(errs[k].l2);
    rep.h1_errors.push_back(errs[k].h1);
  }
  rep.l2_rates = pairwise_rates(rep.h, rep.l2_errors);
  rep.h1_rates = pairwise_rates(rep.h, rep.h1_errors);
  rep.ls_rate_l2 = least_squares_rate(rep.h, rep.l2_errors);
  rep.ls_rate_h1 = least_squares_rate(rep.h, rep.h1_errors);
  return rep;
}

inline ConvergenceReport convergence_study(const ProblemSpec& spec, const std::vector<int>& m_list,
                                           const ReferencePolicy& policy = {}, const AssemblyOptions& opts = {}) {
  validate_mesh_list(m_list);
  const auto fps = spec.f.classify();
  const bool exact_available = spec.lower_order_vanishes() && fps.has_value();
  ReferenceKind kind = policy.kind;
  if (kind == ReferenceKind::Auto) kind = exact_available ? ReferenceKind::Exact : ReferenceKind::FineMesh;
  if (kind == ReferenceKind::Exact && !exact_available)
    throw DomainError("exact reference needs b = q = 0 and a power-sum source");

  Reference ref = PowerSum{};
  if (kind == ReferenceKind::Exact) {
    ref = exact_solution_bq0(*fps, spec.alpha, spec.kind);
  } else {
    if (policy.m_ref <= m_list.back()) throw DomainError("reference mesh must be finer than every study mesh");
    ref = solve_fbvp(spec, policy.m_ref, opts);
  }

  ErrorNormOptions nopts;
  nopts.sampled_h1_grid = policy.sampled_h1_grid;
  std::vector<ErrorNorms> errs;
  for (int m : m_list) errs.push_back(error_norms(solve_fbvp(spec, m, opts), ref, nopts));
  ConvergenceReport rep = make_report(m_list, errs);
  rep.reference = kind;
  rep.m_ref = kind == ReferenceKind::FineMesh ? policy.m_ref : 0;
  return rep;
}

/// kappa_2 of the leading-block-scaled system for each mesh size.
inline std::vector<double> condition_study(const ProblemSpec& spec, const std::vector<int>& m_list,
                                           const AssemblyOptions& opts = {}) {
  validate_mesh_list(m_list);
  std::vector<double> out;
  for (int m : m_list) out.push_back(condition_number(assemble(spec, Mesh(m), opts), true));
  return out;
}

}  // namespace fracpg
