#pragma once

/**
 * @file enriched.hpp
 * @brief Singularity-enriched scheme for the Riemann-Liouville problem.
 *
 * The solution is split as u = u^r + mu u^s with u^s = x^{alpha-1} - x^2.
 * The regular part solves
 *
 *     -D^alpha u^r + b (u^r)' + q u^r + I^alpha(b (u^r)' + q u^r)(1) Q = f~,
 *
 *     Q  = c0 (D^alpha u^s - b (u^s)' - q u^s),
 *     f~ = f + (I^alpha f)(1) Q,
 *     c0 = 1 / (1 + I^alpha(b (u^s)' + q u^s)(1)),
 *
 * and mu_h = c0 I^alpha(f - b (u_h^r)' - q u_h^r)(1). Since
 * I^alpha(b psi_j' + q psi_j)(1) = w_j / Gamma(alpha), the extra term only
 * changes the rank-one factor: u_i = -c_i + (Q, phi_i) / Gamma(alpha).
 */

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "fracpg/analysis.hpp"
#include "fracpg/errors.hpp"
#include "fracpg/femcore.hpp"
#include "fracpg/fraccalc.hpp"
#include "fracpg/power_sum.hpp"
#include "fracpg/solver.hpp"
#include "fracpg/special.hpp"

namespace fracpg {

inline PowerSum singular_part(double alpha) {
  return PowerSum::monomial(1.0, alpha - 1.0) - PowerSum::monomial(1.0, 2.0);
}

namespace detail {

inline void require_rl(const ProblemSpec& spec) {
  if (spec.kind != Derivative::RiemannLiouville)
    throw DomainError("the enriched scheme is only defined for the Riemann-Liouville derivative");
}

/// Origin profile of b (u^s)' + q u^s: the derivative of x^{alpha-1} gives t^{alpha-2}.
inline OriginProfile singular_origin(double alpha) { return {2.0 - alpha, true}; }

inline double integral_at_one(const expr::Expression& g, double alpha, const OriginProfile& origin) {
  if (auto ps = g.classify()) return frac_integral(*ps, alpha)(1.0);
  PointIntegralOptions opts;
  opts.origin_exponent = origin.sigma;
  opts.nonsmooth_origin = origin.nonsmooth;
  return frac_integral_point(g, alpha, 1.0, Side::Left, opts);
}

}  // namespace detail

/// c0 = 1 / (1 + I^alpha(b (u^s)' + q u^s)(1)).
inline double compute_c0(const ProblemSpec& spec) {
  detail::require_rl(spec);
  const double alpha = spec.alpha;
  const PowerSum us = singular_part(alpha);
  const PowerSum dus = us.derivative();
  double inner;
  const auto bps = spec.b.classify();
  const auto qps = spec.q.classify();
  if (bps && qps) {
    inner = frac_integral(*bps * dus + *qps * us, alpha)(1.0);
  } else {
    PointIntegralOptions opts;
    opts.origin_exponent = 2.0 - alpha;
    opts.nonsmooth_origin = true;
    inner = frac_integral_point([&](double t) { return spec.b(t) * dus(t) + spec.q(t) * us(t); }, alpha, 1.0,
                                Side::Left, opts);
  }
  const double denom = 1.0 + inner;
  if (!(std::abs(denom) > 1e-8)) {
    std::ostringstream msg;
    msg << "enriched setup: 1 + I^alpha(b (u^s)' + q u^s)(1) = " << denom
        << " is too close to 0; replace x^2 in u^s by another smooth v with v(0) = 0, v(1) = 1";
    throw DomainError(msg.str());
  }
  return 1.0 / denom;
}

struct EnrichedSetup {
  ProblemSpec spec;
  PowerSum u_s;
  PowerSum u_s_prime;
  PowerSum dalpha_us;  // -2 x^{2-alpha} / Gamma(3-alpha)
  double c0;
  double i_alpha_f_at_1;
  /// Q as a power sum when b and q classify.
  std::optional<PowerSum> q_symbolic;

  static EnrichedSetup make(const ProblemSpec& spec) {
    detail::require_rl(spec);
    spec.validate();
    const double alpha = spec.alpha;
    const PowerSum us = singular_part(alpha);
    EnrichedSetup s{spec, us, us.derivative(), frac_derivative(us, alpha, Derivative::RiemannLiouville),
                    compute_c0(spec), 0.0, std::nullopt};
    s.i_alpha_f_at_1 = detail::integral_at_one(spec.f, alpha, OriginProfile::of_source(spec));
    const auto bps = spec.b.classify();
    const auto qps = spec.q.classify();
    if (bps && qps) s.q_symbolic = s.c0 * (s.dalpha_us - *bps * s.u_s_prime - *qps * s.u_s);
    return s;
  }

  double Q(double x) const {
    return c0 * (dalpha_us(x) - spec.b(x) * u_s_prime(x) - spec.q(x) * u_s(x));
  }

  double f_tilde(double x) const { return spec.f(x) + i_alpha_f_at_1 * Q(x); }
};

/// Plain system with the rank-one factor and load adjusted for the enrichment.
inline AssembledSystem assemble_enriched(const EnrichedSetup& setup, const Mesh& mesh,
                                         const AssemblyOptions& opts = {}) {
  const double alpha = setup.spec.alpha;
  AssembledSystem sys = assemble(setup.spec, mesh, opts);
  const TestBasis tb(Derivative::RiemannLiouville, alpha, mesh);
  const int m = mesh.elements();

  std::vector<double> PQ;
  if (setup.q_symbolic && opts.symbolic_load) {
    const PowerSum iq = frac_integral(*setup.q_symbolic, alpha);
    const double g = gamma(alpha);
    PQ.resize(m + 1);
    for (int i = 0; i <= m; ++i) PQ[i] = g * iq(mesh.node(i));
  } else {
    const KernelQuadrature kq(mesh, alpha, opts.quad_order);
    PQ = kernel_moments(kq, [&](double t) { return setup.Q(t); }, detail::singular_origin(alpha),
                        opts.origin_grading_levels);
  }

  const double g = gamma(alpha);
  for (int i = 1; i < m; ++i) {
    const double qphi = PQ[i] - tb.c(i) * PQ[m];
    sys.rank_one_u[i - 1] += qphi / g;
    sys.load[i - 1] += setup.i_alpha_f_at_1 * qphi;
  }
  return sys;
}

struct EnrichedSolution {
  FemSolution regular;
  double mu_h;
  PowerSum u_s;

  double operator()(double x) const { return regular(x) + mu_h * u_s(x); }
};

/// mu_h = c0 I^alpha(f - b (u_h^r)' - q u_h^r)(1), integrating element by element.
inline double reconstruct_mu(const EnrichedSetup& setup, const FemSolution& ur, int quad_order = 16) {
  const auto& spec = setup.spec;
  const OriginProfile origin = OriginProfile::of_source(spec);
  PointIntegralOptions opts;
  opts.order = quad_order;
  opts.origin_exponent = origin.sigma;
  opts.nonsmooth_origin = origin.nonsmooth;
  opts.breakpoints = ur.mesh().nodes();
  const double v = frac_integral_point(
      [&](double t) { return spec.f(t) - spec.b(t) * ur.slope(t) - spec.q(t) * ur(t); }, spec.alpha, 1.0, Side::Left,
      opts);
  return setup.c0 * v;
}

inline EnrichedSolution reconstruct(const EnrichedSetup& setup, const FemSolution& ur, int quad_order = 16) {
  return {ur, reconstruct_mu(setup, ur, quad_order), setup.u_s};
}

inline EnrichedSolution solve_enriched(const EnrichedSetup& setup, int m, const AssemblyOptions& opts = {}) {
  if (m < 4) throw DomainError("solve_enriched: need m >= 4");
  const Mesh mesh(m);
  const AssembledSystem sys = assemble_enriched(setup, mesh, opts);
  const FemSolution ur = FemSolution::from_interior(mesh, solve(sys), setup.spec.alpha, setup.spec.kind);
  return reconstruct(setup, ur, opts.quad_order);
}

struct EnrichedReport {
  ConvergenceReport regular;  // errors of u^r
  std::vector<double> mu_h;
  std::vector<double> mu_errors;
  std::vector<double> mu_rates;
  double mu_ls_rate = 0.0;
  double mu_reference = 0.0;
};

/// Errors of u_h^r and mu_h against the exact split (b = q = 0, power-sum f) or a fine enriched solve.
inline EnrichedReport enriched_study(const ProblemSpec& spec, const std::vector<int>& m_list,
                                     const ReferencePolicy& policy = {}, const AssemblyOptions& opts = {}) {
  validate_mesh_list(m_list);
  const EnrichedSetup setup = EnrichedSetup::make(spec);
  const auto fps = spec.f.classify();
  const bool exact_available = spec.lower_order_vanishes() && fps.has_value();
  ReferenceKind kind = policy.kind;
  if (kind == ReferenceKind::Auto) kind = exact_available ? ReferenceKind::Exact : ReferenceKind::FineMesh;
  if (kind == ReferenceKind::Exact && !exact_available)
    throw DomainError("exact reference needs b = q = 0 and a power-sum source");

  Reference ref = PowerSum{};
  double mu_ref;
  if (kind == ReferenceKind::Exact) {
    const PowerSum u = exact_solution_bq0(*fps, spec.alpha, spec.kind);
    mu_ref = u.coefficient(spec.alpha - 1.0);
    ref = u - mu_ref * setup.u_s;
  } else {
    if (policy.m_ref <= m_list.back()) throw DomainError("reference mesh must be finer than every study mesh");
    const EnrichedSolution fine = solve_enriched(setup, policy.m_ref, opts);
    mu_ref = fine.mu_h;
    ref = fine.regular;
  }

  ErrorNormOptions nopts;
  nopts.sampled_h1_grid = policy.sampled_h1_grid;
  EnrichedReport rep;
  std::vector<ErrorNorms> errs;
  for (int m : m_list) {
    const EnrichedSolution sol = solve_enriched(setup, m, opts);
    errs.push_back(error_norms(sol.regular, ref, nopts));
    rep.mu_h.push_back(sol.mu_h);
    rep.mu_errors.push_back(std::abs(sol.mu_h - mu_ref));
  }
  rep.regular = make_report(m_list, errs);
  rep.regular.reference = kind;
  rep.regular.m_ref = kind == ReferenceKind::FineMesh ? policy.m_ref : 0;
  rep.mu_rates = pairwise_rates(rep.regular.h, rep.mu_errors);
  rep.mu_ls_rate = least_squares_rate(rep.regular.h, rep.mu_errors);
  rep.mu_reference = mu_ref;
  return rep;
}

}  // namespace fracpg
