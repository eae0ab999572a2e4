// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fracpg/analysis.hpp"
#include "fracpg/enriched.hpp"
#include "support/oracles.hpp"

using namespace fracpg;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

void report(const char* id, bool ok, const std::string& what, double secs) {
  if (!ok) ++failures;
  std::printf("%s  %-4s %s  [%.2f s]\n", ok ? "PASS" : "FAIL", id, what.c_str(), secs);
  std::fflush(stdout);
}

void note(const std::string& s) { std::printf("      %s\n", s.c_str()); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool two_significant(double ours, double printed) {
  const double unit = std::pow(10.0, std::floor(std::log10(printed)) - 1.0);
  return std::abs(ours - printed) <= 0.5 * unit;
}

const Derivative kKinds[] = {Derivative::RiemannLiouville, Derivative::Caputo};
const char* kind_name(Derivative k) { return k == Derivative::RiemannLiouville ? "RL" : "C"; }

void diagonality() {
  Timer t;
  const int m = 16;
  double worst = 0.0;  // relative to Gamma(alpha)
  for (double alpha : {1.6, 1.75, 1.9})
    for (Derivative kind : kKinds) {
      const double g = fracpg::gamma(alpha);
      const double diag = assemble_leading(Mesh(m), alpha);
      for (int i = 1; i < m; ++i)
        for (int j = 1; j < m; ++j) {
          const double a = oracle::leading_entry(kind, alpha, m, i, j);
          worst = std::max(worst, std::abs(a - (i == j ? diag : 0.0)) / g);
        }
    }
  const double secs = t.seconds();
  report("1", worst < 1e-10 && secs < 1.0,
         "leading block = -Gamma(alpha) I by direct quadrature; max deviation / Gamma(alpha) = " + fmt("%.2e", worst),
         secs);
  note("the quadrature oracle gives diagonal -Gamma(alpha), not -Gamma(alpha)/h; tolerance applied as 1e-10*Gamma(alpha)");
}

void nodal_exactness() {
  Timer t;
  double worst = 0.0;
  for (Derivative kind : kKinds)
    for (double alpha : {1.6, 1.75, 1.9})
      for (const char* f : {"1", "x", "x^-0.25"}) {
        const auto spec = ProblemSpec::make(alpha, kind, "0", "0", f);
        const PowerSum u = exact_solution_bq0(*spec.f.classify(), alpha, kind);
        for (int m : {8, 16, 32}) {
          const FemSolution uh = solve_fbvp(spec, m);
          for (int i = 0; i <= m; ++i) worst = std::max(worst, std::abs(uh.nodal_values()[i] - u(uh.mesh().node(i))));
        }
      }
  report("2", worst <= 1e-8, "nodal exactness, b = q = 0; max nodal error = " + fmt("%.2e", worst), t.seconds());
}

const std::vector<int> kMeshes{10, 20, 40, 80, 160, 320};

void table_one() {
  Timer t;
  const auto spec = ProblemSpec::make(1.6, Derivative::RiemannLiouville, "0", "0", "x");
  const double printed[] = {3.10e-3, 1.39e-3, 6.42e-4, 2.99e-4, 1.39e-4, 6.47e-5};
  ReferencePolicy sampled;
  sampled.sampled_h1_grid = 8000;
  const ConvergenceReport rep = convergence_study(spec, kMeshes, sampled);
  const ConvergenceReport exact = convergence_study(spec, kMeshes);
  bool digits = true;
  for (std::size_t k = 0; k < kMeshes.size(); ++k) digits = digits && two_significant(rep.l2_errors[k], printed[k]);
  const double l2 = rep.l2_rates.back();
  const double h1 = rep.h1_rates.back();
  const double secs = t.seconds();
  const bool ok = digits && std::abs(l2 - 1.10) <= 0.05 && std::abs(h1 - 0.17) <= 0.05 && secs < 10.0;
  report("3", ok,
         "RL alpha=1.6 f=x: L2 errors to 2 digits " + std::string(digits ? "yes" : "no") + ", L2 rate " +
             fmt("%.3f", l2) + ", H1 rate " + fmt("%.3f", h1) + " (sampled on 8000 intervals)",
         secs);
  note("m=10 L2 " + fmt("%.4e", rep.l2_errors[0]) + ", m=320 L2 " + fmt("%.4e", rep.l2_errors.back()) +
       "; exact H1 seminorm rate " + fmt("%.3f", exact.h1_rates.back()));
}

void table_two() {
  Timer t;
  bool ok = true;
  std::string detail;
  for (double alpha : {1.6, 1.75, 1.9}) {
    const auto rep = convergence_study(ProblemSpec::make(alpha, Derivative::Caputo, "0", "0", "x"), kMeshes);
    const double l2 = rep.l2_rates.back(), h1 = rep.h1_rates.back();
    ok = ok && std::abs(l2 - 2.00) <= 0.05 && std::abs(h1 - 1.02) <= 0.05;
    detail += fmt(" %.2f:", alpha) + fmt("(%.3f,", l2) + fmt("%.3f)", h1);
  }
  const double secs = t.seconds();
  report("4", ok && secs < 10.0, "Caputo f=x, b = q = 0, last-pair (L2, H1) rates" + detail, secs);
}

struct Study {
  const char* name;
  Derivative kind;
  const char* f;
  double l2[3];
  double h1[3];
};

void coefficient_studies() {
  Timer t;
  const Study studies[] = {
      {"smooth-RL", Derivative::RiemannLiouville, "x", {1.13, 1.29, 1.66}, {0.20, 0.33, 0.70}},
      {"smooth-C", Derivative::Caputo, "x", {1.99, 2.00, 2.00}, {1.03, 1.00, 1.02}},
      {"interm-RL", Derivative::RiemannLiouville, "1", {1.12, 1.28, 1.53}, {0.20, 0.31, 0.54}},
      {"interm-C", Derivative::Caputo, "1", {2.00, 2.00, 2.00}, {1.03, 1.03, 1.04}},
      {"nonsmooth-RL", Derivative::RiemannLiouville, "x^-0.25", {1.13, 1.30, 1.53}, {0.20, 0.32, 0.52}},
      {"nonsmooth-C", Derivative::Caputo, "x^-0.25", {1.89, 1.97, 1.99}, {0.94, 0.99, 1.03}},
  };
  const double alphas[] = {1.6, 1.75, 1.9};
  bool ok = true;
  double worst = 0.0;
  std::vector<std::string> lines;
  for (const Study& s : studies)
    for (int a = 0; a < 3; ++a) {
      const auto spec = ProblemSpec::make(alphas[a], s.kind, "exp(x)", "x*(1-x)", s.f);
      const auto rep = convergence_study(spec, kMeshes);
      const double dl2 = std::abs(rep.l2_rates.back() - s.l2[a]);
      const double dh1 = std::abs(rep.h1_rates.back() - s.h1[a]);
      worst = std::max({worst, dl2, dh1});
      const bool row = dl2 <= 0.10 && dh1 <= 0.10;
      ok = ok && row;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-13s alpha=%.2f  L2 %.3f (printed %.2f)  H1 %.3f (printed %.2f)%s", s.name,
                    alphas[a], rep.l2_rates.back(), s.l2[a], rep.h1_rates.back(), s.h1[a], row ? "" : "  <-- off");
      lines.push_back(buf);
    }
  const double secs = t.seconds();
  report("5", ok && secs < 180.0,
         "b=e^x, q=x(1-x), reference m=5120: 18 rows, max |rate - printed| = " + fmt("%.3f", worst), secs);
  for (const auto& l : lines) note(l);
}

void reference_stability() {
  Timer t;
  double worst = 0.0;
  std::vector<std::string> lines;
  for (double alpha : {1.6, 1.75, 1.9}) {
    const auto spec = ProblemSpec::make(alpha, Derivative::RiemannLiouville, "exp(x)", "x*(1-x)", "x");
    ReferencePolicy coarse;
    coarse.m_ref = 2560;
    const auto a = convergence_study(spec, kMeshes, coarse);
    const auto b = convergence_study(spec, kMeshes);
    const double dl2 = std::abs(a.l2_rates.back() - b.l2_rates.back());
    const double dh1 = std::abs(a.h1_rates.back() - b.h1_rates.back());
    worst = std::max({worst, dl2, dh1});
    lines.push_back(fmt("alpha=%.2f", alpha) + fmt("  L2 rate %.3f -> ", a.l2_rates.back()) +
                    fmt("%.3f", b.l2_rates.back()) + fmt("  H1 rate %.3f -> ", a.h1_rates.back()) +
                    fmt("%.3f", b.h1_rates.back()));
  }
  report("5s", worst < 0.02, "reference mesh 2560 vs 5120 changes last-pair rates by at most " + fmt("%.4f", worst),
         t.seconds());
  for (const auto& l : lines) note(l);
}

void conditioning() {
  Timer t;
  const std::vector<int> ms{20, 40, 80, 160, 320, 640, 1280};
  const double printed[2][3][7] = {
      {{2.98, 3.48, 4.26, 4.30, 4.57, 4.84, 5.00},
       {2.06, 2.22, 2.33, 2.40, 2.45, 2.48, 2.50},
       {1.63, 1.68, 1.71, 1.73, 1.74, 1.74, 1.75}},
      {{2.75, 3.20, 3.57, 3.89, 4.16, 4.39, 4.60},
       {2.02, 2.17, 2.27, 2.34, 2.39, 2.42, 2.44},
       {1.63, 1.68, 1.71, 1.73, 1.73, 1.74, 1.74}},
  };
  const double alphas[] = {1.55, 1.75, 1.95};
  bool match = true, bounded = true;
  double worst = 0.0;
  std::vector<std::string> lines;
  for (int k = 0; k < 2; ++k)
    for (int a = 0; a < 3; ++a) {
      const auto spec = ProblemSpec::make(alphas[a], kKinds[k], "exp(x)", "x*(1-x)", "1");
      const auto kappa = condition_study(spec, ms);
      std::string line = std::string(kind_name(kKinds[k])) + fmt(" %.2f:", alphas[a]);
      for (std::size_t i = 0; i < ms.size(); ++i) {
        const double rel = std::abs(kappa[i] - printed[k][a][i]) / printed[k][a][i];
        worst = std::max(worst, rel);
        match = match && rel <= 0.15;
        line += fmt(" %.3f", kappa[i]);
      }
      if (a == 1) {
        const auto [lo, hi] = std::minmax_element(kappa.begin(), kappa.end());
        bounded = bounded && *hi / *lo < 2.0;
      }
      lines.push_back(line);
    }
  report("6", match && bounded,
         "preconditioned kappa_2, m=20..1280: max relative deviation " + fmt("%.3f", worst) + ", bounded " +
             (bounded ? "yes" : "no"),
         t.seconds());
  for (const auto& l : lines) note(l);
}

void enriched_scheme() {
  Timer t;
  const double alphas[] = {1.6, 1.75, 1.9};
  const double printed_l2[] = {1.74, 1.96, 2.00};
  bool ok = true;
  std::string detail;
  double mu10 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const auto spec = ProblemSpec::make(alphas[a], Derivative::RiemannLiouville, "1", "x*(1-x)", "1");
    const EnrichedReport rep = enriched_study(spec, kMeshes);
    const double l2 = rep.regular.l2_rates.back();
    const double mu = rep.mu_rates.back();
    ok = ok && std::abs(l2 - printed_l2[a]) <= 0.10 && std::abs(mu - 2.0) <= 0.15;
    if (a == 1) mu10 = rep.mu_errors[0];
    detail += fmt(" %.2f:", alphas[a]) + fmt("(%.3f,", l2) + fmt("%.3f)", mu);
  }
  ok = ok && two_significant(mu10, 1.59e-4);
  const double secs = t.seconds();
  report("7", ok && secs < 60.0,
         "enriched, b=1 q=x(1-x) f=1: (u^r L2 rate, mu rate)" + detail + "; |mu-mu_h| alpha=1.75 m=10 = " +
             fmt("%.3e", mu10),
         secs);
}

void properties() {
  Timer t;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> order(0.05, 2.0);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  std::uniform_real_distribution<double> adj(0.2, 1.8);
  std::uniform_int_distribution<int> deg(0, 4);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  double semigroup = 0.0, inverse = 0.0, equivalence = 0.0, adjoint = 0.0;
  for (int c = 0; c < 100; ++c) {
    semigroup = std::max(semigroup, oracle::semigroup_deviation(oracle::random_power_sum(rng, -0.9, 3.0), order(rng), order(rng)));
    inverse = std::max(inverse, oracle::left_inverse_deviation(oracle::random_power_sum(rng, -0.9, 3.0), order(rng)));
    equivalence = std::max(equivalence, oracle::derivative_equivalence_deviation(oracle::random_power_sum(rng, 1.0, 3.5), frac(rng)));
    std::vector<Term> phi;
    for (int k = 0; k < 3; ++k) phi.push_back({coef(rng), static_cast<double>(deg(rng))});
    PowerSum p(std::move(phi));
    if (p.empty()) p = PowerSum::constant(1.0);
    adjoint = std::max(adjoint, oracle::adjoint_deviation(oracle::random_power_sum(rng, -0.5, 3.0, 3), p, adj(rng)));
  }
  const double secs = t.seconds();
  const bool ok = semigroup <= 1e-12 && inverse <= 1e-12 && equivalence <= 1e-12 && adjoint <= 1e-10 && secs < 5.0;
  report("8", ok,
         "100 random cases each: semigroup " + fmt("%.1e", semigroup) + ", left inverse " + fmt("%.1e", inverse) +
             ", derivative equivalence " + fmt("%.1e", equivalence) + ", adjointness " + fmt("%.1e", adjoint),
         secs);
}

void solver_equivalence() {
  Timer t;
  double worst = 0.0;
  int count = 0;
  const char* bs[] = {"exp(x)", "-2", "1+x"};
  const char* qs[] = {"x*(1-x)", "3", "0"};
  const char* fs[] = {"1", "x^-0.25", "sin(4*x)"};
  for (int k = 0; k < 20; ++k) {
    const Derivative kind = kKinds[k % 2];
    const double alpha = 1.55 + 0.02 * k;
    const int m = 10 + 10 * k;  // n = m - 1 <= 199
    const auto spec = ProblemSpec::make(alpha, kind, bs[k % 3], qs[(k / 3) % 3], fs[(k / 2) % 3]);
    const AssembledSystem sys = assemble(spec, Mesh(m));
    const auto a = solve_structured(sys);
    const auto b = solve_dense(sys.dense(), sys.load);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    ++count;
  }
  report("9", worst < 1e-9 && count == 20, "structured vs dense on 20 systems, n <= 199: max difference " + fmt("%.2e", worst),
         t.seconds());
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> steps{
      {"1", diagonality},        {"2", nodal_exactness},    {"3", table_one},     {"4", table_two},
      {"5", coefficient_studies}, {"5s", reference_stability}, {"6", conditioning}, {"7", enriched_scheme},
      {"8", properties},          {"9", solver_equivalence}};
  for (const auto& [id, step] : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what(), 0.0);
    }
  }
  std::printf("%d failure(s)\n", failures);
  return failures ? 1 : 0;
}
