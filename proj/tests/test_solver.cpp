#include <chrono>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fracpg/femcore.hpp"
#include "fracpg/solver.hpp"

using fracpg::DenseMatrix;
using fracpg::Derivative;
using fracpg::Mesh;
using fracpg::ProblemSpec;

namespace {

double inf_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

DenseMatrix random_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix A(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) A(r, c) = u(rng) + (r == c ? n / 4.0 : 0.0);
  return A;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s = std::max(s, std::abs(a[k] - b[k]));
  return s;
}

}  // namespace

TEST(Dense, Examples) {
  const auto x = fracpg::solve_dense(DenseMatrix::identity(3), {1, 2, 3});
  EXPECT_EQ(x, (std::vector<double>{1, 2, 3}));
  DenseMatrix D(2);
  D(0, 0) = 2;
  D(1, 1) = 4;
  const auto y = fracpg::solve_dense(D, {2, 8});
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 2.0);
}

TEST(Dense, ResidualBound) {
  std::mt19937_64 rng(3);
  const int n = 50;
  const DenseMatrix A = random_matrix(n, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> F(n);
  for (double& v : F) v = u(rng);
  const auto x = fracpg::solve_dense(A, F);
  auto r = A.apply(x);
  for (int k = 0; k < n; ++k) r[k] -= F[k];
  double normA = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::abs(A(i, j));
    normA = std::max(normA, s);
  }
  EXPECT_LE(inf_norm(r), 1e-10 * (normA * inf_norm(x) + inf_norm(F)));
}

TEST(Dense, TransposeSolve) {
  std::mt19937_64 rng(4);
  const int n = 20;
  const DenseMatrix A = random_matrix(n, rng);
  std::vector<double> b(n, 1.0);
  const auto x = fracpg::LUFactorization(A).solve_transpose(b);
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int r = 0; r < n; ++r) s += A(r, c) * x[r];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Dense, SingularReportsPivot) {
  DenseMatrix A(3);
  A(0, 0) = 1;
  A(0, 1) = 2;
  A(1, 0) = 2;
  A(1, 1) = 4;
  A(2, 2) = 1;
  try {
    fracpg::solve_dense(A, {1, 1, 1});
    FAIL() << "no error";
  } catch (const fracpg::SingularMatrix& e) {
    EXPECT_EQ(e.pivot(), 1);
  }
}

TEST(Structured, TrivialCase) {
  const fracpg::LowerTriangular L(3);
  const auto x = fracpg::solve_structured(-2.0, L, {0, 0, 0}, {1, 1, 1}, {2, 4, 6});
  EXPECT_EQ(x, (std::vector<double>{-1, -2, -3}));
}

TEST(Structured, BreakdownIsReported) {
  fracpg::LowerTriangular L(1);
  // 1 + v z = 1 + (-1)(1) = 0
  EXPECT_THROW(fracpg::solve_structured(1.0, L, {1.0}, {-1.0}, {1.0}), fracpg::SolverBreakdown);
}

TEST(Structured, AgreesWithDense) {
  const auto spec = ProblemSpec::make(1.75, Derivative::RiemannLiouville, "exp(x)", "x*(1-x)", "1");
  const auto sys = fracpg::assemble(spec, Mesh(40));
  EXPECT_LT(max_diff(fracpg::solve_structured(sys), fracpg::solve_dense(sys.dense(), sys.load)), 1e-9);
}

TEST(Structured, AgreesWithDenseAcrossProblems) {
  int count = 0;
  for (Derivative kind : {Derivative::RiemannLiouville, Derivative::Caputo})
    for (double alpha : {1.55, 1.8})
      for (int m : {10, 50, 201}) {
        const auto spec = ProblemSpec::make(alpha, kind, "-3*exp(x)", "5*x", "x^-0.25 + sin(x)", -0.25);
        const auto sys = fracpg::assemble(spec, Mesh(m));
        EXPECT_LT(max_diff(fracpg::solve(sys), fracpg::solve_dense(sys.dense(), sys.load)), 1e-9);
        ++count;
      }
  EXPECT_EQ(count, 12);
}

TEST(Structured, LargeSolveIsFast) {
  const auto spec = ProblemSpec::make(1.75, Derivative::RiemannLiouville, "exp(x)", "x*(1-x)", "1");
  const auto t0 = std::chrono::steady_clock::now();
  const auto sys = fracpg::assemble(spec, Mesh(5120));
  const auto x = fracpg::solve(sys);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(x.size(), 5119u);
  EXPECT_LT(secs, 5.0);
}

TEST(Condition, Examples) {
  EXPECT_DOUBLE_EQ(fracpg::condition_number(DenseMatrix::identity(5)), 1.0);
  DenseMatrix D(2);
  D(0, 0) = 1;
  D(1, 1) = 10;
  EXPECT_NEAR(fracpg::condition_number(D), 10.0, 1e-12);
}

TEST(Condition, ScaleInvariant) {
  std::mt19937_64 rng(8);
  const DenseMatrix A = random_matrix(30, rng);
  const double k = fracpg::condition_number(A);
  for (double t : {0.5, 3.0}) {
    fracpg::ConditionOptions opts;
    opts.precondition = true;
    opts.leading_diag = 1.0 / t;
    EXPECT_NEAR(fracpg::condition_number(A, opts), k, 1e-10 * k);
  }
}

TEST(Condition, IterationAgreesWithSvd) {
  const auto spec = ProblemSpec::make(1.75, Derivative::RiemannLiouville, "exp(x)", "x*(1-x)", "1");
  const auto sys = fracpg::assemble(spec, Mesh(120));
  fracpg::ConditionOptions svd;
  fracpg::ConditionOptions iter;
  iter.svd_limit = 0;
  const DenseMatrix S = sys.dense();
  const double a = fracpg::condition_number(S, svd);
  const double b = fracpg::condition_number(S, iter);
  EXPECT_NEAR(a, b, 1e-6 * a);
}

TEST(Condition, NonConvergenceIsReported) {
  std::mt19937_64 rng(9);
  fracpg::ConditionOptions opts;
  opts.svd_limit = 0;
  opts.max_iterations = 2;
  EXPECT_THROW(fracpg::condition_number(random_matrix(20, rng), opts), fracpg::NumericalError);
}

TEST(Condition, AssembledSystemIsWellConditioned) {
  const auto spec = ProblemSpec::make(1.75, Derivative::RiemannLiouville, "exp(x)", "x*(1-x)", "1");
  const double k80 = fracpg::condition_number(fracpg::assemble(spec, Mesh(80)), true);
  EXPECT_NEAR(k80, 2.33, 0.15 * 2.33);
  double lo = k80, hi = k80;
  for (int m : {20, 40, 160, 320}) {
    const double k = fracpg::condition_number(fracpg::assemble(spec, Mesh(m)), true);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  EXPECT_LT(hi / lo, 2.0);
}
