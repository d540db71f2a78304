#include "ensemblectl/model.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "ensemblectl/errors.h"
#include "test_support.h"

namespace ensemblectl {
namespace {

using testing::load_fixture;
using testing::spec_from;

const double kSqrt3 = std::sqrt(3.0);

bool has_error(const ValidationReport& report, const std::string& needle) {
  return std::any_of(report.errors.begin(), report.errors.end(),
                     [&](const std::string& e) {
                       return e.find(needle) != std::string::npos;
                     });
}

EnsembleSpec raw_spec(std::vector<std::string> real,
                      std::vector<std::pair<std::string, std::string>> blocks,
                      std::vector<std::vector<std::string>> control,
                      Domain domain) {
  EnsembleSpec spec;
  spec.domain = std::move(domain);
  for (const auto& e : real) spec.real_branches.push_back(parse_expression(e));
  for (const auto& [a, w] : blocks) {
    spec.complex_blocks.push_back({parse_expression(a), parse_expression(w)});
  }
  for (const auto& row : control) {
    std::vector<Expr> out;
    for (const auto& e : row) out.push_back(parse_expression(e));
    spec.control.push_back(out);
  }
  return spec;
}

TEST(DomainTest, RejectsBadIntervals) {
  EXPECT_THROW(Domain(std::vector<Interval>{}), SpecError);
  EXPECT_THROW(Domain({{1.0, 1.0}}), SpecError);
  EXPECT_THROW(Domain({{2.0, 1.0}}), SpecError);
  EXPECT_THROW(Domain({{0.0, 1.0}, {0.5, 2.0}}), SpecError);
  EXPECT_THROW(Domain({{0.0, 1.0}, {1.0, 2.0}}), SpecError);
}

TEST(DomainTest, SamplingOverAUnion) {
  const Domain k({{2.0, 3.0}, {0.0, 1.0}});
  EXPECT_DOUBLE_EQ(k.lo(), 0.0);
  EXPECT_DOUBLE_EQ(k.hi(), 3.0);
  EXPECT_DOUBLE_EQ(k.total_length(), 2.0);
  EXPECT_TRUE(k.contains(0.5));
  EXPECT_FALSE(k.contains(1.5));
  const auto u = k.uniform_samples(5);
  ASSERT_EQ(u.size(), 5u);
  EXPECT_DOUBLE_EQ(u[0], 0.0);
  EXPECT_DOUBLE_EQ(u[1], 0.5);
  EXPECT_DOUBLE_EQ(u[3], 2.5);
  EXPECT_DOUBLE_EQ(u[4], 3.0);
  for (double x : u) EXPECT_TRUE(k.contains(x));
  const auto c = k.cell_centered_samples(4);
  EXPECT_DOUBLE_EQ(c[0], 0.25);
  EXPECT_DOUBLE_EQ(c[1], 0.75);
  EXPECT_DOUBLE_EQ(c[2], 2.25);
  EXPECT_DOUBLE_EQ(c[3], 2.75);
  const auto g = k.interval_grids(3);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[1], (std::vector<double>{2.0, 2.5, 3.0}));
}

TEST(ValidateTest, Example3IsValid) {
  const auto spec = load_fixture("example3.json");
  EXPECT_EQ(spec.r(), 0);
  EXPECT_EQ(spec.l(), 1);
  EXPECT_EQ(spec.m(), 3);
  const auto report = validate(spec);
  EXPECT_TRUE(report.valid()) << report.errors.front();
}

TEST(ValidateTest, DimensionMismatch) {
  const auto spec = raw_spec({"b"}, {{"0", "b"}}, {{"1"}, {"1"}}, Domain({{1, 2}}));
  EXPECT_EQ(spec.n(), 3);
  const auto report = validate(spec);
  EXPECT_TRUE(has_error(report, "dimension mismatch"));
  EXPECT_THROW(require_valid(spec), SpecError);
}

TEST(ValidateTest, ConstantBranchViolatesFiniteToOne) {
  const auto spec = raw_spec({"1"}, {}, {{"1"}}, Domain({{0, 1}}));
  EXPECT_TRUE(has_error(validate(spec), "constant"));
  // A plateau on part of K is caught as well.
  const auto partial =
      raw_spec({"abs(b) + b"}, {}, {{"1"}}, Domain({{-1, 1}}));
  EXPECT_TRUE(has_error(validate(partial), "constant"));
}

TEST(ValidateTest, ConstantAlphaAloneIsFine) {
  const auto spec = raw_spec({}, {{"0", "b"}}, {{"1"}, {"0"}}, Domain({{1, 2}}));
  EXPECT_TRUE(validate(spec).valid());
  const auto flat = raw_spec({}, {{"0", "2"}}, {{"1"}, {"0"}}, Domain({{1, 2}}));
  EXPECT_TRUE(has_error(validate(flat), "constant"));
}

TEST(ValidateTest, NonFiniteExpression) {
  const auto spec = raw_spec({"b"}, {}, {{"1/b"}}, Domain({{0, 1}}));
  EXPECT_TRUE(has_error(validate(spec), "not finite"));
}

TEST(ValidateTest, MonotoneSegments) {
  const auto report =
      validate(raw_spec({"b^2"}, {}, {{"1"}}, Domain({{-1, 1}})), 101);
  ASSERT_EQ(report.monotone.size(), 1u);
  const auto& segs = report.monotone[0].segments;
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].direction, -1);
  EXPECT_EQ(segs[1].direction, 1);
  EXPECT_NEAR(segs[0].hi, 0.0, 1e-12);
  EXPECT_NEAR(segs[1].lo, 0.0, 1e-12);
}

TEST(EvaluatePointTest, Example3AtOne) {
  const auto p = evaluate_point(load_fixture("example3.json"), 1.0);
  Eigen::Matrix2d a;
  a << kSqrt3, -3, 3, kSqrt3;
  Eigen::MatrixXd bm(2, 3);
  bm << 1, -0.5, -0.5, 0, -kSqrt3 / 2, kSqrt3 / 2;
  EXPECT_LT((p.drift - a).norm(), 1e-15);
  EXPECT_LT((p.drift_star - a.transpose()).norm(), 1e-15);
  EXPECT_LT((p.control - bm).norm(), 1e-15);
}

TEST(EvaluatePointTest, ScalarAndSkew) {
  const auto scalar = evaluate_point(load_fixture("scalar_line.json"), 1.7);
  EXPECT_DOUBLE_EQ(scalar.drift(0, 0), 1.7);
  EXPECT_DOUBLE_EQ(scalar.drift_star(0, 0), 1.7);
  EXPECT_DOUBLE_EQ(scalar.control(0, 0), 1.0);

  const auto rot = evaluate_point(load_fixture("pure_rotation.json"), 1.5);
  Eigen::Matrix2d a;
  a << 0, -1.5, 1.5, 0;
  EXPECT_EQ(rot.drift, Eigen::MatrixXd(a));
  EXPECT_EQ(rot.drift_star, Eigen::MatrixXd(-a));
}

TEST(EvaluatePointTest, OutsideDomain) {
  const auto spec = load_fixture("scalar_line.json");
  EXPECT_THROW(evaluate_point(spec, 0.5), DomainError);
  EXPECT_THROW(complex_diagonalize(spec, 2.5), DomainError);
}

TEST(ComplexDiagonalizeTest, Examples) {
  const auto rot = raw_spec({}, {{"0", "1 + 0*b"}}, {{"1"}, {"0"}}, Domain({{0, 1}}));
  const auto d = complex_diagonalize(rot, 0.5);
  EXPECT_EQ(d.eigenvalues(0), std::complex<double>(0, -1));
  EXPECT_EQ(d.eigenvalues(1), std::complex<double>(0, 1));

  const auto diag = raw_spec({"b", "b + 5"}, {}, {{"1"}, {"1"}}, Domain({{0, 1}}));
  const auto dd = complex_diagonalize(diag, 0.25);
  EXPECT_EQ(dd.transform, Eigen::MatrixXcd::Identity(2, 2));
  EXPECT_EQ(dd.eigenvalues(0), std::complex<double>(0.25, 0));
  EXPECT_EQ(dd.eigenvalues(1), std::complex<double>(5.25, 0));

  const auto ex3 = complex_diagonalize(load_fixture("example3.json"), 1.0);
  EXPECT_NEAR(std::abs(ex3.eigenvalues(0) - std::complex<double>(kSqrt3, -3)), 0,
              1e-15);
  EXPECT_NEAR(std::abs(ex3.eigenvalues(1) - std::complex<double>(kSqrt3, 3)), 0,
              1e-15);
}

TEST(ComplexDiagonalizeTest, SimilarityIdentities) {
  const auto spec = raw_spec({"b", "b^2 - 3"}, {{"b - 1", "2*b + 1"}, {"cos(b)", "sin(b) + 2"}},
                             {{"1"}, {"1"}, {"1"}, {"1"}, {"1"}, {"1"}},
                             Domain({{-1, 2}}));
  for (double beta : spec.domain.uniform_samples(25)) {
    const auto p = evaluate_point(spec, beta);
    const auto d = complex_diagonalize(spec, beta);
    const Eigen::MatrixXcd pinv = d.transform.inverse();
    const Eigen::MatrixXcd a = p.drift.cast<std::complex<double>>();
    const Eigen::MatrixXcd as = p.drift_star.cast<std::complex<double>>();
    EXPECT_LT((pinv * a * d.transform - d.lambda()).norm(), 1e-12);
    const Eigen::MatrixXcd pc = d.transform.conjugate();
    EXPECT_LT((pinv * as * d.transform - pc.inverse() * a * pc).norm(), 1e-12);
  }
}

TEST(PointEigenvaluesTest, MatchGenericEigensolver) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = [&] { return std::to_string(std::abs(coef(rng))); };
    const auto spec = raw_spec(
        {c() + "*b + " + c(), "-" + c() + "*b^3 - " + c()},
        {{c() + " - b", c() + " + " + c() + "*b + 0.1"}},
        {{"1"}, {"1"}, {"1"}, {"1"}}, Domain({{0.1, 1}}));
    for (double beta : {0.1, 0.37, 0.8, 1.0}) {
      const auto p = evaluate_point(spec, beta);
      Eigen::EigenSolver<Eigen::MatrixXd> es(p.drift);
      auto expected = point_eigenvalues(spec, beta);
      auto got = std::vector<std::complex<double>>(es.eigenvalues().begin(),
                                                   es.eigenvalues().end());
      auto less = [](std::complex<double> x, std::complex<double> y) {
        return std::pair(x.real(), x.imag()) < std::pair(y.real(), y.imag());
      };
      std::sort(expected.begin(), expected.end(), less);
      std::sort(got.begin(), got.end(), less);
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_LT(std::abs(got[i] - expected[i]), 1e-10);
      }
    }
  }
}

}  // namespace
}  // namespace ensemblectl
