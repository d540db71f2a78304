#include "ensemblectl/spectra.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ensemblectl/errors.h"
#include "test_support.h"

namespace ensemblectl {
namespace {

using testing::load_fixture;
using testing::spec_from;

EnsembleSpec scalar(const std::string& branch, double lo, double hi) {
  return spec_from(R"({"domain": [[)" + std::to_string(lo) + ", " +
                   std::to_string(hi) + R"(]], "real_branches": [")" + branch +
                   R"("], "control": [["1"]]})");
}


std::complex<double> member_value(const EnsembleSpec& spec,
                                  const PreimageMember& m) {
  const auto eig = point_eigenvalues(spec, m.beta);
  switch (m.branch.kind) {
    case BranchId::Kind::kReal:
      return eig[m.branch.index];
    case BranchId::Kind::kMinus:
      return eig[spec.r() + 2 * m.branch.index];
    case BranchId::Kind::kPlus:
      return eig[spec.r() + 2 * m.branch.index + 1];
  }
  return {};
}

TEST(SampleSpectrumTest, ScalarLine) {
  const auto spec = scalar("b", 1, 2);
  const auto pts = sample_spectrum(spec, 17);
  ASSERT_EQ(pts.size(), 17u);
  for (int i = 0; i < 17; ++i) {
    EXPECT_DOUBLE_EQ(pts[i].re, 1.0 + i / 16.0);
    EXPECT_EQ(pts[i].im, 0.0);
  }
  for (double v : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    EXPECT_TRUE(std::any_of(pts.begin(), pts.end(),
                            [&](const SpectralPoint& p) { return p.re == v; }));
  }
  EXPECT_THROW(sample_spectrum(spec, 5), SpecError);
}

TEST(SampleSpectrumTest, RotationIsConjugateClosed) {
  const auto pts = sample_spectrum(load_fixture("pure_rotation.json"), 64);
  ASSERT_EQ(pts.size(), 128u);
  for (const auto& p : pts) {
    EXPECT_EQ(p.re, 0.0);
    EXPECT_GE(std::abs(p.im), 1.0);
    EXPECT_LE(std::abs(p.im), 2.0);
    EXPECT_NE(std::find(pts.begin(), pts.end(), p.conj()), pts.end());
  }
  EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end(), [](auto& a, auto& b) {
    return std::pair(a.re, a.im) < std::pair(b.re, b.im);
  }));
}

TEST(SampleSpectrumTest, Example3Rays) {
  const auto pts = sample_spectrum(load_fixture("example3.json"), 33);
  // Two conjugate rays sharing the origin.
  EXPECT_EQ(pts.size(), 2u * 33u - 1u);
  for (const auto& p : pts) {
    if (p.re == 0.0) {
      EXPECT_EQ(p.im, 0.0);
      continue;
    }
    EXPECT_NEAR(std::abs(p.im) / p.re, std::sqrt(3.0), 1e-12);
  }
}

TEST(SampleSpectrumTest, InteriorExtremaAreInserted) {
  const auto spec = scalar("(b - 0.3)^2", 0, 1);
  const auto pts = sample_spectrum(spec, 16);
  EXPECT_LT(pts.front().re, 1e-15);
  const auto sine = scalar("sin(2*pi*b) + 0*b", 0, 1);
  const auto s = sample_spectrum(sine, 16);
  EXPECT_NEAR(s.front().re, -1.0, 1e-15);
  EXPECT_NEAR(s.back().re, 1.0, 1e-15);
}

TEST(PreimageTest, Examples) {
  const auto sq = load_fixture("square_branch.json");
  const auto pre = preimage(sq, {0.25, 0.0}, 1e-9);
  EXPECT_EQ(pre.kappa, 2);
  ASSERT_EQ(pre.members.size(), 2u);
  EXPECT_NEAR(pre.members[0].beta, -0.5, 1e-12);
  EXPECT_NEAR(pre.members[1].beta, 0.5, 1e-12);
  EXPECT_EQ(pre.members[0].branch, BranchId::real(0));
  EXPECT_EQ(pre.members[1].branch.label(), "real(1)");

  const auto rot = preimage(load_fixture("pure_rotation.json"), {0.0, 1.5}, 1e-9);
  EXPECT_EQ(rot.kappa, 1);
  ASSERT_EQ(rot.members.size(), 1u);
  EXPECT_NEAR(rot.members[0].beta, 1.5, 1e-12);
  EXPECT_EQ(rot.members[0].branch, BranchId::plus(0));

  try {
    preimage(load_fixture("scalar_line.json"), {3.0, 0.0}, 1e-9);
    FAIL() << "expected an empty preimage";
  } catch (const PreimageError& e) {
    EXPECT_EQ(e.kind(), PreimageError::Kind::kEmpty);
  }
}

TEST(PreimageTest, TangentialRoots) {
  const auto sq = load_fixture("square_branch.json");
  const auto zero = preimage(sq, {0.0, 0.0}, 1e-9);
  EXPECT_EQ(zero.kappa, 1);
  EXPECT_NEAR(zero.members[0].beta, 0.0, 1e-9);

  const auto sine = scalar("sin(2*pi*b) + 0*b", 0, 1);
  const auto top = preimage(sine, {1.0, 0.0}, 1e-9);
  EXPECT_EQ(top.kappa, 1);
  EXPECT_NEAR(top.members[0].beta, 0.25, 1e-4);
  const auto mid = preimage(sine, {0.0, 0.0}, 1e-9);
  EXPECT_EQ(mid.kappa, 3);  // 0, 1/2, 1

  // Touching zero strictly between grid points.
  const auto off = scalar("(b - 0.123456789)^2", 0, 1);
  EXPECT_EQ(preimage(off, {0.0, 0.0}, 1e-9).kappa, 1);
}

TEST(PreimageTest, CapExceeded) {
  const auto wild = scalar("sin(200*pi*b) + 0.001*b", 0, 1);
  try {
    preimage(wild, {0.0, 0.0}, 1e-9);
    FAIL() << "expected the kappa cap to trip";
  } catch (const PreimageError& e) {
    EXPECT_EQ(e.kind(), PreimageError::Kind::kCapExceeded);
  }
}

TEST(PreimageTest, ResidualBoundAndConjugateSymmetry) {
  const auto spec = spec_from(R"json({
    "domain": [[-1, 1.5]],
    "real_branches": ["b^3 - b"],
    "complex_blocks": [{"alpha": "b^2", "omega": "b"},
                       {"alpha": "cos(3*b)", "omega": "1 + b^2"}],
    "control": [["1"], ["1"], ["0"], ["1"], ["b"]]
  })json");
  const SpectralSolver solver(spec);
  const double tol = solver.settings().root_tol;
  int checked = 0;
  for (const auto& eta : solver.sample(96)) {
    const auto pre = solver.preimage(eta);
    EXPECT_GE(pre.kappa, 1);
    EXPECT_EQ(pre.kappa, static_cast<int>(pre.distinct_betas().size()));
    for (const auto& m : pre.members) {
      EXPECT_LE(std::abs(member_value(spec, m) - eta.value()), tol)
          << m.branch.label() << " at " << m.beta;
      EXPECT_TRUE(spec.domain.contains(m.beta));
    }
    const auto conj = solver.preimage(eta.conj());
    EXPECT_EQ(conj.distinct_betas(), pre.distinct_betas());
    auto swapped_members = [](const PreimageSet& set, bool swap) {
      std::vector<std::pair<double, BranchId>> out;
      for (auto m : set.members) {
        if (swap && m.branch.kind != BranchId::Kind::kReal) {
          m.branch.kind = m.branch.kind == BranchId::Kind::kPlus
                              ? BranchId::Kind::kMinus
                              : BranchId::Kind::kPlus;
        }
        out.emplace_back(m.beta, m.branch);
      }
      std::sort(out.begin(), out.end());
      return out;
    };
    EXPECT_EQ(swapped_members(conj, false), swapped_members(pre, true));
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(PreimageTest, KappaStableUnderGridRefinement) {
  for (const char* name : {"square_branch.json", "example3.json",
                           "pure_rotation.json", "damped_rotation.json"}) {
    const auto spec = load_fixture(name);
    std::vector<int> prev;
    for (int bracket : {1024, 2048, 4096, 8192}) {
      SpectrumSettings settings;
      settings.bracket_points = bracket;
      const SpectralSolver solver(spec, settings);
      std::vector<int> kappas;
      for (const auto& eta : SpectralSolver(spec).sample(64)) {
        kappas.push_back(solver.preimage(eta).kappa);
      }
      if (!prev.empty()) {
        for (std::size_t i = 0; i < kappas.size(); ++i) {
          EXPECT_GE(kappas[i], prev[i]) << name;
        }
      }
      if (bracket == 8192) EXPECT_EQ(kappas, prev) << name;
      prev = kappas;
    }
  }
}

TEST(PreimageTest, CanonicalImaginaryPart) {
  const SpectralSolver solver(load_fixture("square_branch.json"));
  const auto p = solver.canonical({0.25, 1e-12});
  EXPECT_EQ(p.im, 0.0);
  EXPECT_FALSE(std::signbit(solver.canonical({0.25, -0.0}).im));
  EXPECT_EQ(solver.preimage({0.25, 1e-12}).kappa, 2);
}

}  // namespace
}  // namespace ensemblectl
