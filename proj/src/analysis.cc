#include "ensemblectl/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "ensemblectl/errors.h"
#include "parallel.h"

namespace ensemblectl {

namespace {

template <typename Matrix>
int rank_impl(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  if (!m.allFinite()) throw NumericalError("rank of a non-finite matrix");
  Eigen::JacobiSVD<Matrix> svd(m);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rel_tol * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++rank;
  }
  return rank;
}

Eigen::MatrixXd kalman_matrix(const Eigen::MatrixXd& drift,
                              const Eigen::MatrixXd& control) {
  const Eigen::Index dim = drift.rows();
  const Eigen::Index m = control.cols();
  Eigen::MatrixXd out(dim, m * dim);
  if (dim == 0) return out;
  out.leftCols(m) = control;
  for (Eigen::Index k = 1; k < dim; ++k) {
    out.middleCols(k * m, m).noalias() = drift * out.middleCols((k - 1) * m, m);
  }
  return out;
}

}  // namespace

int rank_with_tolerance(const Eigen::Ref<const Eigen::MatrixXd>& matrix,
                        double rel_tol) {
  return rank_impl(Eigen::MatrixXd(matrix), rel_tol);
}

int rank_with_tolerance(const Eigen::Ref<const Eigen::MatrixXcd>& matrix,
                        double rel_tol) {
  return rank_impl(Eigen::MatrixXcd(matrix), rel_tol);
}

InducedSystem assemble_induced(SpectralPoint eta,
                               const std::vector<PointSystem>& members, int r,
                               int l, long size_cap) {
  if (members.empty()) throw SpecError("induced system needs a member");
  const int n = r + 2 * l;
  const int kappa = static_cast<int>(members.size());
  const int m = static_cast<int>(members.front().control.cols());
  const long dim = static_cast<long>(n) * kappa;
  if (dim * dim * m > size_cap) {
    throw NumericalError("controllability matrix of size " +
                         std::to_string(dim) + " x " +
                         std::to_string(dim * m) + " exceeds the size cap");
  }
  InducedSystem sys;
  sys.eta = eta;
  sys.r = r;
  sys.l = l;
  sys.block_drift = Eigen::MatrixXd::Zero(dim, dim);
  sys.stacked_control.resize(dim, m);
  sys.eigenvalues.reserve(dim);
  for (int i = 0; i < kappa; ++i) {
    const auto& p = members[i];
    if (p.drift.rows() != n || p.drift.cols() != n || p.control.rows() != n ||
        p.control.cols() != m) {
      throw SpecError("induced system members must share dimensions");
    }
    sys.block_drift.block(i * n, i * n, n, n) = p.drift;
    sys.stacked_control.middleRows(i * n, n) = p.control;
    for (int j = 0; j < r; ++j) sys.eigenvalues.emplace_back(p.drift(j, j), 0.0);
    for (int q = 0; q < l; ++q) {
      const int k = r + 2 * q;
      const double a = p.drift(k, k);
      const double w = p.drift(k + 1, k);
      sys.eigenvalues.emplace_back(a, -w);
      sys.eigenvalues.emplace_back(a, w);
    }
  }
  sys.ctrb = kalman_matrix(sys.block_drift, sys.stacked_control);
  return sys;
}

InducedSystem induced_system(const EnsembleSpec& spec, const PreimageSet& pre,
                             long size_cap) {
  std::vector<PointSystem> members;
  for (double beta : pre.distinct_betas()) {
    members.push_back(evaluate_point(spec, beta));
  }
  auto sys = assemble_induced(pre.eta, members, spec.r(), spec.l(), size_cap);
  sys.preimage = pre;
  return sys;
}

int kalman_rank(const Eigen::MatrixXd& drift, const Eigen::MatrixXd& control,
                double rel_tol) {
  const Eigen::Index dim = drift.rows();
  if (!drift.allFinite() || !control.allFinite()) {
    throw NumericalError("rank of a non-finite matrix");
  }
  // Orthonormal basis of span{D^k V}, grown one Krylov block at a time.
  // Directions from V count relative to |V|, later ones relative to |D|.
  Eigen::MatrixXd basis(dim, 0);
  Eigen::MatrixXd block = control;
  double scale = control.norm();
  const double drift_scale = drift.norm();
  while (basis.cols() < dim && block.cols() > 0 && scale > 0.0) {
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) block -= basis * (basis.transpose() * block);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    Eigen::Index fresh = 0;
    while (fresh < sv.size() && sv(fresh) > rel_tol * scale) ++fresh;
    fresh = std::min<Eigen::Index>(fresh, dim - basis.cols());
    if (fresh == 0) break;
    Eigen::MatrixXd grown(dim, basis.cols() + fresh);
    grown << basis, svd.matrixU().leftCols(fresh);
    basis = std::move(grown);
    block = drift * basis.rightCols(fresh);
    scale = drift_scale;
  }
  return static_cast<int>(basis.cols());
}

int kalman_rank(const InducedSystem& sys, double rel_tol) {
  return kalman_rank(sys.block_drift, sys.stacked_control, rel_tol);
}

bool kalman_check(const InducedSystem& sys, double rel_tol) {
  return kalman_rank(sys, rel_tol) == sys.dimension();
}

bool pbh_check(const InducedSystem& sys, double rel_tol) {
  const int dim = sys.dimension();
  const int m = static_cast<int>(sys.stacked_control.cols());
  std::vector<std::complex<double>> distinct;
  for (const auto& s : sys.eigenvalues) {
    const bool seen = std::any_of(
        distinct.begin(), distinct.end(), [&](const std::complex<double>& d) {
          return std::abs(d - s) <= 1e-14 * (1.0 + std::abs(s));
        });
    if (!seen) distinct.push_back(s);
  }
  Eigen::MatrixXcd hautus(dim, dim + m);
  hautus.rightCols(m) = sys.stacked_control.cast<std::complex<double>>();
  for (const auto& s : distinct) {
    hautus.leftCols(dim) = -sys.block_drift.cast<std::complex<double>>();
    hautus.leftCols(dim).diagonal().array() += s;
    if (rank_with_tolerance(hautus, rel_tol) < dim) return false;
  }
  return true;
}

Eigen::MatrixXd separation_matrix(const SpectralSolver& solver, int row,
                                  double s) {
  const auto& spec = solver.spec();
  if (spec.l() != 0) {
    throw SpecError("separation matrices need a real diagonal ensemble");
  }
  if (row < 0 || row >= spec.r()) throw SpecError("branch index out of range");
  const auto betas = solver.real_branch_preimage(row, s);
  if (betas.empty()) {
    throw PreimageError(PreimageError::Kind::kEmpty,
                        "s = " + std::to_string(s) +
                            " is not in the image of branch " +
                            std::to_string(row + 1));
  }
  Eigen::MatrixXd out(betas.size(), spec.m());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    for (int k = 0; k < spec.m(); ++k) {
      out(i, k) = evaluate_finite(spec.control[row][k], betas[i], "control entry");
    }
  }
  return out;
}

Eigen::MatrixXd separation_matrix(const EnsembleSpec& spec, int row, double s) {
  return separation_matrix(SpectralSolver(spec), row, s);
}

Li20Result li20_condition_check(const EnsembleSpec& spec, int tuple_grid,
                                double rel_tol,
                                const SpectrumSettings& settings) {
  if (spec.l() != 0) throw SpecError("tuple condition needs l = 0");
  if (spec.n() > 3) throw SpecError("tuple condition supports n <= 3");
  if (tuple_grid < 8) throw SpecError("tuple grid needs at least 8 points");
  require_valid(spec);
  const int n = spec.n();
  const SpectralSolver solver(spec, settings);

  // Per branch: the sampled points in the branch image with their
  // separation matrices.
  struct Entry {
    double s;
    Eigen::MatrixXd d;
  };
  std::vector<std::vector<Entry>> per_branch(n);
  for (const auto& eta : solver.sample(std::max(tuple_grid, 16))) {
    for (int j = 0; j < n; ++j) {
      if (solver.real_branch_preimage(j, eta.re).empty()) continue;
      per_branch[j].push_back({eta.re, separation_matrix(solver, j, eta.re)});
    }
  }

  Li20Result result;
  std::vector<std::size_t> idx(n, 0);
  for (const auto& entries : per_branch) {
    if (entries.empty()) return result;
  }
  for (;;) {
    int dim = 0;
    for (int j = 0; j < n; ++j) dim += per_branch[j][idx[j]].d.rows();
    Eigen::MatrixXd drift = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd control(dim, spec.m());
    int offset = 0;
    for (int j = 0; j < n; ++j) {
      const auto& e = per_branch[j][idx[j]];
      const int rows = static_cast<int>(e.d.rows());
      drift.block(offset, offset, rows, rows).diagonal().setConstant(e.s);
      control.middleRows(offset, rows) = e.d;
      offset += rows;
    }
    ++result.tuples_checked;
    if (rank_with_tolerance(kalman_matrix(drift, control), rel_tol) < dim) {
      result.holds = false;
      for (int j = 0; j < n; ++j) {
        result.failing_tuple.push_back(per_branch[j][idx[j]].s);
      }
      return result;
    }
    int j = n - 1;
    while (j >= 0 && ++idx[j] == per_branch[j].size()) idx[j--] = 0;
    if (j < 0) break;
  }
  return result;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kUec:
      return "uec";
    case Verdict::kNotUec:
      return "not_uec";
    case Verdict::kTheoremInapplicable:
      return "theorem_inapplicable";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

EtaResult analyze_eta(const SpectralSolver& solver, SpectralPoint eta,
                      const AnalysisSettings& settings,
                      InducedSystem* system_out) {
  const auto pre = solver.preimage(eta);
  auto sys = induced_system(solver.spec(), pre, settings.size_cap);
  EtaResult res;
  res.eta = pre.eta;
  res.kappa = pre.kappa;
  res.required = sys.dimension();
  res.rank = kalman_rank(sys, settings.rank_tol);
  res.kalman = res.rank == res.required;
  res.pbh = pbh_check(sys, settings.rank_tol);
  res.conditioning_risk = res.required > settings.conditioning_dim;
  if (res.conditioning_risk) {
    res.decision = res.pbh ? Decision::kControllable : Decision::kUncontrollable;
  } else if (res.kalman == res.pbh) {
    res.decision = res.kalman ? Decision::kControllable : Decision::kUncontrollable;
  } else {
    res.decision = Decision::kInconclusive;
  }
  if (system_out != nullptr) *system_out = std::move(sys);
  return res;
}

AnalysisReport uec_verdict(const EnsembleSpec& spec,
                           const AnalysisSettings& settings) {
  require_valid(spec);
  AnalysisReport report;
  report.settings = settings;
  report.closure = closure_sweep(spec, settings.degree_caps,
                                 settings.closure_grid, settings.closure_tol,
                                 settings.fail_floor);
  if (report.closure.status != ClosureStatus::kPass) {
    report.verdict = Verdict::kTheoremInapplicable;
    return report;
  }

  const SpectralSolver solver(spec, settings.spectrum);
  const auto points = solver.sample(settings.grid_points);
  report.per_eta.resize(points.size());
  internal::parallel_for(points.size(), settings.threads, [&](std::size_t i) {
    report.per_eta[i] = analyze_eta(solver, points[i], settings);
  });

  std::optional<std::size_t> first_bad;
  std::optional<std::size_t> first_unsure;
  for (std::size_t i = 0; i < report.per_eta.size(); ++i) {
    const auto d = report.per_eta[i].decision;
    if (d == Decision::kUncontrollable && !first_bad) first_bad = i;
    if (d == Decision::kInconclusive && !first_unsure) first_unsure = i;
  }
  if (first_bad) {
    report.verdict = Verdict::kNotUec;
    report.witness = first_bad;
  } else if (first_unsure) {
    report.verdict = Verdict::kInconclusive;
    report.witness = first_unsure;
  } else {
    report.verdict = Verdict::kUec;
  }
  if (report.witness) {
    InducedSystem sys;
    analyze_eta(solver, report.per_eta[*report.witness].eta, settings, &sys);
    report.witness_system = std::move(sys);
  }
  return report;
}

}  // namespace ensemblectl
