#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "ensemblectl/analysis.h"
#include "ensemblectl/errors.h"

namespace ensemblectl {

namespace {

// Feature and target columns stacked over the grid: column (j, k) holds
// A^k b_j for k = 0..cap, target (j, k) holds A* A^k b_j for k < cap.
struct Samples {
  Eigen::MatrixXd features;
  Eigen::MatrixXd targets;
};

Samples tabulate(const EnsembleSpec& spec, int cap,
                 const std::vector<double>& grid) {
  const int n = spec.n();
  const int m = spec.m();
  const Eigen::Index rows = static_cast<Eigen::Index>(n) * grid.size();
  Samples s;
  s.features.resize(rows, m * (cap + 1));
  s.targets.resize(rows, m * cap);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto p = evaluate_point(spec, grid[g]);
    const Eigen::Index r0 = static_cast<Eigen::Index>(g) * n;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd v = p.control.col(j);
      for (int k = 0; k <= cap; ++k) {
        s.features.block(r0, j * (cap + 1) + k, n, 1) = v;
        if (k < cap) s.targets.block(r0, j * cap + k, n, 1) = p.drift_star * v;
        v = p.drift * v;
      }
    }
  }
  return s;
}

ClosureCapResult run_cap(const EnsembleSpec& spec, int cap,
                         const std::vector<double>& grid) {
  const auto s = tabulate(spec, cap, grid);
  const int m = spec.m();
  if (!s.features.allFinite() || !s.targets.allFinite()) {
    throw NumericalError("closure samples are not finite");
  }

  Eigen::MatrixXd normalized = s.features;
  for (Eigen::Index c = 0; c < normalized.cols(); ++c) {
    const double norm = normalized.col(c).norm();
    if (norm > 0.0) normalized.col(c) /= norm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(normalized, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  const auto& sv = svd.singularValues();
  const double cut = sv.size() == 0
                         ? 0.0
                         : std::max(normalized.rows(), normalized.cols()) *
                               std::numeric_limits<double>::epsilon() * sv(0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);

  ClosureCapResult out;
  out.degree_cap = cap;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < cap; ++k) {
      const Eigen::VectorXd w = s.targets.col(j * cap + k);
      const double wn = w.norm();
      double residual = 0.0;
      if (wn > 0.0) {
        const Eigen::VectorXd proj = basis * (basis.transpose() * w);
        residual = (w - proj).norm() / wn;
      }
      out.residuals.push_back({j, k, residual});
      out.max_residual = std::max(out.max_residual, residual);

      if (wn == 0.0) continue;
      bool found = false;
      for (int kk = 0; kk <= cap && !found; ++kk) {
        for (int jj = 0; jj < m && !found; ++jj) {
          const auto v = s.features.col(jj * (cap + 1) + kk);
          const double vv = v.squaredNorm();
          if (vv == 0.0) continue;
          const double c = v.dot(w) / vv;
          const double mismatch = (w - c * v).norm() / wn;
          if (mismatch <= kWitnessTol) {
            out.witnesses.push_back({j, k, jj, kk, c, mismatch});
            found = true;
          }
        }
      }
    }
  }
  return out;
}

void check_cap(int cap, int grid_points) {
  if (cap < 2) throw SpecError("degree cap must be at least 2");
  if (grid_points < 8 * cap) {
    throw SpecError("closure grid needs at least 8 points per degree");
  }
}

}  // namespace

std::string to_string(ClosureStatus status) {
  switch (status) {
    case ClosureStatus::kPass:
      return "pass";
    case ClosureStatus::kFail:
      return "fail";
    case ClosureStatus::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

ClosureReport closure_sweep(const EnsembleSpec& spec,
                            const std::vector<int>& degree_caps,
                            int grid_points, double closure_tol,
                            double fail_floor) {
  if (degree_caps.empty()) throw SpecError("closure needs a degree cap");
  for (int cap : degree_caps) check_cap(cap, grid_points);
  require_valid(spec);

  ClosureReport report;
  report.grid_points = grid_points;
  report.closure_tol = closure_tol;
  report.fail_floor = fail_floor;
  const auto grid = spec.domain.cell_centered_samples(grid_points);
  for (int cap : degree_caps) report.caps.push_back(run_cap(spec, cap, grid));

  const bool pass = std::all_of(
      report.caps.begin(), report.caps.end(),
      [&](const ClosureCapResult& c) { return c.max_residual <= closure_tol; });
  if (pass) {
    report.status = ClosureStatus::kPass;
    return report;
  }
  // A target present under every cap that never gets close to the span.
  const int smallest = *std::min_element(degree_caps.begin(), degree_caps.end());
  for (int j = 0; j < spec.m(); ++j) {
    for (int k = 0; k < smallest; ++k) {
      const bool stuck = std::all_of(
          report.caps.begin(), report.caps.end(), [&](const ClosureCapResult& c) {
            return c.residuals[j * c.degree_cap + k].residual >= fail_floor;
          });
      if (stuck) {
        report.status = ClosureStatus::kFail;
        return report;
      }
    }
  }
  report.status = ClosureStatus::kInconclusive;
  return report;
}

ClosureReport closure_test(const EnsembleSpec& spec, int degree_cap,
                           int grid_points, double closure_tol,
                           double fail_floor) {
  return closure_sweep(spec, {degree_cap}, grid_points, closure_tol,
                       fail_floor);
}

}  // namespace ensemblectl
