#pragma once

// Ensembles whose drift is given directly in real Jordan form:
//
//   A(b) = diag(l_1(b), ..., l_r(b), G_1(b), ..., G_l(b)),
//   G_q(b) = [[alpha_q(b), -omega_q(b)], [omega_q(b), alpha_q(b)]],
//
// with an n x m control matrix B(b), n = r + 2l, and b ranging over a finite
// union of closed intervals.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ensemblectl/expr.h"

namespace ensemblectl {

struct Interval {
  double lo;
  double hi;

  double length() const { return hi - lo; }
};

// Finite union of pairwise disjoint closed intervals, kept sorted.
class Domain {
 public:
  Domain() = default;
  // Throws SpecError unless every interval has lo < hi and the intervals are
  // pairwise disjoint. Intervals are sorted by lower end.
  explicit Domain(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const { return intervals_; }
  double total_length() const;
  double lo() const { return intervals_.front().lo; }
  double hi() const { return intervals_.back().hi; }

  bool contains(double beta) const;

  // `count` points spread uniformly over the total length (gaps between
  // intervals skipped), first and last endpoint of K included. count >= 2.
  std::vector<double> uniform_samples(int count) const;

  // `points_per_interval` equispaced points on every interval, endpoints
  // included. One vector per interval.
  std::vector<std::vector<double>> interval_grids(
      int points_per_interval) const;

  // Cell-centred samples: the midpoints of `count` equal cells laid over the
  // total length. Never includes an endpoint.
  std::vector<double> cell_centered_samples(int count) const;

 private:
  double from_arclength(double s) const;

  std::vector<Interval> intervals_;
};

struct ComplexBlock {
  Expr alpha;
  Expr omega;
};

struct EnsembleSpec {
  std::string name;
  Domain domain;
  std::vector<Expr> real_branches;
  std::vector<ComplexBlock> complex_blocks;
  // n rows of m entries each.
  std::vector<std::vector<Expr>> control;

  int r() const { return static_cast<int>(real_branches.size()); }
  int l() const { return static_cast<int>(complex_blocks.size()); }
  int n() const { return r() + 2 * l(); }
  int m() const {
    return control.empty() ? 0 : static_cast<int>(control.front().size());
  }
};

struct PointSystem {
  double beta = 0.0;
  Eigen::MatrixXd drift;
  // drift with every 2x2 block transposed in place.
  Eigen::MatrixXd drift_star;
  Eigen::MatrixXd control;
};

// A run [lo, hi] of the validation grid on which a scalar map is monotone.
struct MonotoneSegment {
  double lo;
  double hi;
  int direction;  // +1 increasing, -1 decreasing
};

struct BranchSegments {
  std::string branch;  // "real(1)", "alpha(2)", "omega(2)", ...
  std::vector<MonotoneSegment> segments;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<BranchSegments> monotone;

  bool valid() const { return errors.empty(); }
};

inline constexpr int kDefaultValidationGrid = 1024;

// Checks dimensions, finiteness of every expression on the validation grid
// and the finite-to-one requirement (no branch constant on a run of grid
// points). Problems are collected in the report rather than thrown.
ValidationReport validate(const EnsembleSpec& spec,
                          int grid_points = kDefaultValidationGrid);

// Throws SpecError carrying the first problem when validate() fails.
void require_valid(const EnsembleSpec& spec,
                   int grid_points = kDefaultValidationGrid);

// A(b), A*(b), B(b). Throws DomainError for b outside K or a non-finite
// entry.
PointSystem evaluate_point(const EnsembleSpec& spec, double beta);

struct ComplexDiagonalization {
  Eigen::MatrixXcd transform;             // P = blockdiag(I_r, I_l (x) T)
  Eigen::VectorXcd eigenvalues;           // diagonal of Lambda
  Eigen::MatrixXcd lambda() const { return eigenvalues.asDiagonal(); }
};

// Per block q the eigenvalue alpha_q - i omega_q comes first, then
// alpha_q + i omega_q.
ComplexDiagonalization complex_diagonalize(const EnsembleSpec& spec,
                                           double beta);

// Ensemble spectrum at one parameter value, in the order used by
// complex_diagonalize().
std::vector<std::complex<double>> point_eigenvalues(const EnsembleSpec& spec,
                                                    double beta);

}  // namespace ensemblectl
