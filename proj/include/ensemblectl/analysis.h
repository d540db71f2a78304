#pragma once

// Uniform ensemble controllability through finite induced subsystems.
//
// For every point eta of the spectral image, the ensemble members indexed by
// the preimage {b_1, ..., b_kappa} form one finite system
//
//   dY/dt = blockdiag(A(b_1), ..., A(b_kappa)) Y + [B(b_1); ...; B(b_kappa)] u
//
// of dimension n * kappa. When the reachable span of {A^k b_j} is closed under
// left multiplication by A*, the ensemble is uniformly controllable exactly
// when all of these systems are controllable, i.e. when every ensemble
// controllability matrix G(eta) has full row rank.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ensemblectl/model.h"
#include "ensemblectl/spectra.h"

namespace ensemblectl {

struct InducedSystem {
  SpectralPoint eta;
  PreimageSet preimage;
  int r = 0;  // layout of each diagonal block
  int l = 0;
  Eigen::MatrixXd block_drift;      // (n kappa) x (n kappa)
  Eigen::MatrixXd stacked_control;  // (n kappa) x m
  Eigen::MatrixXd ctrb;             // (n kappa) x (m n kappa)
  // Spectrum of block_drift read off the real Jordan blocks.
  std::vector<std::complex<double>> eigenvalues;

  int dimension() const { return static_cast<int>(block_drift.rows()); }
};

inline constexpr long kDefaultCtrbSizeCap = 4'000'000;

// Builds the induced system for a preimage. Throws NumericalError when the
// controllability matrix would exceed `size_cap` entries.
InducedSystem induced_system(const EnsembleSpec& spec, const PreimageSet& pre,
                             long size_cap = kDefaultCtrbSizeCap);

// Same assembly from already evaluated members that share the real Jordan
// layout (r scalar entries, then l rotation blocks). Used for synthetic
// systems in tests.
InducedSystem assemble_induced(SpectralPoint eta,
                               const std::vector<PointSystem>& members, int r,
                               int l, long size_cap = kDefaultCtrbSizeCap);

// Number of singular values above rel_tol * sigma_max (0 for a zero matrix).
// Throws NumericalError for non-finite input or SVD failure.
int rank_with_tolerance(const Eigen::Ref<const Eigen::MatrixXd>& matrix,
                        double rel_tol);
int rank_with_tolerance(const Eigen::Ref<const Eigen::MatrixXcd>& matrix,
                        double rel_tol);

// Rank of the controllability matrix [V, DV, ..., D^(N-1) V], computed as the
// dimension of an orthonormal Krylov basis rather than from the singular
// values of the power matrix, whose columns align as k grows. New directions
// count when they exceed rel_tol |V|_F (first block) or rel_tol |D|_F.
int kalman_rank(const Eigen::MatrixXd& drift, const Eigen::MatrixXd& control,
                double rel_tol);
int kalman_rank(const InducedSystem& sys, double rel_tol);

// Kalman rank test: kalman_rank == n kappa.
bool kalman_check(const InducedSystem& sys, double rel_tol);

// Hautus test: [sI - D | V] has full row rank at every eigenvalue s of the
// block drift.
bool pbh_check(const InducedSystem& sys, double rel_tol);

// Rows of B restricted to row `row`, evaluated at the preimage of s under the
// real branch `row` (diagonal real ensembles only, l = 0), sorted by b.
Eigen::MatrixXd separation_matrix(const SpectralSolver& solver, int row,
                                  double s);
Eigen::MatrixXd separation_matrix(const EnsembleSpec& spec, int row, double s);

struct Li20Result {
  bool holds = true;
  long tuples_checked = 0;
  std::vector<double> failing_tuple;  // empty when holds
};

// Product-tuple condition for diagonal real ensembles: for every tuple
// (s_1, ..., s_n) with s_j drawn from the sampled spectrum restricted to the
// image of l_j, the system diag(s_j I_{kappa_j}) with stacked separation
// matrices is controllable. Requires l = 0, n <= 3, tuple_grid >= 8.
Li20Result li20_condition_check(const EnsembleSpec& spec, int tuple_grid,
                                double rel_tol = 1e-8,
                                const SpectrumSettings& settings = {});

// ---------------------------------------------------------------------------
// Closure of the reachable span under A*.

enum class ClosureStatus { kPass, kFail, kInconclusive };

std::string to_string(ClosureStatus status);

// Relative least-squares residual of A* A^k b_j against span{A^k' b_j'}.
struct ClosureResidual {
  int input;  // j, zero-based
  int power;  // k
  double residual;
};

// A* A^k b_j = coefficient * A^k' b_j' on every grid point.
struct ClosureWitness {
  int input;
  int power;
  int match_input;
  int match_power;
  double coefficient;
  double mismatch;
};

struct ClosureCapResult {
  int degree_cap = 0;
  std::vector<ClosureResidual> residuals;
  std::vector<ClosureWitness> witnesses;
  double max_residual = 0.0;
};

struct ClosureReport {
  int grid_points = 0;
  double closure_tol = 0.0;
  double fail_floor = 0.0;
  std::vector<ClosureCapResult> caps;
  ClosureStatus status = ClosureStatus::kInconclusive;
};

inline constexpr double kDefaultClosureTol = 1e-8;
inline constexpr double kDefaultFailFloor = 1e-2;
inline constexpr double kWitnessTol = 1e-10;

// One degree cap on a cell-centred grid. degree_cap >= 2,
// grid_points >= 8 * degree_cap.
ClosureReport closure_test(const EnsembleSpec& spec, int degree_cap,
                           int grid_points,
                           double closure_tol = kDefaultClosureTol,
                           double fail_floor = kDefaultFailFloor);

// Pass when every cap passes; Fail when some target stays at or above
// fail_floor for every cap; otherwise Inconclusive.
ClosureReport closure_sweep(const EnsembleSpec& spec,
                            const std::vector<int>& degree_caps,
                            int grid_points,
                            double closure_tol = kDefaultClosureTol,
                            double fail_floor = kDefaultFailFloor);

// ---------------------------------------------------------------------------
// Verdict.

struct AnalysisSettings {
  int grid_points = 512;
  double rank_tol = 1e-8;
  double closure_tol = kDefaultClosureTol;
  double fail_floor = kDefaultFailFloor;
  std::vector<int> degree_caps{4, 8, 16};
  int closure_grid = 256;
  // Above this induced dimension the Kalman matrix is flagged as
  // ill-conditioned and the Hautus test decides.
  int conditioning_dim = 24;
  long size_cap = kDefaultCtrbSizeCap;
  SpectrumSettings spectrum;
  int threads = 0;  // 0 = hardware concurrency
};

enum class Decision { kControllable, kUncontrollable, kInconclusive };

struct EtaResult {
  SpectralPoint eta;
  int kappa = 0;
  int rank = 0;
  int required = 0;
  bool kalman = false;
  bool pbh = false;
  bool conditioning_risk = false;
  Decision decision = Decision::kInconclusive;
};

enum class Verdict { kUec, kNotUec, kTheoremInapplicable, kInconclusive };

std::string to_string(Verdict verdict);

struct AnalysisReport {
  Verdict verdict = Verdict::kInconclusive;
  ClosureReport closure;
  std::vector<EtaResult> per_eta;  // canonical (re, im) order
  // First uncontrollable eta (not_uec) or first disagreement (inconclusive).
  std::optional<std::size_t> witness;
  std::optional<InducedSystem> witness_system;
  AnalysisSettings settings;
};

AnalysisReport uec_verdict(const EnsembleSpec& spec,
                           const AnalysisSettings& settings = {});

// Per-eta part of uec_verdict, without the closure gate.
EtaResult analyze_eta(const SpectralSolver& solver, SpectralPoint eta,
                      const AnalysisSettings& settings,
                      InducedSystem* system_out = nullptr);

}  // namespace ensemblectl
