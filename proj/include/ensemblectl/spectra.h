#pragma once

// Spectral image of an ensemble and the finite parameter preimages of its
// points.
//
// The image is the union over all branches of l_j(K), (alpha_q + i omega_q)(K)
// and (alpha_q - i omega_q)(K). For a point eta of that image the preimage
// collects every parameter b, across all branches, at which some eigenvalue
// equals eta; kappa(eta) is the number of distinct such b.

#include <complex>
#include <compare>
#include <string>
#include <vector>

#include "ensemblectl/model.h"

namespace ensemblectl {

struct BranchId {
  enum class Kind { kReal = 0, kPlus = 1, kMinus = 2 };

  Kind kind;
  int index;  // zero-based branch or block index

  static BranchId real(int j) { return {Kind::kReal, j}; }
  static BranchId plus(int q) { return {Kind::kPlus, q}; }
  static BranchId minus(int q) { return {Kind::kMinus, q}; }

  // "real(1)", "plus(2)", "minus(2)"; one-based.
  std::string label() const;

  friend auto operator<=>(const BranchId&, const BranchId&) = default;
};

struct SpectralPoint {
  double re = 0.0;
  double im = 0.0;

  std::complex<double> value() const { return {re, im}; }
  SpectralPoint conj() const { return {re, -im}; }
  friend bool operator==(const SpectralPoint&, const SpectralPoint&) = default;
};

struct PreimageMember {
  double beta;
  BranchId branch;
};

struct PreimageSet {
  SpectralPoint eta;
  // Sorted by beta, then branch. Members whose betas fall in one cluster
  // share the cluster's representative beta.
  std::vector<PreimageMember> members;
  int kappa = 0;

  // The kappa distinct parameters, ascending.
  std::vector<double> distinct_betas() const;
};

struct SpectrumSettings {
  int bracket_points = 4096;  // bracketing grid, per interval
  double root_tol = 1e-9;     // |branch(b) - eta| acceptance bound
  double cluster_tol = 1e-9;  // betas closer than this are one preimage
  double merge_rel_tol = 1e-9;  // eta merge radius is merge_rel_tol (1 + |eta|)
  int kappa_cap = 64;

  double merge_tol(std::complex<double> eta) const {
    return merge_rel_tol * (1.0 + std::abs(eta));
  }
};

// Holds the branch values on the bracketing grid so that many preimage
// queries against one ensemble share the sampling cost. Immutable after
// construction; all queries may run concurrently.
class SpectralSolver {
 public:
  SpectralSolver(const EnsembleSpec& spec, SpectrumSettings settings = {});

  const EnsembleSpec& spec() const { return spec_; }
  const SpectrumSettings& settings() const { return settings_; }

  // Uniform grid of `grid_points` per interval plus refined grid-local
  // extrema of every real branch, alpha_q and omega_q. Deduplicated within
  // the merge radius after a lexicographic (re, im) sort. grid_points >= 16.
  std::vector<SpectralPoint> sample(int grid_points) const;

  // Throws PreimageError (kEmpty or kCapExceeded).
  PreimageSet preimage(SpectralPoint eta) const;

  // Distinct roots of l_j(b) = s, ascending. May be empty.
  std::vector<double> real_branch_preimage(int j, double s) const;

  // Snaps tiny imaginary parts to zero.
  SpectralPoint canonical(SpectralPoint eta) const;

 private:
  struct Table {
    Expr expr;
    std::vector<std::vector<double>> values;  // per interval, on grids_
  };

  std::vector<double> roots(const Table& table, double target,
                            bool& plateau) const;
  std::vector<double> block_roots(int q, double re, double im) const;

  EnsembleSpec spec_;
  SpectrumSettings settings_;
  std::vector<std::vector<double>> grids_;
  std::vector<Table> real_tables_;
  std::vector<Table> alpha_tables_;
  std::vector<Table> omega_tables_;
};

// Sampled spectral image with default solver settings. grid_points >= 16.
std::vector<SpectralPoint> sample_spectrum(const EnsembleSpec& spec,
                                           int grid_points,
                                           const SpectrumSettings& settings = {});

PreimageSet preimage(const EnsembleSpec& spec, SpectralPoint eta,
                     double root_tol, SpectrumSettings settings = {});

}  // namespace ensemblectl
