#pragma once

// Broadcast piecewise-constant control of a sampled ensemble, with exact
// zero-order-hold discretisation.

#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "ensemblectl/expr.h"
#include "ensemblectl/model.h"

namespace ensemblectl {

// exp(A t) and its integral over [0, t].
struct ExpmWithIntegral {
  Eigen::MatrixXd exp;
  Eigen::MatrixXd integral;
};

// Matrix exponential by scaling and squaring with a degree-13 Pade
// approximant. Throws NumericalError for non-finite input.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// Both blocks read off exp([[A, I], [0, 0]] t). t >= 0.
ExpmWithIntegral expm_with_integral(const Eigen::MatrixXd& a, double t);

struct PiecewiseConstantControl {
  double horizon = 1.0;
  Eigen::MatrixXd values;  // steps x m; row k acts on [k h, (k + 1) h)

  int steps() const { return static_cast<int>(values.rows()); }
  double step() const { return horizon / steps(); }
  void check() const;  // throws SpecError
};

struct Trajectory {
  double beta = 0.0;
  std::vector<double> times;           // interval boundaries 0, h, ..., T
  std::vector<Eigen::VectorXd> states;  // state at each boundary
};

// Exact propagation of each member from x0(beta). Throws DomainError for a
// beta outside K.
std::vector<Trajectory> simulate(const EnsembleSpec& spec,
                                 const PiecewiseConstantControl& control,
                                 const std::vector<double>& betas,
                                 const std::vector<Expr>& x0, int threads = 0);

// Header "t,beta,x1,...,xn"; one row per boundary, members in input order.
void write_trajectory_csv(std::ostream& out,
                          const std::vector<Trajectory>& trajectories);

struct SynthesisSettings {
  double time = 1.0;
  int steps = 16;
  int samples = 32;
  // Tikhonov weight relative to the largest squared singular value.
  double ridge = 1e-10;
  int threads = 0;
};

struct SynthesisResult {
  PiecewiseConstantControl control;
  std::vector<double> design_grid;
  std::vector<double> validation_grid;  // 4 M + 1 points
  double design_error = 0.0;      // sup over design samples
  double validation_error = 0.0;  // sup over validation samples, simulated
  double residual_norm = 0.0;     // of the stacked least-squares system
  double control_norm = 0.0;
};

// Profiles are n expressions in b. Throws SpecError for mismatched profile
// lengths or bad settings, DomainError for non-finite targets.
SynthesisResult synthesize_transfer(const EnsembleSpec& spec,
                                    const std::vector<Expr>& x0,
                                    const std::vector<Expr>& xf,
                                    const SynthesisSettings& settings = {});

// Sup over betas of |x(T, beta) - xf(beta)|_2 by simulation.
double terminal_error(const EnsembleSpec& spec,
                      const PiecewiseConstantControl& control,
                      const std::vector<double>& betas,
                      const std::vector<Expr>& x0, const std::vector<Expr>& xf,
                      int threads = 0);

}  // namespace ensemblectl
