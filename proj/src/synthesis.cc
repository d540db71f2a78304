#include "ensemblectl/synthesis.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ensemblectl/errors.h"
#include "parallel.h"

namespace ensemblectl {

namespace {

// Higham (2005), Table 2.3 and eq. (2.8).
constexpr double kTheta13 = 5.371920351148152;
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

Eigen::VectorXd eval_profile(const std::vector<Expr>& profile, double beta,
                             const char* what) {
  Eigen::VectorXd v(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    v(i) = evaluate_finite(profile[i], beta, what);
  }
  return v;
}

void check_profile(const EnsembleSpec& spec, const std::vector<Expr>& p,
                   const char* what) {
  if (static_cast<int>(p.size()) != spec.n()) {
    throw SpecError(std::string(what) + " has " + std::to_string(p.size()) +
                    " entries, expected n = " + std::to_string(spec.n()));
  }
}

// Terminal state of one member under the control.
Eigen::VectorXd propagate(const PointSystem& p, const ExpmWithIntegral& step,
                          const PiecewiseConstantControl& control,
                          Eigen::VectorXd x, std::vector<Eigen::VectorXd>* path) {
  const Eigen::MatrixXd jb = step.integral * p.control;
  if (path != nullptr) path->push_back(x);
  for (int k = 0; k < control.steps(); ++k) {
    x = step.exp * x + jb * control.values.row(k).transpose();
    if (path != nullptr) path->push_back(x);
  }
  return x;
}

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw NumericalError("expm needs a square matrix");
  if (!a.allFinite()) throw NumericalError("expm of a non-finite matrix");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > kTheta13) {
    s = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  }
  const Eigen::MatrixXd x = a / std::ldexp(1.0, s);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd x2 = x * x;
  const Eigen::MatrixXd x4 = x2 * x2;
  const Eigen::MatrixXd x6 = x4 * x2;
  const auto& b = kPade13;
  const Eigen::MatrixXd u_inner =
      x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
      b[3] * x2 + b[1] * id;
  const Eigen::MatrixXd u = x * u_inner;
  const Eigen::MatrixXd v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) +
                            b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;
  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  if (!r.allFinite()) throw NumericalError("expm overflowed");
  return r;
}

ExpmWithIntegral expm_with_integral(const Eigen::MatrixXd& a, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw NumericalError("expm_with_integral needs a finite t >= 0");
  }
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = a * t;
  aug.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n) * t;
  const Eigen::MatrixXd e = expm(aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

void PiecewiseConstantControl::check() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw SpecError("control horizon must be positive");
  }
  if (values.rows() < 1) throw SpecError("control needs at least one step");
  if (!values.allFinite()) throw SpecError("control values must be finite");
}

std::vector<Trajectory> simulate(const EnsembleSpec& spec,
                                 const PiecewiseConstantControl& control,
                                 const std::vector<double>& betas,
                                 const std::vector<Expr>& x0, int threads) {
  control.check();
  check_profile(spec, x0, "x0");
  if (control.values.cols() != spec.m()) {
    throw SpecError("control has " + std::to_string(control.values.cols()) +
                    " inputs, expected m = " + std::to_string(spec.m()));
  }
  for (double beta : betas) {
    if (!spec.domain.contains(beta)) {
      throw DomainError("b = " + std::to_string(beta) + " lies outside K");
    }
  }
  std::vector<Trajectory> out(betas.size());
  const double h = control.step();
  internal::parallel_for(betas.size(), threads, [&](std::size_t i) {
    const auto p = evaluate_point(spec, betas[i]);
    const auto step = expm_with_integral(p.drift, h);
    Trajectory& tr = out[i];
    tr.beta = betas[i];
    for (int k = 0; k <= control.steps(); ++k) {
      tr.times.push_back(k == control.steps() ? control.horizon : k * h);
    }
    propagate(p, step, control, eval_profile(x0, betas[i], "x0"), &tr.states);
  });
  return out;
}

void write_trajectory_csv(std::ostream& out,
                          const std::vector<Trajectory>& trajectories) {
  const std::size_t n =
      trajectories.empty() || trajectories.front().states.empty()
          ? 0
          : trajectories.front().states.front().size();
  out << "t,beta";
  for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& tr : trajectories) {
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
      out << tr.times[k] << ',' << tr.beta;
      for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) {
        out << ',' << tr.states[k](i);
      }
      out << '\n';
    }
  }
  out.precision(old_precision);
}

double terminal_error(const EnsembleSpec& spec,
                      const PiecewiseConstantControl& control,
                      const std::vector<double>& betas,
                      const std::vector<Expr>& x0, const std::vector<Expr>& xf,
                      int threads) {
  check_profile(spec, xf, "xf");
  const auto traj = simulate(spec, control, betas, x0, threads);
  double worst = 0.0;
  for (const auto& tr : traj) {
    const Eigen::VectorXd target = eval_profile(xf, tr.beta, "xf");
    worst = std::max(worst, (tr.states.back() - target).norm());
  }
  return worst;
}

SynthesisResult synthesize_transfer(const EnsembleSpec& spec,
                                    const std::vector<Expr>& x0,
                                    const std::vector<Expr>& xf,
                                    const SynthesisSettings& settings) {
  require_valid(spec);
  check_profile(spec, x0, "x0");
  check_profile(spec, xf, "xf");
  if (settings.steps < 1) throw SpecError("steps must be at least 1");
  if (settings.samples < 2) throw SpecError("samples must be at least 2");
  if (!(settings.time > 0.0) || !std::isfinite(settings.time)) {
    throw SpecError("time horizon must be positive");
  }
  if (!(settings.ridge >= 0.0)) throw SpecError("ridge must be non-negative");

  const int n = spec.n();
  const int m = spec.m();
  const int steps = settings.steps;
  const double h = settings.time / steps;

  SynthesisResult result;
  result.design_grid = spec.domain.uniform_samples(settings.samples);
  result.validation_grid = spec.domain.uniform_samples(4 * settings.samples + 1);

  // Row block i: x(T, b_i) - E^N x0(b_i) = sum_k E^(N-1-k) J B u_k.
  const Eigen::Index rows = static_cast<Eigen::Index>(n) * settings.samples;
  Eigen::MatrixXd phi(rows, static_cast<Eigen::Index>(steps) * m);
  Eigen::VectorXd rhs(rows);
  internal::parallel_for(
      result.design_grid.size(), settings.threads, [&](std::size_t i) {
        const double beta = result.design_grid[i];
        const auto p = evaluate_point(spec, beta);
        const auto step = expm_with_integral(p.drift, h);
        const Eigen::Index r0 = static_cast<Eigen::Index>(i) * n;
        Eigen::MatrixXd col = step.integral * p.control;  // E^0 J B
        for (int k = steps - 1; k >= 0; --k) {
          phi.block(r0, static_cast<Eigen::Index>(k) * m, n, m) = col;
          col = step.exp * col;
        }
        Eigen::VectorXd free = eval_profile(x0, beta, "x0");
        for (int k = 0; k < steps; ++k) free = step.exp * free;
        rhs.segment(r0, n) = eval_profile(xf, beta, "xf") - free;
      });

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  const auto& sv = svd.singularValues();
  const double smax = sv.size() == 0 ? 0.0 : sv(0);
  const double lambda = settings.ridge * smax * smax;
  const double cut = std::max(phi.rows(), phi.cols()) *
                     std::numeric_limits<double>::epsilon() * smax;
  const Eigen::VectorXd proj = svd.matrixU().transpose() * rhs;
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= cut) continue;
    coeff(i) = sv(i) / (sv(i) * sv(i) + lambda) * proj(i);
  }
  const Eigen::VectorXd u = svd.matrixV() * coeff;

  result.control.horizon = settings.time;
  result.control.values.resize(steps, m);
  for (int k = 0; k < steps; ++k) {
    result.control.values.row(k) = u.segment(static_cast<Eigen::Index>(k) * m, m);
  }
  const Eigen::VectorXd residual = phi * u - rhs;
  result.residual_norm = residual.norm();
  result.control_norm = u.norm();
  for (int i = 0; i < settings.samples; ++i) {
    result.design_error =
        std::max(result.design_error, residual.segment(i * n, n).norm());
  }
  result.validation_error =
      terminal_error(spec, result.control, result.validation_grid, x0, xf,
                     settings.threads);
  return result;
}

}  // namespace ensemblectl
