#include "ensemblectl/spectra.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "ensemblectl/errors.h"

namespace ensemblectl {

namespace {

// Bisection on a sign-changing bracket down to adjacent doubles.
double bisect(const std::function<double(double)>& g, double a, double b,
              double ga) {
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0) == (ga < 0)) {
      a = mid;
      ga = gm;
    } else {
      b = mid;
    }
  }
  return std::abs(g(a)) <= std::abs(g(b)) ? a : b;
}

// Golden-section minimisation of a unimodal function on [a, b].
double golden_min(const std::function<double(double)>& f, double a, double b) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int iter = 0; iter < 200 && c < d; ++iter) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    if (!(b - a > 4 * std::numeric_limits<double>::epsilon() *
                      std::max(1.0, std::abs(a)))) {
      break;
    }
  }
  double best = 0.5 * (a + b);
  double fbest = f(best);
  for (double x : {a, b, c, d}) {
    const double fx = f(x);
    if (fx < fbest) {
      best = x;
      fbest = fx;
    }
  }
  return best;
}

double require_finite(double v, const Expr& e, double beta) {
  if (!std::isfinite(v)) {
    throw DomainError("branch '" + format(e) + "' is not finite at b = " +
                      std::to_string(beta));
  }
  return v;
}

void sort_and_merge(std::vector<double>& betas, double tol) {
  std::sort(betas.begin(), betas.end());
  std::vector<double> out;
  for (double b : betas) {
    if (out.empty() || b - out.back() > tol) out.push_back(b);
  }
  betas = std::move(out);
}

}  // namespace

std::string BranchId::label() const {
  const char* name = kind == Kind::kReal   ? "real"
                     : kind == Kind::kPlus ? "plus"
                                           : "minus";
  return std::string(name) + "(" + std::to_string(index + 1) + ")";
}

std::vector<double> PreimageSet::distinct_betas() const {
  std::vector<double> out;
  for (const auto& m : members) {
    if (out.empty() || out.back() != m.beta) out.push_back(m.beta);
  }
  return out;
}

SpectralSolver::SpectralSolver(const EnsembleSpec& spec,
                               SpectrumSettings settings)
    : spec_(spec), settings_(settings) {
  if (!(settings_.root_tol > 0)) throw SpecError("root_tol must be positive");
  grids_ = spec_.domain.interval_grids(settings_.bracket_points);
  auto tabulate = [this](const Expr& e) {
    Table t{e, {}};
    for (const auto& grid : grids_) {
      std::vector<double> v(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        v[i] = require_finite(evaluate(e, grid[i]), e, grid[i]);
      }
      t.values.push_back(std::move(v));
    }
    return t;
  };
  for (const auto& e : spec_.real_branches) real_tables_.push_back(tabulate(e));
  for (const auto& block : spec_.complex_blocks) {
    alpha_tables_.push_back(tabulate(block.alpha));
    omega_tables_.push_back(tabulate(block.omega));
  }
}

SpectralPoint SpectralSolver::canonical(SpectralPoint eta) const {
  if (std::abs(eta.im) < settings_.merge_tol(eta.value())) eta.im = 0.0;
  if (eta.re == 0.0) eta.re = 0.0;  // drop negative zero
  return eta;
}

std::vector<double> SpectralSolver::roots(const Table& table, double target,
                                          bool& plateau) const {
  const Expr& expr = table.expr;
  auto g = [&expr, target](double beta) { return evaluate(expr, beta) - target; };
  auto abs_g = [&g](double beta) { return std::abs(g(beta)); };

  std::vector<double> out;
  for (std::size_t k = 0; k < grids_.size(); ++k) {
    const auto& beta = grids_[k];
    const auto& vals = table.values[k];
    const std::size_t n = beta.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = vals[i] - target;

    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] == 0.0) {
        const bool zero_prev = i > 0 && d[i - 1] == 0.0;
        const bool zero_next = i + 1 < n && d[i + 1] == 0.0;
        if (zero_prev || zero_next) {
          plateau = true;
        } else {
          out.push_back(beta[i]);
        }
        continue;
      }
      if (i + 1 < n && d[i + 1] != 0.0 && (d[i] < 0) != (d[i + 1] < 0)) {
        out.push_back(bisect(g, beta[i], beta[i + 1], d[i]));
      }
    }

    // Tangential roots: |d| has a local minimum without a sign change next
    // to it. Such a minimum is a candidate when it is no larger than the
    // local variation of d or than sqrt(root_tol); golden-section search then
    // decides whether the branch really reaches the target.
    const double loose = std::sqrt(settings_.root_tol);
    for (std::size_t i = 0; i < n; ++i) {
      const double here = std::abs(d[i]);
      if (here == 0.0) continue;
      const bool has_prev = i > 0;
      const bool has_next = i + 1 < n;
      if (has_prev && (d[i - 1] == 0.0 || (d[i - 1] < 0) != (d[i] < 0))) continue;
      if (has_next && (d[i + 1] == 0.0 || (d[i + 1] < 0) != (d[i] < 0))) continue;
      if (has_prev && std::abs(d[i - 1]) < here) continue;
      if (has_next && std::abs(d[i + 1]) < here) continue;
      double variation = 0.0;
      if (has_prev) variation = std::max(variation, std::abs(d[i - 1] - d[i]));
      if (has_next) variation = std::max(variation, std::abs(d[i + 1] - d[i]));
      if (here > std::max(loose, variation)) continue;
      const double lo = has_prev ? beta[i - 1] : beta[i];
      const double hi = has_next ? beta[i + 1] : beta[i];
      const double best = golden_min(abs_g, lo, hi);
      if (abs_g(best) <= settings_.root_tol) out.push_back(best);
    }
  }

  // Roots of one scalar map: merge neighbours that are within cluster_tol or
  // that bracket a double root (the map stays within root_tol in between).
  std::sort(out.begin(), out.end());
  std::vector<double> merged;
  for (double b : out) {
    if (!merged.empty()) {
      const double prev = merged.back();
      if (b - prev <= settings_.cluster_tol ||
          abs_g(0.5 * (prev + b)) <= settings_.root_tol) {
        if (abs_g(b) < abs_g(prev)) merged.back() = b;
        continue;
      }
    }
    merged.push_back(b);
  }
  return merged;
}

std::vector<double> SpectralSolver::real_branch_preimage(int j,
                                                         double s) const {
  bool plateau = false;
  auto betas = roots(real_tables_.at(j), s, plateau);
  if (plateau) {
    throw PreimageError(PreimageError::Kind::kCapExceeded,
                        "branch real(" + std::to_string(j + 1) +
                            ") is constant at the requested value; eigenvalues "
                            "are not finite-to-one");
  }
  std::vector<double> accepted;
  for (double b : betas) {
    if (std::abs(evaluate(spec_.real_branches[j], b) - s) <= settings_.root_tol) {
      accepted.push_back(b);
    }
  }
  sort_and_merge(accepted, settings_.cluster_tol);
  return accepted;
}

// Roots of alpha_q(b) + i omega_q(b) = re + i im.
std::vector<double> SpectralSolver::block_roots(int q, double re,
                                                double im) const {
  bool plateau_a = false;
  bool plateau_w = false;
  auto candidates = roots(alpha_tables_[q], re, plateau_a);
  auto from_omega = roots(omega_tables_[q], im, plateau_w);
  if (plateau_a && plateau_w) {
    throw PreimageError(PreimageError::Kind::kCapExceeded,
                        "block " + std::to_string(q + 1) +
                            " is constant at the requested value; eigenvalues "
                            "are not finite-to-one");
  }
  candidates.insert(candidates.end(), from_omega.begin(), from_omega.end());
  const auto& block = spec_.complex_blocks[q];
  std::vector<double> accepted;
  for (double b : candidates) {
    const std::complex<double> value(evaluate(block.alpha, b),
                                     evaluate(block.omega, b));
    if (std::abs(value - std::complex<double>(re, im)) <= settings_.root_tol) {
      accepted.push_back(b);
    }
  }
  sort_and_merge(accepted, settings_.cluster_tol);
  return accepted;
}

PreimageSet SpectralSolver::preimage(SpectralPoint eta) const {
  eta = canonical(eta);
  PreimageSet out;
  out.eta = eta;
  if (eta.im == 0.0) {
    for (int j = 0; j < spec_.r(); ++j) {
      for (double b : real_branch_preimage(j, eta.re)) {
        out.members.push_back({b, BranchId::real(j)});
      }
    }
  }
  for (int q = 0; q < spec_.l(); ++q) {
    for (double b : block_roots(q, eta.re, eta.im)) {
      out.members.push_back({b, BranchId::plus(q)});
    }
    for (double b : block_roots(q, eta.re, -eta.im)) {
      out.members.push_back({b, BranchId::minus(q)});
    }
  }
  if (out.members.empty()) {
    throw PreimageError(PreimageError::Kind::kEmpty,
                        "eta = " + std::to_string(eta.re) + (eta.im < 0 ? "" : "+") +
                            std::to_string(eta.im) +
                            "i is not in the spectral image within tolerance");
  }
  std::sort(out.members.begin(), out.members.end(),
            [](const PreimageMember& a, const PreimageMember& b) {
              if (a.beta != b.beta) return a.beta < b.beta;
              return a.branch < b.branch;
            });
  // Snap clustered betas onto the first member of their cluster.
  double rep = out.members.front().beta;
  out.kappa = 1;
  for (auto& m : out.members) {
    if (m.beta - rep > settings_.cluster_tol) {
      rep = m.beta;
      ++out.kappa;
    }
    m.beta = rep;
  }
  std::stable_sort(out.members.begin(), out.members.end(),
                   [](const PreimageMember& a, const PreimageMember& b) {
                     if (a.beta != b.beta) return a.beta < b.beta;
                     return a.branch < b.branch;
                   });
  if (out.kappa > settings_.kappa_cap) {
    throw PreimageError(PreimageError::Kind::kCapExceeded,
                        "preimage has " + std::to_string(out.kappa) +
                            " points, above the cap of " +
                            std::to_string(settings_.kappa_cap) +
                            "; suspected non-finite-to-one branch");
  }
  return out;
}

std::vector<SpectralPoint> SpectralSolver::sample(int grid_points) const {
  if (grid_points < 16) throw SpecError("spectrum grid needs >= 16 points");
  std::vector<SpectralPoint> points;
  auto push_real = [&](double v) { points.push_back({v, 0.0}); };
  auto push_block = [&](double a, double w) {
    points.push_back({a, w});
    points.push_back({a, -w});
  };

  // Refine a grid-local extremum of `e` on [lo, hi]; `sign` is +1 for a
  // minimum, -1 for a maximum.
  auto refine = [](const Expr& e, double lo, double hi, double sign) {
    return golden_min([&e, sign](double b) { return sign * evaluate(e, b); },
                      lo, hi);
  };

  for (const auto& grid : spec_.domain.interval_grids(grid_points)) {
    for (double b : grid) {
      for (const auto& e : spec_.real_branches) {
        push_real(require_finite(evaluate(e, b), e, b));
      }
      for (const auto& block : spec_.complex_blocks) {
        push_block(require_finite(evaluate(block.alpha, b), block.alpha, b),
                   require_finite(evaluate(block.omega, b), block.omega, b));
      }
    }

    // Extremum candidates, where kappa changes.
    auto extrema = [&](const Expr& e, const std::function<void(double)>& emit) {
      std::vector<double> v(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) v[i] = evaluate(e, grid[i]);
      for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const bool is_max = (v[i] > v[i - 1] && v[i] >= v[i + 1]) ||
                            (v[i] >= v[i - 1] && v[i] > v[i + 1]);
        const bool is_min = (v[i] < v[i - 1] && v[i] <= v[i + 1]) ||
                            (v[i] <= v[i - 1] && v[i] < v[i + 1]);
        if (is_max || is_min) {
          emit(refine(e, grid[i - 1], grid[i + 1], is_min ? 1.0 : -1.0));
        }
      }
    };
    for (const auto& e : spec_.real_branches) {
      extrema(e, [&](double b) { push_real(evaluate(e, b)); });
    }
    for (const auto& block : spec_.complex_blocks) {
      auto emit = [&](double b) {
        push_block(evaluate(block.alpha, b), evaluate(block.omega, b));
      };
      extrema(block.alpha, emit);
      extrema(block.omega, emit);
    }
  }

  for (auto& p : points) p = canonical(p);
  std::sort(points.begin(), points.end(),
            [](const SpectralPoint& a, const SpectralPoint& b) {
              return a.re != b.re ? a.re < b.re : a.im < b.im;
            });
  std::vector<SpectralPoint> kept;
  for (const auto& p : points) {
    const double tol = settings_.merge_tol(p.value());
    bool duplicate = false;
    for (auto it = kept.rbegin(); it != kept.rend() && it->re >= p.re - tol;
         ++it) {
      if (std::abs(it->value() - p.value()) <= tol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(p);
  }
  return kept;
}

std::vector<SpectralPoint> sample_spectrum(const EnsembleSpec& spec,
                                           int grid_points,
                                           const SpectrumSettings& settings) {
  return SpectralSolver(spec, settings).sample(grid_points);
}

PreimageSet preimage(const EnsembleSpec& spec, SpectralPoint eta,
                     double root_tol, SpectrumSettings settings) {
  settings.root_tol = root_tol;
  return SpectralSolver(spec, settings).preimage(eta);
}

}  // namespace ensemblectl
