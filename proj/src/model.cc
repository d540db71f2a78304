#include "ensemblectl/model.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ensemblectl/errors.h"

namespace ensemblectl {

Domain::Domain(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw SpecError("domain must contain an interval");
  for (const auto& iv : intervals_) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi)) {
      throw SpecError("domain interval [" + std::to_string(iv.lo) + ", " +
                      std::to_string(iv.hi) + "] must satisfy lo < hi");
    }
  }
  std::sort(intervals_.begin(), intervals_.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < intervals_.size(); ++i) {
    if (!(intervals_[i - 1].hi < intervals_[i].lo)) {
      throw SpecError("domain intervals must be pairwise disjoint");
    }
  }
}

double Domain::total_length() const {
  double total = 0.0;
  for (const auto& iv : intervals_) total += iv.length();
  return total;
}

bool Domain::contains(double beta) const {
  for (const auto& iv : intervals_) {
    const double slack = 1e-12 * std::max({1.0, std::abs(iv.lo), std::abs(iv.hi)});
    if (beta >= iv.lo - slack && beta <= iv.hi + slack) return true;
  }
  return false;
}

double Domain::from_arclength(double s) const {
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (s <= iv.length() || i + 1 == intervals_.size()) {
      const double frac = std::clamp(s / iv.length(), 0.0, 1.0);
      if (frac == 1.0) return iv.hi;
      return iv.lo + frac * iv.length();
    }
    s -= iv.length();
  }
  return intervals_.back().hi;
}

std::vector<double> Domain::uniform_samples(int count) const {
  if (count < 2) throw SpecError("uniform sampling needs at least 2 points");
  const double total = total_length();
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    out[i] = i + 1 == count ? hi() : from_arclength(total * i / (count - 1));
  }
  out.front() = lo();
  return out;
}

std::vector<std::vector<double>> Domain::interval_grids(
    int points_per_interval) const {
  if (points_per_interval < 2) throw SpecError("grid needs at least 2 points");
  std::vector<std::vector<double>> grids;
  grids.reserve(intervals_.size());
  for (const auto& iv : intervals_) {
    std::vector<double> g(points_per_interval);
    for (int i = 0; i < points_per_interval; ++i) {
      g[i] = iv.lo + iv.length() * i / (points_per_interval - 1);
    }
    g.back() = iv.hi;
    grids.push_back(std::move(g));
  }
  return grids;
}

std::vector<double> Domain::cell_centered_samples(int count) const {
  if (count < 1) throw SpecError("cell-centred sampling needs a point");
  const double total = total_length();
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    out[i] = from_arclength(total * (i + 0.5) / count);
  }
  return out;
}

namespace {

std::string indexed(const char* kind, int index) {
  return std::string(kind) + "(" + std::to_string(index + 1) + ")";
}

bool nearly_equal(double a, double b, double scale) {
  return std::abs(a - b) <= 1e-13 * (1.0 + scale);
}

// Index of the first point of a run of >= 3 grid values that are equal up to
// rounding, or -1.
int find_plateau(const std::vector<double>& v) {
  for (std::size_t i = 0; i + 2 < v.size(); ++i) {
    const double scale = std::abs(v[i]);
    if (nearly_equal(v[i], v[i + 1], scale) &&
        nearly_equal(v[i], v[i + 2], scale)) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

std::vector<MonotoneSegment> monotone_segments(const std::vector<double>& beta,
                                               const std::vector<double>& v) {
  std::vector<MonotoneSegment> out;
  int dir = 0;
  std::size_t start = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const int d = v[i] > v[i - 1] ? 1 : (v[i] < v[i - 1] ? -1 : 0);
    if (d == 0) continue;
    if (dir == 0) {
      dir = d;
    } else if (d != dir) {
      out.push_back({beta[start], beta[i - 1], dir});
      start = i - 1;
      dir = d;
    }
  }
  out.push_back({beta[start], beta.back(), dir == 0 ? 1 : dir});
  return out;
}

}  // namespace

ValidationReport validate(const EnsembleSpec& spec, int grid_points) {
  ValidationReport report;
  if (spec.domain.intervals().empty()) {
    report.errors.push_back("domain is empty");
    return report;
  }
  if (spec.n() < 1) report.errors.push_back("ensemble has no state dimension");
  if (static_cast<int>(spec.control.size()) != spec.n()) {
    report.errors.push_back(
        "dimension mismatch: control has " +
        std::to_string(spec.control.size()) + " rows but n = r + 2l = " +
        std::to_string(spec.n()));
  }
  if (spec.m() < 1) report.errors.push_back("control needs at least one column");
  for (std::size_t i = 0; i < spec.control.size(); ++i) {
    if (static_cast<int>(spec.control[i].size()) != spec.m()) {
      report.errors.push_back("dimension mismatch: control row " +
                              std::to_string(i + 1) + " has " +
                              std::to_string(spec.control[i].size()) +
                              " entries, expected " + std::to_string(spec.m()));
    }
  }
  if (!report.errors.empty()) return report;

  const auto grids = spec.domain.interval_grids(grid_points);

  auto sample = [&](const Expr& e, const std::string& label,
                    const std::vector<double>& grid,
                    std::vector<double>& out) -> bool {
    out.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out[i] = evaluate(e, grid[i]);
      if (!std::isfinite(out[i])) {
        report.errors.push_back(label + " = '" + format(e) +
                                "' is not finite at b = " +
                                std::to_string(grid[i]));
        return false;
      }
    }
    return true;
  };

  std::vector<double> v1, v2;
  for (const auto& grid : grids) {
    for (int j = 0; j < spec.r(); ++j) {
      const std::string label = indexed("real", j);
      if (!sample(spec.real_branches[j], label, grid, v1)) continue;
      if (const int p = find_plateau(v1); p >= 0) {
        report.errors.push_back(
            "branch " + label + " is constant near b = " +
            std::to_string(grid[p]) +
            "; eigenvalues must be finite-to-one");
      }
      report.monotone.push_back({label, monotone_segments(grid, v1)});
    }
    for (int q = 0; q < spec.l(); ++q) {
      const auto& block = spec.complex_blocks[q];
      const bool ok_a = sample(block.alpha, indexed("alpha", q), grid, v1);
      const bool ok_w = sample(block.omega, indexed("omega", q), grid, v2);
      if (!ok_a || !ok_w) continue;
      // The complex branch alpha +- i omega is constant only where both parts
      // are.
      for (std::size_t i = 0; i + 2 < grid.size(); ++i) {
        const bool flat_a =
            nearly_equal(v1[i], v1[i + 1], std::abs(v1[i])) &&
            nearly_equal(v1[i], v1[i + 2], std::abs(v1[i]));
        const bool flat_w =
            nearly_equal(v2[i], v2[i + 1], std::abs(v2[i])) &&
            nearly_equal(v2[i], v2[i + 2], std::abs(v2[i]));
        if (flat_a && flat_w) {
          report.errors.push_back(indexed("block", q) +
                                  " is constant near b = " +
                                  std::to_string(grid[i]) +
                                  "; eigenvalues must be finite-to-one");
          break;
        }
      }
      report.monotone.push_back({indexed("alpha", q), monotone_segments(grid, v1)});
      report.monotone.push_back({indexed("omega", q), monotone_segments(grid, v2)});
    }
    for (int i = 0; i < spec.n(); ++i) {
      for (int k = 0; k < spec.m(); ++k) {
        sample(spec.control[i][k],
               "control(" + std::to_string(i + 1) + "," +
                   std::to_string(k + 1) + ")",
               grid, v1);
      }
    }
  }
  return report;
}

void require_valid(const EnsembleSpec& spec, int grid_points) {
  const auto report = validate(spec, grid_points);
  if (!report.valid()) throw SpecError(report.errors.front());
}

PointSystem evaluate_point(const EnsembleSpec& spec, double beta) {
  if (!spec.domain.contains(beta)) {
    throw DomainError("b = " + std::to_string(beta) + " lies outside K");
  }
  const int n = spec.n();
  const int r = spec.r();
  PointSystem p;
  p.beta = beta;
  p.drift = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < r; ++j) {
    p.drift(j, j) = evaluate_finite(spec.real_branches[j], beta, "real branch");
  }
  for (int q = 0; q < spec.l(); ++q) {
    const int k = r + 2 * q;
    const double a = evaluate_finite(spec.complex_blocks[q].alpha, beta, "alpha");
    const double w = evaluate_finite(spec.complex_blocks[q].omega, beta, "omega");
    p.drift(k, k) = a;
    p.drift(k, k + 1) = -w;
    p.drift(k + 1, k) = w;
    p.drift(k + 1, k + 1) = a;
  }
  p.drift_star = p.drift;
  for (int q = 0; q < spec.l(); ++q) {
    const int k = r + 2 * q;
    std::swap(p.drift_star(k, k + 1), p.drift_star(k + 1, k));
  }
  p.control.resize(n, spec.m());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < spec.m(); ++k) {
      p.control(i, k) = evaluate_finite(spec.control[i][k], beta, "control entry");
    }
  }
  return p;
}

std::vector<std::complex<double>> point_eigenvalues(const EnsembleSpec& spec,
                                                    double beta) {
  std::vector<std::complex<double>> out;
  out.reserve(spec.n());
  for (const auto& e : spec.real_branches) {
    out.emplace_back(evaluate_finite(e, beta, "real branch"), 0.0);
  }
  for (const auto& block : spec.complex_blocks) {
    const double a = evaluate_finite(block.alpha, beta, "alpha");
    const double w = evaluate_finite(block.omega, beta, "omega");
    out.emplace_back(a, -w);
    out.emplace_back(a, w);
  }
  return out;
}

ComplexDiagonalization complex_diagonalize(const EnsembleSpec& spec,
                                           double beta) {
  if (!spec.domain.contains(beta)) {
    throw DomainError("b = " + std::to_string(beta) + " lies outside K");
  }
  using namespace std::complex_literals;
  const int n = spec.n();
  const int r = spec.r();
  ComplexDiagonalization out;
  out.transform = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < r; ++j) out.transform(j, j) = 1.0;
  const double s = 1.0 / std::numbers::sqrt2;
  for (int q = 0; q < spec.l(); ++q) {
    const int k = r + 2 * q;
    out.transform(k, k) = s;
    out.transform(k, k + 1) = s;
    out.transform(k + 1, k) = s * 1i;
    out.transform(k + 1, k + 1) = -s * 1i;
  }
  const auto eig = point_eigenvalues(spec, beta);
  out.eigenvalues = Eigen::Map<const Eigen::VectorXcd>(eig.data(), n);
  return out;
}

}  // namespace ensemblectl
