#pragma once

// Uniform time grid D_n = {j/n} on [0,1], the left-anchor map k_n, and exact
// cell-sum evaluation of the grid kernel integrals
//
//   \int_s^r (r - k_n(theta))^power dtheta,
//
// whose integrand is constant on every grid cell.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tamed/error.hpp"
#include "tamed/random.hpp"

namespace tamed {

/// Grid points are classified with this absolute tolerance in time units.
inline constexpr double kGridTolerance = 1e-12;

/// Index j of the cell [j/n, (j+1)/n) containing t; points within
/// kGridTolerance of a grid point snap to it.
inline std::int64_t cell_index(double t, std::size_t n) {
  const double x = t * static_cast<double>(n);
  const double nearest = std::round(x);
  if (std::fabs(x - nearest) <= kGridTolerance * static_cast<double>(n)) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::floor(x));
}

inline bool on_grid(double t, std::size_t n) {
  const double x = t * static_cast<double>(n);
  return std::fabs(x - std::round(x)) <= kGridTolerance * static_cast<double>(n);
}

class UniformGrid {
public:
  explicit UniformGrid(std::size_t n) : n_(n) { require(n >= 1, "UniformGrid: n must be positive"); }

  std::size_t steps() const { return n_; }
  std::size_t size() const { return n_ + 1; }
  double step() const { return 1.0 / static_cast<double>(n_); }
  double point(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(n_); }
  bool contains(double t) const { return t >= -kGridTolerance && t <= 1.0 + kGridTolerance && on_grid(t, n_); }

  std::vector<double> points() const {
    std::vector<double> pts(size());
    for (std::size_t j = 0; j <= n_; ++j) pts[j] = point(j);
    return pts;
  }

private:
  std::size_t n_;
};

/// k_n(t): the largest grid point not exceeding t; k_n(1) = 1.
inline double floor_time(double t, std::size_t n) {
  require(n >= 1, "floor_time: n must be positive");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("floor_time: t = " + std::to_string(t) + " outside [0,1]");
  const auto j = std::min<std::int64_t>(cell_index(t, n), static_cast<std::int64_t>(n));
  return static_cast<double>(j) / static_cast<double>(n);
}

/// \int_a^b (anchor - k_n(theta))^power dtheta for a < b <= anchor, summed
/// exactly over grid cells. Splitting [a,b] at any point and adding the
/// pieces reproduces the whole (same anchor).
inline double kernel_segment(double a, double b, double anchor, std::size_t n, double power) {
  require(n >= 1, "kernel_segment: n must be positive");
  if (!(a < b)) throw DomainError("kernel_segment: empty or reversed interval");
  if (b > anchor + kGridTolerance) throw DomainError("kernel_segment: upper limit beyond anchor");
  const double nd = static_cast<double>(n);
  const bool anchor_on_grid = on_grid(anchor, n);
  const auto anchor_index = static_cast<std::int64_t>(std::round(anchor * nd));
  const std::int64_t first = cell_index(a, n);
  const std::int64_t last = on_grid(b, n) ? static_cast<std::int64_t>(std::round(b * nd)) - 1
                                          : static_cast<std::int64_t>(std::floor(b * nd));
  const bool a_on_grid = on_grid(a, n);
  const bool b_on_grid = on_grid(b, n);

  double sum = 0.0;
  double carry = 0.0;
  for (std::int64_t j = first; j <= last; ++j) {
    const double lo = (j == first && !a_on_grid) ? a : static_cast<double>(j) / nd;
    const double hi = (j == last && !b_on_grid) ? b : static_cast<double>(j + 1) / nd;
    const double dist = anchor_on_grid ? static_cast<double>(anchor_index - j) / nd : anchor - static_cast<double>(j) / nd;
    const double term = (hi - lo) * std::pow(dist, power) - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum;
}

/// \int_s^r (r - k_n(theta))^power dtheta.
inline double kernel_integral(double s, double r, std::size_t n, double power) {
  if (!(r > s)) throw DomainError("kernel_integral: requires s < r");
  return kernel_segment(s, r, r, n, power);
}

/// 1 + sum_{j=1}^{10^6} j^{-1-eps}, the calibrated constant N_eps for the
/// (-1-eps) kernel bound. Evaluated by Euler-Maclaurin past j = 32.
inline double kernel_minus_constant(double eps) {
  require(eps > 0.0, "kernel_minus_constant: eps must be positive");
  constexpr double kTerms = 1e6;
  constexpr int kHead = 32;
  const double s = 1.0 + eps;
  double head = 0.0;
  for (int j = 1; j < kHead; ++j) head += std::pow(static_cast<double>(j), -s);
  const double K = kHead;
  const double J = kTerms;
  auto f = [&](double x) { return std::pow(x, -s); };
  auto d1 = [&](double x) { return -s * std::pow(x, -s - 1.0); };
  auto d3 = [&](double x) { return -s * (s + 1.0) * (s + 2.0) * std::pow(x, -s - 3.0); };
  auto d5 = [&](double x) { return -s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * std::pow(x, -s - 5.0); };
  const double integral = (std::pow(K, -eps) - std::pow(J, -eps)) / eps;
  const double tail = integral + 0.5 * (f(K) + f(J)) + (d1(J) - d1(K)) / 12.0 - (d3(J) - d3(K)) / 720.0 +
                      (d5(J) - d5(K)) / 30240.0;
  return 1.0 + head + tail;
}

enum class KernelBound { minus, log, plus };

inline const char* to_string(KernelBound b) {
  switch (b) {
  case KernelBound::minus: return "power -1-eps";
  case KernelBound::log: return "power -1";
  case KernelBound::plus: return "power -1+eps";
  }
  return "?";
}

struct KernelBoundCheck {
  KernelBound bound;
  bool applicable;
  double lhs;
  double rhs;
  bool holds() const { return !applicable || lhs <= rhs * (1.0 + 1e-12) + 1e-14; }
  double slack() const { return rhs - lhs; }
};

/// The three kernel inequalities at one tuple (s in D_n, r > s, eps > 0).
/// The logarithmic bound needs k_n(r) > s; for r - s < 1/n its right side is
/// -infinity and the check is reported as not applicable.
inline std::vector<KernelBoundCheck> check_kernel_bounds(double s, double r, std::size_t n, double eps) {
  require(on_grid(s, n), "check_kernel_bounds: s must be a grid point");
  require(r > s && eps > 0.0, "check_kernel_bounds: requires r > s and eps > 0");
  const double nd = static_cast<double>(n);
  const bool r_on_grid = on_grid(r, n);
  const double kr = static_cast<double>(cell_index(r, n)) / nd;
  std::vector<KernelBoundCheck> out;

  const double n_eps = kernel_minus_constant(eps);
  double rhs_minus = n_eps * std::pow(std::min(r - s, 1.0 / nd), -eps);
  if (!r_on_grid) rhs_minus += std::pow(r - kr, -eps);
  out.push_back({KernelBound::minus, true, kernel_integral(s, r, n, -1.0 - eps), rhs_minus});

  const auto cells = std::llround((kr - s) * nd);
  if (cells >= 1) {
    out.push_back({KernelBound::log, true, kernel_integral(s, r, n, -1.0),
                   std::log(static_cast<double>(cells)) + 2.0});
  } else {
    out.push_back({KernelBound::log, false, kernel_integral(s, r, n, -1.0), -std::numeric_limits<double>::infinity()});
  }

  out.push_back({KernelBound::plus, true, kernel_integral(s, r, n, -1.0 + eps), std::pow(r - s, eps) / eps});
  return out;
}

struct KernelBoundViolation {
  KernelBound bound;
  double s, r;
  std::size_t n;
  double eps, lhs, rhs;
};

struct KernelBoundReport {
  std::vector<KernelBoundViolation> violations;
  std::size_t checks = 0;
  std::size_t trials = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double max_slack = -std::numeric_limits<double>::infinity();
  bool ok() const { return violations.empty(); }
};

/// Samples (s in D_n, r > s, n, eps) and checks every kernel bound. Half the
/// r draws are grid points, half are uniform in (s, 1].
inline KernelBoundReport verify_kernel_bounds(std::size_t trials, std::uint64_t seed, std::size_t max_n = 256) {
  KernelBoundReport report;
  report.trials = trials;
  CounterStream rng(seed, StreamTag::verifier, 1);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(1, max_n));
    const auto j = rng.integer(0, n - 1);
    const double s = static_cast<double>(j) / static_cast<double>(n);
    double r;
    if (rng.uniform() < 0.5) {
      r = static_cast<double>(rng.integer(j + 1, n)) / static_cast<double>(n);
    } else {
      r = rng.uniform(s, 1.0);
      if (r - s < 1e-9) r = s + 1e-9;
    }
    const double eps = rng.uniform(0.01, 0.99);
    for (const auto& c : check_kernel_bounds(s, r, n, eps)) {
      if (!c.applicable) continue;
      ++report.checks;
      report.min_slack = std::min(report.min_slack, c.slack());
      report.max_slack = std::max(report.max_slack, c.slack());
      if (!c.holds()) report.violations.push_back({c.bound, s, r, n, eps, c.lhs, c.rhs});
    }
  }
  return report;
}

} // namespace tamed
