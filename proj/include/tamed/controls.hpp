#pragma once

// Control functions: nonnegative, superadditive set functions w(s,t) on the
// simplex S <= s <= t <= T, together with w-midpoints and the dyadic-in-w
// partitions used to split an interval into cells of equal control mass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/error.hpp"
#include "tamed/quadrature.hpp"
#include "tamed/random.hpp"

namespace tamed {

enum class ControlKind { elapsed_time, lq_density, singular_weight, product_interpolation, sum, sum_with_power };

inline const char* to_string(ControlKind k) {
  switch (k) {
  case ControlKind::elapsed_time: return "elapsed-time";
  case ControlKind::lq_density: return "lq-density";
  case ControlKind::singular_weight: return "singular-weight";
  case ControlKind::product_interpolation: return "product-interpolation";
  case ControlKind::sum: return "sum";
  case ControlKind::sum_with_power: return "sum-with-power";
  }
  return "?";
}

/// Immutable control function. Copies share the evaluator and any caches.
class ControlFn {
public:
  using Evaluator = std::function<double(double, double)>;

  ControlFn(ControlKind kind, double lower, double upper, Evaluator eval, bool sampled = false)
      : kind_(kind), lower_(lower), upper_(upper), sampled_(sampled),
        eval_(std::make_shared<const Evaluator>(std::move(eval))) {
    require(lower <= upper, "ControlFn: empty domain");
  }

  double operator()(double s, double t) const {
    if (s < lower_ - 1e-14 || t > upper_ + 1e-14 || s > t + 1e-14) {
      std::ostringstream msg;
      msg << "control " << to_string(kind_) << ": (" << s << ", " << t << ") outside simplex on [" << lower_ << ", "
          << upper_ << "]";
      throw DomainError(msg.str());
    }
    if (t <= s) return 0.0;
    return (*eval_)(std::max(s, lower_), std::min(t, upper_));
  }

  ControlKind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double total() const { return (*this)(lower_, upper_); }
  /// True when built from sampled data (continuity holds only piecewise).
  bool sampled() const { return sampled_; }

private:
  ControlKind kind_;
  double lower_;
  double upper_;
  bool sampled_;
  std::shared_ptr<const Evaluator> eval_;
};

/// w(s,t) = rate * (t - s).
inline ControlFn elapsed_time(double lower = 0.0, double upper = 1.0, double rate = 1.0) {
  require(rate >= 0.0, "elapsed_time: rate must be nonnegative");
  return ControlFn(ControlKind::elapsed_time, lower, upper, [rate](double s, double t) { return rate * (t - s); });
}

namespace detail {

/// Cumulative integral table F(x) = \int_lower^x g, with O(log) lookup.
struct CumulativeClosedForm {
  std::function<double(double)> g;
  std::vector<double> nodes;
  std::vector<double> cumulative;
  double tol;

  double at(double x) const {
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::size_t k = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    if (k + 1 >= nodes.size()) k = nodes.size() - 2;
    if (x == nodes[k]) return cumulative[k];
    return cumulative[k] + adaptive_simpson(g, nodes[k], x, tol);
  }
};

struct CumulativeSampled {
  double lower;
  double h;
  std::vector<double> g;
  std::vector<double> cumulative;

  double at(double x) const {
    const double pos = (x - lower) / h;
    auto k = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(g.size() - 2)));
    const double tau = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
    return cumulative[k] + h * (g[k] * tau + 0.5 * (g[k + 1] - g[k]) * tau * tau);
  }
};

} // namespace detail

/// w(s,t) = \int_s^t |phi(r)|^q dr for a closed-form phi, integrated by
/// adaptive quadrature (relative error about rel_tol) on a cached table.
inline ControlFn lq_density(std::function<double(double)> phi, double q, double lower = 0.0, double upper = 1.0,
                            double rel_tol = 1e-10, std::size_t table_cells = 256) {
  require(q >= 1.0 && std::isfinite(q), "lq_density: q must lie in [1, inf)");
  require(lower < upper, "lq_density: empty window");
  auto table = std::make_shared<detail::CumulativeClosedForm>();
  table->g = [phi = std::move(phi), q](double r) { return std::pow(std::fabs(phi(r)), q); };
  table->nodes.resize(table_cells + 1);
  for (std::size_t k = 0; k <= table_cells; ++k)
    table->nodes[k] = lower + (upper - lower) * static_cast<double>(k) / static_cast<double>(table_cells);
  const double rough = adaptive_simpson(table->g, lower, upper, 1e-6);
  table->tol = rel_tol * std::max(std::fabs(rough), 1e-300) / static_cast<double>(table_cells);
  table->cumulative.assign(table_cells + 1, 0.0);
  for (std::size_t k = 0; k < table_cells; ++k)
    table->cumulative[k + 1] =
        table->cumulative[k] + adaptive_simpson(table->g, table->nodes[k], table->nodes[k + 1], table->tol);
  return ControlFn(ControlKind::lq_density, lower, upper,
                   [table](double s, double t) { return std::max(0.0, table->at(t) - table->at(s)); });
}

/// Same control from samples phi_k at equally spaced points of [lower, upper];
/// |phi|^q is interpolated linearly (trapezoid rule).
inline ControlFn lq_density_sampled(const std::vector<double>& phi, double q, double lower = 0.0, double upper = 1.0) {
  require(phi.size() >= 2, "lq_density_sampled: need at least two samples");
  require(q >= 1.0 && std::isfinite(q), "lq_density_sampled: q must lie in [1, inf)");
  require(lower < upper, "lq_density_sampled: empty window");
  auto table = std::make_shared<detail::CumulativeSampled>();
  table->lower = lower;
  table->h = (upper - lower) / static_cast<double>(phi.size() - 1);
  table->g.resize(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) table->g[k] = std::pow(std::fabs(phi[k]), q);
  table->cumulative.assign(phi.size(), 0.0);
  for (std::size_t k = 0; k + 1 < phi.size(); ++k)
    table->cumulative[k + 1] = table->cumulative[k] + 0.5 * table->h * (table->g[k] + table->g[k + 1]);
  return ControlFn(
      ControlKind::lq_density, lower, upper,
      [table](double s, double t) { return std::max(0.0, table->at(t) - table->at(s)); }, true);
}

/// w(s,t) = s^{-nu} (t - s) on [lower, upper] with lower > 0.
inline ControlFn singular_weight(double nu, double lower, double upper) {
  if (!(lower > 0.0)) throw DomainError("singular_weight: window must start at S > 0");
  require(nu >= 0.0, "singular_weight: nu must be nonnegative");
  return ControlFn(ControlKind::singular_weight, lower, upper,
                   [nu](double s, double t) { return std::pow(s, -nu) * (t - s); });
}

/// w = w1^theta w2^{1-theta}, theta in [0,1].
inline ControlFn product_interpolation(const ControlFn& w1, const ControlFn& w2, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("product_interpolation: theta must lie in [0,1]");
  const double lo = std::max(w1.lower(), w2.lower());
  const double hi = std::min(w1.upper(), w2.upper());
  return ControlFn(ControlKind::product_interpolation, lo, hi, [w1, w2, theta](double s, double t) {
    return std::pow(w1(s, t), theta) * std::pow(w2(s, t), 1.0 - theta);
  });
}

inline ControlFn control_sum(const ControlFn& w1, const ControlFn& w2) {
  const double lo = std::max(w1.lower(), w2.lower());
  const double hi = std::min(w1.upper(), w2.upper());
  return ControlFn(ControlKind::sum, lo, hi, [w1, w2](double s, double t) { return w1(s, t) + w2(s, t); });
}

/// w = w1 + w2^exponent, exponent >= 1 (e.g. gamma2/gamma1).
inline ControlFn sum_with_power(const ControlFn& w1, const ControlFn& w2, double exponent) {
  if (!(exponent >= 1.0)) throw DomainError("sum_with_power: exponent must be >= 1");
  const double lo = std::max(w1.lower(), w2.lower());
  const double hi = std::min(w1.upper(), w2.upper());
  return ControlFn(ControlKind::sum_with_power, lo, hi,
                   [w1, w2, exponent](double s, double t) { return w1(s, t) + std::pow(w2(s, t), exponent); });
}

/// u = inf{r in [s,t] : w(s,r) >= w(s,t)/2}, located by bisection until
/// |w(s,u) - w(s,t)/2| <= tol * w(s,t).
inline double midpoint(const ControlFn& w, double s, double t, double tol = 1e-10, int max_iterations = 200) {
  require(s <= t, "midpoint: requires s <= t");
  const double total = w(s, t);
  if (total <= 0.0) return s;
  const double half = 0.5 * total;
  double lo = s;
  double hi = t;
  for (int it = 0; it < max_iterations; ++it) {
    if (std::fabs(w(s, hi) - half) <= tol * total) return hi;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (w(s, mid) >= half) hi = mid;
    else lo = mid;
  }
  if (std::fabs(w(s, hi) - half) <= tol * total) return hi;
  // Bracket collapsed to adjacent doubles: accept if the remaining jump is
  // rounding noise rather than a genuine discontinuity.
  if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(hi)) &&
      w(s, hi) - w(s, lo) <= 1e-9 * total)
    return hi;
  std::ostringstream msg;
  msg << "midpoint: bisection did not converge on [" << s << ", " << t << "] (control " << to_string(w.kind())
      << " may be discontinuous)";
  throw NumericalError(msg.str());
}

/// Level-h dyadic partition in w: 2^h + 1 ordered points obtained by
/// recursive w-midpoints; each level contains the previous one.
inline std::vector<double> dyadic_partition(const ControlFn& w, double s, double t, int h, double tol = 1e-13) {
  require(s <= t, "dyadic_partition: requires s <= t");
  if (h < 0 || h > 20) throw DomainError("dyadic_partition: level must lie in [0, 20]");
  std::vector<double> points{s, t};
  for (int level = 0; level < h; ++level) {
    std::vector<double> next;
    next.reserve(2 * points.size() - 1);
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
      next.push_back(points[k]);
      next.push_back(midpoint(w, points[k], points[k + 1], tol));
    }
    next.push_back(points.back());
    points = std::move(next);
  }
  return points;
}

struct ControlCheckReport {
  std::size_t triples = 0;
  std::size_t violations = 0;
  /// Largest (w(s,u) + w(u,t) - w(s,t)) / max(w(s,t), tiny) seen.
  double worst_excess = -std::numeric_limits<double>::infinity();
  bool ok() const { return violations == 0; }
};

/// Superadditivity w(s,u) + w(u,t) <= w(s,t) on random ordered triples of the
/// control's domain, within `rel_tol` of w(s,t).
inline ControlCheckReport verify_control(const ControlFn& w, std::size_t triples, std::uint64_t seed,
                                         double rel_tol = 1e-12) {
  ControlCheckReport rep;
  rep.triples = triples;
  CounterStream rng(seed, StreamTag::verifier, 3);
  for (std::size_t k = 0; k < triples; ++k) {
    double a[3] = {rng.uniform(w.lower(), w.upper()), rng.uniform(w.lower(), w.upper()),
                   rng.uniform(w.lower(), w.upper())};
    std::sort(a, a + 3);
    const double whole = w(a[0], a[2]);
    const double excess = w(a[0], a[1]) + w(a[1], a[2]) - whole;
    const double scale = std::max(whole, std::numeric_limits<double>::min());
    rep.worst_excess = std::max(rep.worst_excess, excess / scale);
    if (excess > rel_tol * whole + 1e-300) ++rep.violations;
    if (!(whole >= 0.0)) ++rep.violations;
  }
  return rep;
}

} // namespace tamed
