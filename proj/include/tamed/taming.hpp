#pragma once

// Drift taming: relative truncation, absolute truncation and Gaussian
// mollification of a singular drift, the admissible parameter ranges for
// each, and certificates for the local integrability condition
//
//   (1/n)^{1/2 - 1/q} ||b^n||_{L^q_inf([s,t])} <= mu(s,t)^theta,  t - s <= 1/n.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/controls.hpp"
#include "tamed/error.hpp"
#include "tamed/fft.hpp"
#include "tamed/fields.hpp"
#include "tamed/grid.hpp"
#include "tamed/random.hpp"

namespace tamed {

enum class TamingKind { relative_truncation, absolute_truncation, mollification };

inline const char* to_string(TamingKind k) {
  switch (k) {
  case TamingKind::relative_truncation: return "relative";
  case TamingKind::absolute_truncation: return "absolute";
  case TamingKind::mollification: return "mollification";
  }
  return "?";
}

struct TamingStrategy {
  TamingKind kind = TamingKind::absolute_truncation;
  double C = 1.0;
  double chi = 0.5;
};

struct MollificationOptions {
  /// Box half-width; default support radius + 8 kernel deviations, else 8.
  std::optional<double> half_width;
  /// Grid spacing; default kernel deviation / nodes_per_std.
  std::optional<double> spacing;
  double nodes_per_std = 4.0;
  /// Largest number of stored samples (slices x nodes x components).
  std::size_t max_samples = 50'000'000;
};

/// ||b_t||_{L_p} (max over components): analytic when the field provides it,
/// otherwise trapezoid quadrature on `grid`.
inline double drift_slice_lp_norm(const DriftField& b, double t, const NormGrid& grid = {}) {
  if (b.slice_lp_norm) return b.slice_lp_norm(t);
  VectorField frozen = b.field;
  frozen.time_dependent = false;
  frozen.eval = [f = b.field, t](double, std::span<const double> x, std::span<double> y) { f.eval(t, x, y); };
  return mixed_norm(frozen, b.p, std::numeric_limits<double>::infinity(), 0.0, 1.0, grid, b.singular_points);
}

/// ||b||_{L^q_p([s,t])}: analytic if possible, else by quadrature.
inline double drift_lqp_norm(const DriftField& b, double q, double s = 0.0, double t = 1.0, const NormGrid& grid = {}) {
  if (auto v = b.analytic_lqp_norm(q, s, t)) return *v;
  return mixed_norm(b.field, b.p, q, s, t, grid, b.singular_points);
}

/// Tamed drift b^n. Immutable; copies share caches.
class TamedDrift {
public:
  const DriftField& base() const { return state_->base; }
  const TamingStrategy& strategy() const { return state_->strategy; }
  std::size_t n() const { return state_->n; }
  const VectorField& field() const { return state_->field; }

  /// Certified bound on sup_x |b^n(t, x)| (Euclidean), frozen at k_n(t).
  double sup_norm_bound(double t) const { return state_->sup_bound[slice_of(t)]; }
  /// Truncation threshold at time t (infinite for mollification).
  double threshold(double t) const { return state_->threshold[slice_of(t)]; }
  /// Cached ||b_{k_n(t)}||_{L_p}; only populated for relative truncation.
  double cached_slice_norm(double t) const {
    return state_->slice_norm.empty() ? std::numeric_limits<double>::quiet_NaN() : state_->slice_norm[slice_of(t)];
  }
  /// Mollification grid (spacing, half width, nodes per axis); zeros otherwise.
  double grid_spacing() const { return state_->spacing; }
  double grid_half_width() const { return state_->half_width; }
  std::size_t grid_nodes() const { return state_->nodes; }
  /// Kernel standard deviation n^{-chi/2} for mollification.
  double kernel_std() const { return std::pow(static_cast<double>(state_->n), -0.5 * state_->strategy.chi); }

  struct State {
    DriftField base;
    TamingStrategy strategy;
    std::size_t n = 1;
    VectorField field;
    bool per_cell = false;  // caches indexed by grid cell, else a single slice
    std::vector<double> sup_bound;
    std::vector<double> threshold;
    std::vector<double> slice_norm;
    // mollification
    double spacing = 0.0;
    double half_width = 0.0;
    std::size_t nodes = 0;
    std::vector<std::vector<double>> mollified;  // per slice: nodes^d x d, row-major node index
  };

  explicit TamedDrift(std::shared_ptr<State> s) : state_(std::move(s)) {}

private:
  std::size_t slice_of(double t) const {
    if (!state_->per_cell) return 0;
    const auto j = std::clamp<std::int64_t>(cell_index(t, state_->n), 0, static_cast<std::int64_t>(state_->n));
    return static_cast<std::size_t>(j);
  }

  std::shared_ptr<const State> state_;
};

namespace detail {

inline double euclidean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline void truncation_field(TamedDrift::State& st) {
  const std::size_t d = st.base.dim();
  st.field = {d, d, nullptr, st.base.field.time_dependent};
  auto thresholds = std::make_shared<std::vector<double>>(st.threshold);
  const bool per_cell = st.per_cell;
  const std::size_t n = st.n;
  const VectorField f = st.base.field;
  st.field.eval = [f, thresholds, per_cell, n](double t, std::span<const double> x, std::span<double> out) {
    f.eval(t, x, out);
    std::size_t k = 0;
    if (per_cell)
      k = static_cast<std::size_t>(std::clamp<std::int64_t>(cell_index(t, n), 0, static_cast<std::int64_t>(n)));
    if (euclidean(out) > (*thresholds)[k]) std::fill(out.begin(), out.end(), 0.0);
  };
}

inline void mollify(TamedDrift::State& st, const MollificationOptions& opt) {
  const std::size_t d = st.base.dim();
  const double var = std::pow(static_cast<double>(st.n), -st.strategy.chi);
  const double sd = std::sqrt(var);
  const double h = opt.spacing.value_or(sd / opt.nodes_per_std);
  if (h > sd / 4.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "tame: mollification grid spacing " << h << " coarser than kernel width (need <= " << sd / 4.0 << ")";
    throw DomainError(msg.str());
  }
  const double L = opt.half_width.value_or(st.base.support_radius ? *st.base.support_radius + 8.0 * sd : 8.0);
  const auto N = static_cast<std::size_t>(std::ceil(2.0 * L / h));
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= N;
  const std::size_t slices = st.base.field.time_dependent ? st.n + 1 : 1;
  if (slices * total * d > opt.max_samples)
    throw DomainError("tame: mollification grid too large (" + std::to_string(slices * total * d) + " samples)");
  st.spacing = 2.0 * L / static_cast<double>(N);
  st.half_width = L;
  st.nodes = N;
  st.per_cell = st.base.field.time_dependent;
  const double hh = st.spacing;

  // Periodic Gaussian kernel on the grid, normalized to unit discrete mass.
  std::vector<int> dims(d, static_cast<int>(N));
  std::vector<std::complex<double>> kernel(total);
  {
    std::vector<std::size_t> idx(d, 0);
    double mass = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double off = static_cast<double>(signed_frequency(idx[i], N)) * hh;
        r2 += off * off;
      }
      const double w = std::exp(-0.5 * r2 / var);
      kernel[k] = w;
      mass += w;
      for (std::size_t i = d; i-- > 0;) {
        if (++idx[i] < N) break;
        idx[i] = 0;
      }
    }
    for (auto& v : kernel) v /= mass;
  }
  const auto kernel_hat = fft(kernel, dims, -1);

  st.mollified.assign(slices, {});
  st.sup_bound.assign(slices, 0.0);
  st.threshold.assign(slices, std::numeric_limits<double>::infinity());
  std::vector<double> x(d), y(d);
  for (std::size_t sl = 0; sl < slices; ++sl) {
    const double t = st.base.field.time_dependent ? static_cast<double>(sl) / static_cast<double>(st.n) : 0.0;
    std::vector<std::vector<std::complex<double>>> comp(d, std::vector<std::complex<double>>(total));
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t k = 0; k < total; ++k) {
      for (std::size_t i = 0; i < d; ++i) x[i] = -L + hh * static_cast<double>(idx[i]);
      st.base.field.eval(t, x, y);
      for (std::size_t c = 0; c < d; ++c) {
        if (!std::isfinite(y[c])) throw NumericalError("tame: non-finite drift sample on mollification grid");
        comp[c][k] = y[c];
      }
      for (std::size_t i = d; i-- > 0;) {
        if (++idx[i] < N) break;
        idx[i] = 0;
      }
    }
    auto& out = st.mollified[sl];
    out.assign(total * d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
      auto spec = fft(std::move(comp[c]), dims, -1);
      for (std::size_t k = 0; k < total; ++k) spec[k] *= kernel_hat[k];
      const auto conv = fft(std::move(spec), dims, +1);
      for (std::size_t k = 0; k < total; ++k) out[k * d + c] = conv[k].real() / static_cast<double>(total);
    }
    double sup = 0.0;
    for (std::size_t k = 0; k < total; ++k) sup = std::max(sup, euclidean(std::span<const double>(&out[k * d], d)));
    st.sup_bound[sl] = sup;
  }

  auto data = std::make_shared<std::vector<std::vector<double>>>(st.mollified);
  const bool per_cell = st.per_cell;
  const std::size_t n = st.n;
  st.field = {d, d, nullptr, st.base.field.time_dependent};
  st.field.eval = [data, per_cell, n, N, L, hh, d](double t, std::span<const double> x, std::span<double> out) {
    std::size_t sl = 0;
    if (per_cell)
      sl = static_cast<std::size_t>(std::clamp<std::int64_t>(cell_index(t, n), 0, static_cast<std::int64_t>(n)));
    std::size_t node = 0;
    for (std::size_t i = 0; i < d; ++i) {
      auto k = static_cast<long long>(std::llround((x[i] + L) / hh)) % static_cast<long long>(N);
      if (k < 0) k += static_cast<long long>(N);
      node = node * N + static_cast<std::size_t>(k);
    }
    const auto& slice = (*data)[sl];
    for (std::size_t c = 0; c < d; ++c) out[c] = slice[node * d + c];
  };
}

} // namespace detail

/// Builds b^n for step count n.
///  - relative truncation: b 1{|b_r| <= C n^chi ||b_r||_{L_p}}, slice norms
///    frozen at grid times;
///  - absolute truncation: b 1{|b_r| <= C n^chi};
///  - mollification: Gaussian convolution with variance n^{-chi} per axis,
///    by FFT on a periodic grid, nearest-node evaluation off grid.
/// |.| is the Euclidean norm; a value exactly at the threshold is kept.
inline TamedDrift tame(const DriftField& b, const TamingStrategy& strategy, std::size_t n,
                       const MollificationOptions& mollification = {}, const NormGrid& norm_grid = {}) {
  require(n >= 1, "tame: n must be positive");
  require(strategy.chi > 0.0, "tame: chi must be positive");
  require(strategy.kind == TamingKind::mollification || strategy.C > 0.0, "tame: C must be positive");
  auto st = std::make_shared<TamedDrift::State>();
  st->base = b;
  st->strategy = strategy;
  st->n = n;
  const double level = strategy.C * std::pow(static_cast<double>(n), strategy.chi);

  switch (strategy.kind) {
  case TamingKind::absolute_truncation: {
    st->per_cell = false;
    st->threshold = {level};
    st->sup_bound = {b.sup_norm ? std::min(level, *b.sup_norm) : level};
    detail::truncation_field(*st);
    break;
  }
  case TamingKind::relative_truncation: {
    st->per_cell = b.field.time_dependent;
    const std::size_t slices = st->per_cell ? n + 1 : 1;
    st->slice_norm.resize(slices);
    st->threshold.resize(slices);
    st->sup_bound.resize(slices);
    for (std::size_t j = 0; j < slices; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(n);
      st->slice_norm[j] = drift_slice_lp_norm(b, t, norm_grid);
      st->threshold[j] = level * st->slice_norm[j];
      st->sup_bound[j] = b.sup_norm ? std::min(st->threshold[j], *b.sup_norm) : st->threshold[j];
    }
    detail::truncation_field(*st);
    break;
  }
  case TamingKind::mollification:
    detail::mollify(*st, mollification);
    break;
  }
  return TamedDrift(std::move(st));
}

// ---------------------------------------------------------------------------
// Admissible parameters
// ---------------------------------------------------------------------------

struct AdmissibleChi {
  TamingKind kind{};
  double lower = 0.0;
  double upper = 0.0;
  bool upper_inclusive = false;
  bool empty = false;
  /// rho for the truncations, nu for mollification.
  double rate_parameter = 0.0;
  /// False when the optimal parameter is the supremum of an open range;
  /// the predicted exponent is then approached but not attained.
  bool rate_parameter_attained = true;
  std::optional<double> predicted_exponent;
  /// True when the 1/2 term is binding, which carries a log(n) factor.
  bool log_factor = false;
  /// Side conditions on p0, q0 that the mollification result needs.
  bool side_conditions_met = true;
  std::string note;

  bool contains(double chi) const {
    return !empty && chi > lower && (upper_inclusive ? chi <= upper : chi < upper);
  }
};

/// Admissible taming exponents chi and the resulting predicted strong-rate
/// exponent (pass chi to get the exponent).
inline AdmissibleChi admissible_chi(TamingKind kind, double p, double q, double d, double alpha = 1.0,
                                    double p0 = std::numeric_limits<double>::infinity(),
                                    double q0 = std::numeric_limits<double>::infinity(),
                                    std::optional<double> chi = std::nullopt) {
  const double lps = d / p + 2.0 / q;
  if (!(lps < 1.0)) {
    std::ostringstream msg;
    msg << "admissible_chi: d/p + 2/q = " << lps << " violates d/p + 2/q < 1";
    throw DomainError(msg.str());
  }
  AdmissibleChi out;
  out.kind = kind;
  double rate_term = 0.0;
  switch (kind) {
  case TamingKind::relative_truncation: {
    out.upper = 0.5 - 1.0 / q;
    out.upper_inclusive = true;
    const double sup_rho = (2.0 - 2.0 / q) * p / d;  // rho d/p + 2/q < 2
    out.rate_parameter = std::min(p, sup_rho);
    out.rate_parameter_attained = p < sup_rho;
    if (chi) rate_term = *chi * (out.rate_parameter - 1.0);
    break;
  }
  case TamingKind::absolute_truncation: {
    out.upper = 1.5 - 2.0 / q;
    out.upper_inclusive = false;
    const double sup_rho = 2.0 / lps;  // rho (d/p + 2/q) < 2
    out.rate_parameter = std::min({p, q, sup_rho});
    out.rate_parameter_attained = std::min(p, q) < sup_rho;
    if (chi) rate_term = *chi * (out.rate_parameter - 1.0);
    break;
  }
  case TamingKind::mollification: {
    out.upper = p / d * (1.0 - 2.0 / q);
    out.upper_inclusive = true;
    out.rate_parameter = std::min(1.0, 1.5 - d / (2.0 * p) - 2.0 / q);
    out.rate_parameter_attained = false;
    out.side_conditions_met = std::isinf(q0) && (1.0 / p + 1.0 / p0 < 1.0);
    if (!out.side_conditions_met) out.note = "mollification rate also needs q0 = inf and 1/p + 1/p0 < 1; ";
    if (chi) rate_term = *chi * out.rate_parameter / 2.0;
    break;
  }
  }
  out.empty = out.upper <= out.lower;
  if (out.empty) {
    std::ostringstream msg;
    msg << "empty chi interval (0, " << out.upper << (out.upper_inclusive ? "]" : ")") << " for q = " << q;
    out.note += msg.str();
    return out;
  }
  if (chi) {
    if (!out.contains(*chi)) out.note += "chi outside the admissible interval; ";
    const double e = std::min({rate_term, alpha / 2.0, 0.5});
    out.predicted_exponent = e;
    out.log_factor = (e == 0.5) && rate_term >= 0.5 && alpha >= 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Local integrability certificates
// ---------------------------------------------------------------------------

struct ConditionBCertificate {
  ControlFn mu;
  double theta;
  double K4_bound;
  std::string construction;
};

/// sup-norm constant of the Gaussian kernel in L_{p'}: ||p_eps||_{p'} = K eps^{-d/(2p)}.
inline double gaussian_young_constant(double p, std::size_t d) {
  const double dd = static_cast<double>(d);
  if (std::isinf(p)) return 1.0;
  const double pc = p / (p - 1.0);
  return std::pow(2.0 * std::numbers::pi, -dd / (2.0 * p)) * std::pow(pc, -dd / (2.0 * pc));
}

/// Certificate (mu, theta) for b^n with time exponent q (finite, q > 2):
///  - relative truncation, chi <= 1/2 - 1/q: mu = C^q ||b||^q_{L^q_p}, theta = 1/q;
///  - absolute truncation, chi < 1/2: mu = C^{1/theta} (t - s),
///    theta = min(1/q, 1/2 - chi);
///  - mollification, chi d/(2p) <= 1/2 - 1/q: mu = K^q ||b||^q_{L^q_p} with
///    the Young constant K of the Gaussian kernel, theta = 1/q.
/// Throws DomainError when the strategy admits no certificate.
inline ConditionBCertificate condition_b_certificate(const TamedDrift& bn, double q, const NormGrid& grid = {}) {
  const DriftField& b = bn.base();
  const auto& st = bn.strategy();
  const double p = b.p;
  const std::size_t d = b.dim();
  require(std::isfinite(q) && q > 2.0, "condition_b_certificate: q must be finite and > 2");
  require(static_cast<double>(d) / p + 2.0 / q < 1.0, "condition_b_certificate: d/p + 2/q < 1 fails");
  const double lqp = drift_lqp_norm(b, q, 0.0, 1.0, grid);

  auto density_control = [&](double scale) {
    if (!b.field.time_dependent) {
      const double slice = drift_slice_lp_norm(b, 0.0, grid);
      return elapsed_time(0.0, 1.0, std::pow(scale * slice, q));
    }
    return lq_density([b, scale, grid](double r) { return scale * drift_slice_lp_norm(b, r, grid); }, q);
  };

  std::ostringstream why;
  switch (st.kind) {
  case TamingKind::relative_truncation: {
    if (st.chi > 0.5 - 1.0 / q + 1e-15) {
      why << "relative truncation needs chi <= 1/2 - 1/q = " << 0.5 - 1.0 / q << ", got " << st.chi;
      throw DomainError("condition_b_certificate: " + why.str());
    }
    auto mu = density_control(st.C);
    return {mu, 1.0 / q, mu.total() + lqp, "mu = C^q ||b||^q_{L^q_p([s,t])}, theta = 1/q"};
  }
  case TamingKind::absolute_truncation: {
    if (!(st.chi < 0.5)) {
      why << "absolute truncation at chi = " << st.chi
          << " >= 1/2 keeps (1/n)^{1/2-1/q} ||b^n||_{L^q_inf} of order one on every cell, so no control with "
             "bounded mu(0,1) satisfies the bound";
      throw DomainError("condition_b_certificate: " + why.str());
    }
    const double theta = std::min(1.0 / q, 0.5 - st.chi);
    auto mu = elapsed_time(0.0, 1.0, std::pow(st.C, 1.0 / theta));
    return {mu, theta, mu.total() + lqp, "mu = C^{1/theta} (t - s), theta = min(1/q, 1/2 - chi)"};
  }
  case TamingKind::mollification: {
    const double dd = static_cast<double>(d);
    if (st.chi * dd / (2.0 * p) > 0.5 - 1.0 / q + 1e-15) {
      why << "mollification needs chi <= (p/d)(1 - 2/q) = " << p / dd * (1.0 - 2.0 / q) << ", got " << st.chi;
      throw DomainError("condition_b_certificate: " + why.str());
    }
    auto mu = density_control(gaussian_young_constant(p, d));
    return {mu, 1.0 / q, mu.total() + lqp, "mu = K^q ||b||^q_{L^q_p([s,t])}, K = ||p_1||_{L_p'}, theta = 1/q"};
  }
  }
  throw DomainError("condition_b_certificate: unknown strategy");
}

struct ConditionBWindow {
  double s, t, lhs, rhs;
};

struct ConditionBReport {
  std::size_t windows = 0;
  std::size_t violations = 0;
  /// min over windows of mu(s,t)^theta - lhs.
  double worst_margin = std::numeric_limits<double>::infinity();
  /// max over windows of lhs / mu(s,t)^theta.
  double worst_ratio = 0.0;
  std::vector<ConditionBWindow> violating;  // first few
  bool ok() const { return violations == 0; }
};

/// (1/n)^{1/2 - 1/q} ||b^n||_{L^q_inf([s,t])} from the sup-norm certificate,
/// integrated exactly over the (piecewise constant) grid cells.
inline double local_sup_norm_term(const TamedDrift& bn, double q, double s, double t) {
  const std::size_t n = bn.n();
  const double nd = static_cast<double>(n);
  double integral = 0.0;
  if (!bn.base().field.time_dependent) {
    integral = std::pow(bn.sup_norm_bound(s), q) * (t - s);
  } else {
    const std::int64_t first = cell_index(s, n);
    for (std::int64_t j = first; static_cast<double>(j) / nd < t; ++j) {
      const double lo = std::max(s, static_cast<double>(j) / nd);
      const double hi = std::min(t, static_cast<double>(j + 1) / nd);
      if (hi > lo) integral += std::pow(bn.sup_norm_bound(static_cast<double>(j) / nd), q) * (hi - lo);
    }
  }
  return std::pow(1.0 / nd, 0.5 - 1.0 / q) * std::pow(integral, 1.0 / q);
}

/// Checks the local bound on every grid cell plus `windows` random windows
/// of length <= 1/n (log-uniform lengths down to 1e-6/n).
inline ConditionBReport verify_condition_B(const TamedDrift& bn, const ConditionBCertificate& cert, double q,
                                           std::size_t windows, std::uint64_t seed) {
  ConditionBReport report;
  const std::size_t n = bn.n();
  const double cell = 1.0 / static_cast<double>(n);
  auto check = [&](double s, double t) {
    const double lhs = local_sup_norm_term(bn, q, s, t);
    const double rhs = std::pow(cert.mu(s, t), cert.theta);
    ++report.windows;
    report.worst_margin = std::min(report.worst_margin, rhs - lhs);
    if (rhs > 0.0) report.worst_ratio = std::max(report.worst_ratio, lhs / rhs);
    else if (lhs > 0.0) report.worst_ratio = std::numeric_limits<double>::infinity();
    if (lhs > rhs * (1.0 + 1e-12)) {
      ++report.violations;
      if (report.violating.size() < 10) report.violating.push_back({s, t, lhs, rhs});
    }
  };
  const std::size_t full_cells = std::min<std::size_t>(n, 64);
  for (std::size_t k = 0; k < full_cells; ++k) {
    const std::size_t j = (k * n) / full_cells;
    check(static_cast<double>(j) * cell, static_cast<double>(j + 1) * cell);
  }
  CounterStream rng(seed, StreamTag::verifier, 3);
  for (std::size_t k = 0; k < windows; ++k) {
    const double len = cell * std::pow(10.0, rng.uniform(-6.0, 0.0));
    const double s = rng.uniform(0.0, 1.0 - len);
    check(s, s + len);
  }
  return report;
}

} // namespace tamed
