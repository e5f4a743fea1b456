#pragma once

// Drift and diffusion coefficients with their integrability and regularity
// metadata, mixed-norm and Bessel-potential norm estimators, and the
// ellipticity / Hoelder check for diffusion coefficients.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/error.hpp"
#include "tamed/fft.hpp"
#include "tamed/parallel.hpp"
#include "tamed/random.hpp"

namespace tamed {

/// Evaluable field (t, x) -> R^{out_dim}, x in R^{in_dim}. Writes into `out`
/// without allocating.
struct VectorField {
  using Evaluator = std::function<void(double, std::span<const double>, std::span<double>)>;

  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Evaluator eval;
  bool time_dependent = true;

  void operator()(double t, std::span<const double> x, std::span<double> out) const { eval(t, x, out); }

  std::vector<double> operator()(double t, std::span<const double> x) const {
    std::vector<double> out(out_dim);
    eval(t, x, out);
    return out;
  }
};

/// f - g, componentwise.
inline VectorField difference(const VectorField& f, const VectorField& g) {
  require(f.in_dim == g.in_dim && f.out_dim == g.out_dim, "difference: dimension mismatch");
  const std::size_t m = f.out_dim;
  VectorField out{f.in_dim, m, nullptr, f.time_dependent || g.time_dependent};
  out.eval = [f, g, m](double t, std::span<const double> x, std::span<double> y) {
    double buf[16];
    std::vector<double> heap;
    std::span<double> tmp(buf, m);
    if (m > 16) {
      heap.resize(m);
      tmp = heap;
    }
    f.eval(t, x, y);
    g.eval(t, x, tmp);
    for (std::size_t i = 0; i < m; ++i) y[i] -= tmp[i];
  };
  return out;
}

/// c * f.
inline VectorField scaled(const VectorField& f, double c) {
  VectorField out = f;
  out.eval = [f, c](double t, std::span<const double> x, std::span<double> y) {
    f.eval(t, x, y);
    for (double& v : y) v *= c;
  };
  return out;
}

struct DriftField {
  VectorField field;
  /// Spatial and temporal integrability exponents; q = infinity marks a
  /// time-independent field that lies in every L^q([0,1]).
  double p = 2.0;
  double q = std::numeric_limits<double>::infinity();
  /// Known ||b_t||_{L_p(R^d)} (max over components) as a function of t.
  std::function<double(double)> slice_lp_norm;
  std::optional<double> support_radius;
  /// Known sup_{t,x} |b(t,x)| (Euclidean), when finite and available.
  std::optional<double> sup_norm;
  std::vector<std::vector<double>> singular_points;
  std::string name;

  std::size_t dim() const { return field.in_dim; }
  double lps_index() const { return static_cast<double>(dim()) / p + 2.0 / q; }
  bool lps_admissible() const { return lps_index() < 1.0; }

  /// ||b||_{L^{qq}_p([s,t])} from the analytic slice norms, if available.
  std::optional<double> analytic_lqp_norm(double qq, double s = 0.0, double t = 1.0) const {
    if (!slice_lp_norm || field.time_dependent) return std::nullopt;
    const double slice = slice_lp_norm(s);
    if (std::isinf(qq)) return slice;
    return slice * std::pow(t - s, 1.0 / qq);
  }
};

struct SobolevMeta {
  double p0;
  double q0;
  double K3;
};

/// Matrix field (t, x) -> R^{d x d}, written row-major into `out`.
struct DiffusionField {
  using Evaluator = std::function<void(double, std::span<const double>, std::span<double>)>;

  std::size_t dim = 1;
  Evaluator eval;
  double K1 = 1.0;
  double alpha = 1.0;
  double K2 = 0.0;
  std::optional<SobolevMeta> sobolev;
  bool time_dependent = false;
  std::string name;

  std::vector<double> operator()(double t, std::span<const double> x) const {
    std::vector<double> out(dim * dim);
    eval(t, x, out);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Built-in fields
// ---------------------------------------------------------------------------

inline DriftField zero_drift(std::size_t d) {
  DriftField b;
  b.field = {d, d, [](double, std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
             false};
  b.slice_lp_norm = [](double) { return 0.0; };
  b.support_radius = 0.0;
  b.sup_norm = 0.0;
  b.name = "zero";
  return b;
}

inline DriftField constant_drift(std::vector<double> c) {
  DriftField b;
  const std::size_t d = c.size();
  b.field = {d, d,
             [c](double, std::span<const double>, std::span<double> out) { std::copy(c.begin(), c.end(), out.begin()); },
             false};
  b.p = std::numeric_limits<double>::infinity();
  double norm2 = 0.0;
  for (double v : c) norm2 += v * v;
  b.sup_norm = std::sqrt(norm2);
  b.name = "constant";
  return b;
}

/// b(x) = -kappa x.
inline DriftField linear_drift(std::size_t d, double kappa) {
  DriftField b;
  b.field = {d, d,
             [kappa](double, std::span<const double> x, std::span<double> out) {
               for (std::size_t i = 0; i < x.size(); ++i) out[i] = -kappa * x[i];
             },
             false};
  b.p = std::numeric_limits<double>::infinity();
  b.name = "linear";
  return b;
}

/// b(x) = mu * clip(x), clip to [-clip, clip] per component.
inline DriftField gbm_drift(std::size_t d, double mu, double clip = 1e6) {
  DriftField b;
  b.field = {d, d,
             [mu, clip](double, std::span<const double> x, std::span<double> out) {
               for (std::size_t i = 0; i < x.size(); ++i) out[i] = mu * std::clamp(x[i], -clip, clip);
             },
             false};
  b.p = std::numeric_limits<double>::infinity();
  b.name = "gbm";
  return b;
}

/// \int_{S^{d-1}} |omega_1|^p d omega.
inline double sphere_component_moment(std::size_t d, double p) {
  const double dd = static_cast<double>(d);
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (dd - 1.0)) * std::tgamma(0.5 * (p + 1.0)) /
         std::tgamma(0.5 * (dd + p));
}

/// b(x) = x/|x| * |x|^{-theta} on |x| <= radius, 0 elsewhere and at x = 0.
/// In d = 1 this is sign(x)|x|^{-theta} 1_{|x| <= radius}. Lies in L_p for
/// theta * p < d.
inline DriftField power_singularity_drift(std::size_t d, double theta, double radius, double p,
                                          double q = std::numeric_limits<double>::infinity()) {
  require(theta > 0.0 && radius > 0.0, "power_singularity_drift: theta and radius must be positive");
  require(theta * p < static_cast<double>(d), "power_singularity_drift: field not in L_p (need theta*p < d)");
  DriftField b;
  b.field = {d, d,
             [theta, radius](double, std::span<const double> x, std::span<double> out) {
               double r2 = 0.0;
               for (double v : x) r2 += v * v;
               const double r = std::sqrt(r2);
               if (r == 0.0 || r > radius) {
                 std::fill(out.begin(), out.end(), 0.0);
                 return;
               }
               const double scale = std::pow(r, -theta - 1.0);
               for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * scale;
             },
             false};
  b.p = p;
  b.q = q;
  const double dd = static_cast<double>(d);
  const double norm = std::pow(sphere_component_moment(d, p) * std::pow(radius, dd - theta * p) / (dd - theta * p), 1.0 / p);
  b.slice_lp_norm = [norm](double) { return norm; };
  b.support_radius = radius;
  b.singular_points = {std::vector<double>(d, 0.0)};
  b.name = "power_singularity";
  return b;
}

inline DiffusionField identity_diffusion(std::size_t d) {
  DiffusionField s;
  s.dim = d;
  s.eval = [d](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = 1.0;
  };
  s.K1 = 1.0;
  s.alpha = 1.0;
  s.K2 = 0.0;
  s.sobolev = SobolevMeta{2.0 * static_cast<double>(d) + 2.0, std::numeric_limits<double>::infinity(), 0.0};
  s.name = "identity";
  return s;
}

/// sigma = 0 (degenerate; only for deterministic benchmarks).
inline DiffusionField zero_diffusion(std::size_t d) {
  DiffusionField s;
  s.dim = d;
  s.eval = [](double, std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
  s.K1 = std::numeric_limits<double>::infinity();
  s.name = "zero";
  return s;
}

/// sigma(x) = diag(sqrt(1 + a sin^2 x_i)); sigma sigma^* has spectrum in [1, 1+a].
inline DiffusionField trig_elliptic_diffusion(std::size_t d, double amplitude) {
  require(amplitude >= 0.0, "trig_elliptic_diffusion: amplitude must be nonnegative");
  DiffusionField s;
  s.dim = d;
  s.eval = [d, amplitude](double, std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double sn = std::sin(x[i]);
      out[i * d + i] = std::sqrt(1.0 + amplitude * sn * sn);
    }
  };
  s.K1 = 1.0 + amplitude;
  s.alpha = 1.0;
  s.K2 = amplitude;
  s.sobolev = SobolevMeta{2.0 * static_cast<double>(d) + 2.0, std::numeric_limits<double>::infinity(),
                          amplitude};
  s.name = "trig_elliptic";
  return s;
}

/// sigma(x) = diag(vol * clip(x)); degenerate at 0, used by the Lipschitz benchmark.
inline DiffusionField gbm_diffusion(std::size_t d, double vol, double clip = 1e6) {
  DiffusionField s;
  s.dim = d;
  s.eval = [d, vol, clip](double, std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = vol * std::clamp(x[i], -clip, clip);
  };
  s.K1 = std::numeric_limits<double>::infinity();
  s.alpha = 1.0;
  s.K2 = std::numeric_limits<double>::infinity();
  s.name = "gbm";
  return s;
}

// ---------------------------------------------------------------------------
// Mixed norms
// ---------------------------------------------------------------------------

/// Spatial box [-half_width, half_width]^d sampled with `points_per_axis`
/// nodes per axis (endpoints included) and `time_points` nodes in time.
struct NormGrid {
  double half_width = 8.0;
  std::size_t points_per_axis = 257;
  std::size_t time_points = 65;
};

struct MixedNormResult {
  double value = 0.0;
  std::size_t nudged_nodes = 0;
};

namespace detail {

inline double power_or_max_accumulate(double acc, double v, double weight, double p) {
  if (std::isinf(p)) return std::max(acc, std::fabs(v));
  return acc + weight * std::pow(std::fabs(v), p);
}

/// Per-component spatial L_p norms of f(t, .) on the box, trapezoid rule.
inline std::vector<double> slice_norms(const VectorField& f, double t, double p, const NormGrid& grid,
                                       std::span<const std::vector<double>> singular, std::size_t& nudged) {
  const std::size_t d = f.in_dim;
  const std::size_t P = grid.points_per_axis;
  const double h = 2.0 * grid.half_width / static_cast<double>(P - 1);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= P;
  std::vector<double> acc(f.out_dim, 0.0);
  std::vector<double> x(d), y(f.out_dim);
  std::vector<std::size_t> idx(d, 0);
  std::vector<std::string> bad;
  for (std::size_t node = 0; node < total; ++node) {
    double weight = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = -grid.half_width + h * static_cast<double>(idx[i]);
      weight *= (idx[i] == 0 || idx[i] == P - 1) ? 0.5 * h : h;
    }
    for (const auto& sp : singular) {
      bool hit = sp.size() == d;
      for (std::size_t i = 0; hit && i < d; ++i) hit = std::fabs(x[i] - sp[i]) <= 1e-12;
      if (hit) {
        for (std::size_t i = 0; i < d; ++i) x[i] += 0.5 * h;
        ++nudged;
      }
    }
    f.eval(t, x, y);
    for (std::size_t c = 0; c < f.out_dim; ++c) {
      if (!std::isfinite(y[c])) {
        if (bad.size() < 5) {
          std::ostringstream s;
          s << "(t=" << t << ", x=[";
          for (std::size_t i = 0; i < d; ++i) s << (i ? "," : "") << x[i];
          s << "])";
          bad.push_back(s.str());
        }
        continue;
      }
      acc[c] = power_or_max_accumulate(acc[c], y[c], weight, p);
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (++idx[i] < P) break;
      idx[i] = 0;
    }
  }
  if (!bad.empty()) {
    std::string msg = "mixed_norm: non-finite samples at";
    for (const auto& b : bad) msg += " " + b;
    throw NumericalError(msg);
  }
  if (!std::isinf(p))
    for (double& a : acc) a = std::pow(a, 1.0 / p);
  return acc;
}

} // namespace detail

/// ||f||_{L^q_p([s,t])} over the box: trapezoid in space, then trapezoid of
/// the q-th power in time; vector fields take the max over components.
/// Nodes landing on a declared singular point are shifted by half a cell.
inline MixedNormResult mixed_norm_report(const VectorField& f, double p, double q, double s, double t,
                                         const NormGrid& grid = {},
                                         std::span<const std::vector<double>> singular = {},
                                         std::size_t workers = 1) {
  require(p >= 1.0 && q >= 1.0, "mixed_norm: exponents must be >= 1");
  require(grid.half_width > 0.0, "mixed_norm: box half-width must be positive");
  require(grid.points_per_axis >= 8, "mixed_norm: need at least 8 points per axis");
  require(s <= t, "mixed_norm: empty time window");
  MixedNormResult result;
  if (t == s) return result;
  const std::size_t m = f.out_dim;
  if (!f.time_dependent) {
    auto norms = detail::slice_norms(f, s, p, grid, singular, result.nudged_nodes);
    const double factor = std::isinf(q) ? 1.0 : std::pow(t - s, 1.0 / q);
    for (double v : norms) result.value = std::max(result.value, v * factor);
    return result;
  }
  const std::size_t T = std::max<std::size_t>(grid.time_points, 2);
  std::vector<std::vector<double>> per_slice(T);
  std::vector<std::size_t> nudges(T, 0);
  parallel_for(T, workers, [&](std::size_t k) {
    const double r = s + (t - s) * static_cast<double>(k) / static_cast<double>(T - 1);
    per_slice[k] = detail::slice_norms(f, r, p, grid, singular, nudges[k]);
  });
  result.nudged_nodes = nudges[0];
  const double dt = (t - s) / static_cast<double>(T - 1);
  for (std::size_t c = 0; c < m; ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < T; ++k) {
      const double v = per_slice[k][c];
      if (std::isinf(q)) acc = std::max(acc, v);
      else acc += ((k == 0 || k == T - 1) ? 0.5 : 1.0) * dt * std::pow(v, q);
    }
    result.value = std::max(result.value, std::isinf(q) ? acc : std::pow(acc, 1.0 / q));
  }
  return result;
}

inline double mixed_norm(const VectorField& f, double p, double q, double s, double t, const NormGrid& grid = {},
                         std::span<const std::vector<double>> singular = {}, std::size_t workers = 1) {
  return mixed_norm_report(f, p, q, s, t, grid, singular, workers).value;
}

// ---------------------------------------------------------------------------
// Bessel potential norms (p = 2, periodic box)
// ---------------------------------------------------------------------------

struct BesselNormResult {
  double value = 0.0;
  /// Share of spectral energy in modes above half the Nyquist frequency.
  double top_mode_fraction = 0.0;
  bool aliasing_warning = false;
};

/// ||(1 - Laplacian)^{-nu/2} f||_{L_2} for samples of f on a periodic grid
/// (row-major, `shape` nodes per axis, `box_lengths` periods per axis).
inline BesselNormResult bessel_norm(std::span<const double> samples, const std::vector<std::size_t>& shape,
                                    const std::vector<double>& box_lengths, double nu, double p = 2.0) {
  if (p != 2.0) throw UnsupportedError("bessel_norm: only p = 2 is implemented (exact spectral path)");
  require(nu >= 0.0, "bessel_norm: order must be nonnegative");
  require(!shape.empty() && shape.size() == box_lengths.size(), "bessel_norm: shape/box mismatch");
  std::size_t total = 1;
  double cell = 1.0;
  std::vector<int> dims;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    total *= shape[i];
    cell *= box_lengths[i] / static_cast<double>(shape[i]);
    dims.push_back(static_cast<int>(shape[i]));
  }
  require(samples.size() == total, "bessel_norm: sample count does not match shape");
  std::vector<std::complex<double>> data(samples.begin(), samples.end());
  data = fft(std::move(data), dims, -1);

  double weighted = 0.0, energy = 0.0, top = 0.0;
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    double xi2 = 0.0;
    bool is_top = false;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      const long f = signed_frequency(idx[i], shape[i]);
      const double xi = 2.0 * std::numbers::pi * static_cast<double>(f) / box_lengths[i];
      xi2 += xi * xi;
      if (std::labs(f) > static_cast<long>(shape[i] / 4)) is_top = true;
    }
    const double e = std::norm(data[k]);
    energy += e;
    if (is_top) top += e;
    weighted += e * std::pow(1.0 + xi2, -nu);
    for (std::size_t i = shape.size(); i-- > 0;) {
      if (++idx[i] < shape[i]) break;
      idx[i] = 0;
    }
  }
  BesselNormResult r;
  r.value = std::sqrt(cell * weighted / static_cast<double>(total));
  r.top_mode_fraction = energy > 0.0 ? top / energy : 0.0;
  r.aliasing_warning = r.top_mode_fraction > 1e-3;
  return r;
}

/// Samples component `component` of f(t, .) on the periodic grid
/// x_k = -L + k * 2L/N and returns its L_{-nu,2} norm.
inline BesselNormResult bessel_norm(const VectorField& f, double t, double nu, double half_width, std::size_t nodes,
                                    std::size_t component = 0) {
  const std::size_t d = f.in_dim;
  require(d >= 1 && d <= 3, "bessel_norm: dimension must be 1, 2 or 3");
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= nodes;
  const double h = 2.0 * half_width / static_cast<double>(nodes);
  std::vector<double> samples(total);
  std::vector<double> x(d), y(f.out_dim);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t k = 0; k < total; ++k) {
    for (std::size_t i = 0; i < d; ++i) x[i] = -half_width + h * static_cast<double>(idx[i]);
    f.eval(t, x, y);
    samples[k] = y[component];
    for (std::size_t i = d; i-- > 0;) {
      if (++idx[i] < nodes) break;
      idx[i] = 0;
    }
  }
  return bessel_norm(samples, std::vector<std::size_t>(d, nodes), std::vector<double>(d, 2.0 * half_width), nu);
}

/// ||f||_{L^q_{-nu,2}([s,t])}: Bessel norm per time slice (max over
/// components), then trapezoid of the q-th power in time.
inline double bessel_mixed_norm(const VectorField& f, double nu, double q, double s, double t, double half_width,
                                std::size_t nodes, std::size_t time_points = 33) {
  auto slice = [&](double r) {
    double m = 0.0;
    for (std::size_t c = 0; c < f.out_dim; ++c) m = std::max(m, bessel_norm(f, r, nu, half_width, nodes, c).value);
    return m;
  };
  if (t <= s) return 0.0;
  if (!f.time_dependent) {
    const double v = slice(s);
    return std::isinf(q) ? v : v * std::pow(t - s, 1.0 / q);
  }
  const std::size_t T = std::max<std::size_t>(time_points, 2);
  const double dt = (t - s) / static_cast<double>(T - 1);
  double acc = 0.0;
  for (std::size_t k = 0; k < T; ++k) {
    const double v = slice(s + dt * static_cast<double>(k));
    if (std::isinf(q)) acc = std::max(acc, v);
    else acc += ((k == 0 || k == T - 1) ? 0.5 : 1.0) * dt * std::pow(v, q);
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

// ---------------------------------------------------------------------------
// Ellipticity and Hoelder regularity of sigma sigma^*
// ---------------------------------------------------------------------------

struct ConditionAReport {
  double min_eig = std::numeric_limits<double>::infinity();
  double max_eig = 0.0;
  double worst_holder_ratio = 0.0;
  double k1_estimate = 1.0;
  std::size_t samples = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Samples (t, x, y) and reports the empirical spectrum of sigma sigma^*
/// and the worst ratio |a(t,x) - a(t,y)| / |x - y|^alpha (Hilbert-Schmidt
/// norm), flagging any breach of the declared K1, K2.
inline ConditionAReport condition_A_check(const DiffusionField& sigma, std::size_t samples, std::uint64_t seed,
                                          double half_width = 8.0) {
  using Mat = Eigen::MatrixXd;
  const std::size_t d = sigma.dim;
  ConditionAReport report;
  report.samples = samples;
  CounterStream rng(seed, StreamTag::verifier, 2);
  std::vector<double> x(d), y(d), sx(d * d), sy(d * d);
  auto diffusion_matrix = [&](double t, std::span<const double> pt, std::vector<double>& buf) {
    sigma.eval(t, pt, buf);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(
        buf.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    return Mat(s * s.transpose());
  };
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = rng.uniform();
    for (std::size_t i = 0; i < d; ++i) x[i] = rng.uniform(-half_width, half_width);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 0.0));
    double dist2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      y[i] = x[i] + scale * rng.uniform(-1.0, 1.0);
      dist2 += (x[i] - y[i]) * (x[i] - y[i]);
    }
    const Mat ax = diffusion_matrix(t, x, sx);
    const Mat ay = diffusion_matrix(t, y, sy);
    Eigen::SelfAdjointEigenSolver<Mat> eig(ax, Eigen::EigenvaluesOnly);
    report.min_eig = std::min(report.min_eig, eig.eigenvalues().minCoeff());
    report.max_eig = std::max(report.max_eig, eig.eigenvalues().maxCoeff());
    if (dist2 > 0.0) {
      const double ratio = (ax - ay).norm() / std::pow(std::sqrt(dist2), sigma.alpha);
      report.worst_holder_ratio = std::max(report.worst_holder_ratio, ratio);
    }
  }
  if (samples == 0) return report;
  report.k1_estimate = std::max(report.max_eig, report.min_eig > 0.0 ? 1.0 / report.min_eig
                                                                      : std::numeric_limits<double>::infinity());
  std::ostringstream msg;
  if (report.max_eig > sigma.K1 * (1.0 + 1e-12) || report.min_eig < (1.0 / sigma.K1) * (1.0 - 1e-12)) {
    msg << "ellipticity: spectrum [" << report.min_eig << ", " << report.max_eig << "] not within [1/K1, K1] for K1 = "
        << sigma.K1;
    report.violations.push_back(msg.str());
  }
  if (report.worst_holder_ratio > sigma.K2 * (1.0 + 1e-9) + 1e-15) {
    std::ostringstream h;
    h << "hoelder: ratio " << report.worst_holder_ratio << " exceeds K2 = " << sigma.K2 << " (alpha = " << sigma.alpha
      << ")";
    report.violations.push_back(h.str());
  }
  return report;
}

} // namespace tamed
