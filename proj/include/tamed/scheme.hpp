#pragma once

// Tamed Euler-Maruyama integrator
//
//   X_{j+1} = X_j + [int_{t_j}^{t_{j+1}} b^n(r, X_j) dr]_m + sigma(t_j, X_j) dB_j
//
// with [.]_m the m-node trapezoid rule in r (m = 1: left point), plus level
// coupling through shared Brownian paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/brownian.hpp"
#include "tamed/error.hpp"
#include "tamed/fields.hpp"
#include "tamed/random.hpp"
#include "tamed/taming.hpp"

namespace tamed {

struct InitialCondition {
  enum class Kind { point, gaussian_ball };

  Kind kind = Kind::point;
  std::vector<double> center{0.0};
  /// Standard deviation per axis for the Gaussian ball.
  double radius = 0.0;

  static InitialCondition point(std::vector<double> x) { return {Kind::point, std::move(x), 0.0}; }
  static InitialCondition gaussian_ball(std::vector<double> c, double r) {
    require(r >= 0.0, "InitialCondition: radius must be nonnegative");
    return {Kind::gaussian_ball, std::move(c), r};
  }

  std::size_t dim() const { return center.size(); }

  /// Realization for path `path_index`, drawn from its own stream.
  std::vector<double> sample(std::uint64_t master_seed, std::uint64_t path_index) const {
    std::vector<double> x = center;
    if (kind == Kind::gaussian_ball && radius > 0.0) {
      const auto key = derive_key(master_seed, StreamTag::initial_condition);
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] += radius * counter_normal(key, path_index, 0, static_cast<std::uint32_t>(i));
    }
    return x;
  }
};

struct SchemeConfig {
  std::size_t d = 1;
  std::size_t n = 1;
  InitialCondition x0;
  VectorField drift;
  DiffusionField diffusion;
  /// Trapezoid nodes per cell for the drift time integral.
  std::size_t m = 1;
  /// Optional finer output grid (multiple of n); 0 disables.
  std::size_t output_n = 0;
};

struct PathResult {
  std::size_t d = 1;
  std::size_t n = 0;
  /// (n+1) x d, row-major, at t_j = j/n.
  std::vector<double> values;
  std::size_t output_n = 0;
  /// (output_n+1) x d frozen-coefficient interpolation, when requested.
  std::vector<double> fine_values;

  std::span<const double> at(std::size_t j) const { return {values.data() + j * d, d}; }
  std::span<const double> final_value() const { return at(n); }
};

namespace detail {

inline void check_scheme_config(const SchemeConfig& cfg) {
  require(cfg.n >= 1, "scheme: n must be positive");
  require(cfg.m >= 1, "scheme: m must be at least 1");
  require(cfg.x0.dim() == cfg.d, "scheme: x0 dimension mismatch");
  require(cfg.drift.eval != nullptr, "scheme: drift not set");
  require(cfg.drift.in_dim == cfg.d && cfg.drift.out_dim == cfg.d, "scheme: drift dimension mismatch");
  require(cfg.diffusion.eval != nullptr && cfg.diffusion.dim == cfg.d, "scheme: diffusion dimension mismatch");
  require(cfg.output_n == 0 || cfg.output_n % cfg.n == 0, "scheme: output_n must be a multiple of n");
}

} // namespace detail

/// Runs the scheme along `brownian` with the initial value `x0`.
inline PathResult simulate_tamed_em(const SchemeConfig& cfg, const BrownianPath& brownian,
                                    std::span<const double> x0) {
  detail::check_scheme_config(cfg);
  require(brownian.dim() == cfg.d, "simulate_tamed_em: Brownian dimension mismatch");
  require(brownian.steps() % cfg.n == 0, "simulate_tamed_em: Brownian resolution must be a multiple of n");
  require(x0.size() == cfg.d, "simulate_tamed_em: x0 dimension mismatch");
  const std::size_t d = cfg.d;
  const std::size_t n = cfg.n;
  const std::size_t ratio = brownian.steps() / n;
  const double h = 1.0 / static_cast<double>(n);

  std::size_t out_ratio = 0;
  if (cfg.output_n > 0) {
    require(brownian.steps() % cfg.output_n == 0, "simulate_tamed_em: Brownian resolution must be a multiple of output_n");
    out_ratio = cfg.output_n / n;
  }

  PathResult res;
  res.d = d;
  res.n = n;
  res.values.resize((n + 1) * d);
  std::copy(x0.begin(), x0.end(), res.values.begin());
  if (out_ratio) {
    res.output_n = cfg.output_n;
    res.fine_values.resize((cfg.output_n + 1) * d);
    std::copy(x0.begin(), x0.end(), res.fine_values.begin());
  }

  std::vector<double> x(x0.begin(), x0.end()), drift_int(d), b(d), sigma(d * d), dB(d), db_part(d);
  const std::size_t fine_per_out = out_ratio ? brownian.steps() / cfg.output_n : 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) * h;
    if (cfg.m == 1) {
      cfg.drift.eval(t, x, b);
      for (std::size_t i = 0; i < d; ++i) drift_int[i] = b[i] * h;
    } else {
      std::fill(drift_int.begin(), drift_int.end(), 0.0);
      const double dr = h / static_cast<double>(cfg.m - 1);
      for (std::size_t k = 0; k < cfg.m; ++k) {
        cfg.drift.eval(t + static_cast<double>(k) * dr, x, b);
        const double w = (k == 0 || k + 1 == cfg.m) ? 0.5 * dr : dr;
        for (std::size_t i = 0; i < d; ++i) drift_int[i] += w * b[i];
      }
    }
    cfg.diffusion.eval(t, x, sigma);

    if (out_ratio) {
      // Frozen-coefficient dynamics inside the cell.
      std::fill(db_part.begin(), db_part.end(), 0.0);
      for (std::size_t k = 1; k <= out_ratio; ++k) {
        for (std::size_t f = 0; f < fine_per_out; ++f) {
          const auto inc = brownian.increment(j * ratio + (k - 1) * fine_per_out + f);
          for (std::size_t i = 0; i < d; ++i) db_part[i] += inc[i];
        }
        const double frac = static_cast<double>(k) / static_cast<double>(out_ratio);
        double* row = res.fine_values.data() + (j * out_ratio + k) * d;
        for (std::size_t i = 0; i < d; ++i) {
          double v = x[i] + frac * drift_int[i];
          for (std::size_t l = 0; l < d; ++l) v += sigma[i * d + l] * db_part[l];
          row[i] = v;
        }
      }
    }

    std::fill(dB.begin(), dB.end(), 0.0);
    for (std::size_t f = 0; f < ratio; ++f) {
      const auto inc = brownian.increment(j * ratio + f);
      for (std::size_t i = 0; i < d; ++i) dB[i] += inc[i];
    }
    bool finite = true;
    for (std::size_t i = 0; i < d; ++i) {
      double v = x[i] + drift_int[i];
      for (std::size_t l = 0; l < d; ++l) v += sigma[i * d + l] * dB[l];
      res.values[(j + 1) * d + i] = v;
      finite = finite && std::isfinite(v);
    }
    if (!finite) {
      std::ostringstream msg;
      msg << "simulate_tamed_em: non-finite state at step " << j + 1 << " (t = " << static_cast<double>(j + 1) * h
          << ", n = " << n << ")";
      throw NumericalError(msg.str());
    }
    std::copy(res.values.begin() + static_cast<std::ptrdiff_t>((j + 1) * d),
              res.values.begin() + static_cast<std::ptrdiff_t>((j + 2) * d), x.begin());
  }
  if (out_ratio) {
    // Grid points of the fine output coincide with the scheme values.
    for (std::size_t j = 0; j <= n; ++j)
      std::copy(res.values.begin() + static_cast<std::ptrdiff_t>(j * d),
                res.values.begin() + static_cast<std::ptrdiff_t>((j + 1) * d),
                res.fine_values.begin() + static_cast<std::ptrdiff_t>(j * out_ratio * d));
  }
  return res;
}

/// Runs the scheme with x0 sampled for the path's (seed, index).
inline PathResult simulate_tamed_em(const SchemeConfig& cfg, const BrownianPath& brownian) {
  const auto x0 = cfg.x0.sample(brownian.master_seed(), brownian.path_index());
  return simulate_tamed_em(cfg, brownian, x0);
}

/// Drift used at each step count: either one fixed field or b^n built per
/// level. Levels must be prepared before concurrent use.
class DriftFamily {
public:
  DriftFamily() = default;
  explicit DriftFamily(VectorField fixed) : fixed_(std::move(fixed)) {}
  explicit DriftFamily(std::function<VectorField(std::size_t)> make) : make_(std::move(make)) {}

  static DriftFamily tamed(const DriftField& b, const TamingStrategy& s, const MollificationOptions& opt = {}) {
    return DriftFamily([b, s, opt](std::size_t n) { return tame(b, s, n, opt).field(); });
  }

  void prepare(std::span<const std::size_t> levels) {
    if (!make_) return;
    for (auto n : levels)
      if (!cache_.contains(n)) cache_.emplace(n, make_(n));
  }

  const VectorField& at(std::size_t n) const {
    if (!make_) return fixed_;
    auto it = cache_.find(n);
    if (it == cache_.end()) throw DomainError("DriftFamily: level " + std::to_string(n) + " not prepared");
    return it->second;
  }

private:
  VectorField fixed_;
  std::function<VectorField(std::size_t)> make_;
  std::map<std::size_t, VectorField> cache_;
};

/// Runs every level in n_list and n_ref on the same Brownian path (given at
/// resolution n_ref) and the same x0. Returns level -> path; n_ref included.
inline std::map<std::size_t, PathResult> simulate_coupled(const SchemeConfig& cfg, const DriftFamily& drifts,
                                                          std::span<const std::size_t> n_list, std::size_t n_ref,
                                                          const BrownianPath& brownian) {
  require(brownian.steps() == n_ref, "simulate_coupled: Brownian path must be at the reference resolution");
  for (auto n : n_list) {
    if (n == 0 || n_ref % n != 0) {
      std::ostringstream msg;
      msg << "simulate_coupled: level " << n << " does not divide n_ref = " << n_ref;
      throw DomainError(msg.str());
    }
  }
  const auto x0 = cfg.x0.sample(brownian.master_seed(), brownian.path_index());
  std::map<std::size_t, PathResult> out;
  auto run = [&](std::size_t n) {
    SchemeConfig c = cfg;
    c.n = n;
    c.output_n = 0;
    c.drift = drifts.at(n);
    out.emplace(n, simulate_tamed_em(c, n == n_ref ? brownian : brownian.aggregate(n), x0));
  };
  run(n_ref);
  for (auto n : n_list)
    if (!out.contains(n)) run(n);
  return out;
}

/// Max Euclidean distance over the coarser of the two grids.
inline double sup_distance(const PathResult& a, const PathResult& b) {
  require(a.d == b.d, "sup_distance: dimension mismatch");
  const PathResult& coarse = a.n <= b.n ? a : b;
  const PathResult& fine = a.n <= b.n ? b : a;
  require(coarse.n >= 1 && fine.n % coarse.n == 0, "sup_distance: grids have no common refinement structure");
  const std::size_t ratio = fine.n / coarse.n;
  double best = 0.0;
  for (std::size_t j = 0; j <= coarse.n; ++j) {
    const auto u = coarse.at(j);
    const auto v = fine.at(j * ratio);
    double s = 0.0;
    for (std::size_t i = 0; i < a.d; ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

} // namespace tamed
