#pragma once

// Empirical check of the exponential-moment bound
//
//   E exp(lambda int_S^T beta) <= 2^{1 + (2 lambda)^{1/gamma} w(S,T)}
//
// and of the moment form || int_S^T beta ||_{L_m} <= (m!)^{1/m} rho(S,T).

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tamed/brownian.hpp"
#include "tamed/controls.hpp"
#include "tamed/error.hpp"
#include "tamed/parallel.hpp"
#include "tamed/rates.hpp"
#include "tamed/scheme.hpp"

namespace tamed {

/// int_0^1 beta(r, X_r) dr by the left-point rule on the path grid.
using PathFunctional = std::function<double(const PathResult&)>;

inline PathFunctional integral_functional(std::function<double(double, std::span<const double>)> beta) {
  return [beta = std::move(beta)](const PathResult& path) {
    const double h = 1.0 / static_cast<double>(path.n);
    double acc = 0.0;
    for (std::size_t j = 0; j < path.n; ++j) acc += beta(static_cast<double>(j) * h, path.at(j)) * h;
    return acc;
  };
}

struct KhasminskiiReport {
  double empirical_mean = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;
  /// Largest lambda * int beta over the samples.
  double max_exponent = 0.0;
  bool overflow = false;
  bool pass = false;
  std::size_t paths = 0;
};

inline double khasminskii_bound(double lambda, double gamma, double w_total) {
  return std::pow(2.0, 1.0 + std::pow(2.0 * lambda, 1.0 / gamma) * w_total);
}

/// Check on precomputed samples of int_S^T beta.
inline KhasminskiiReport khasminskii_check(std::span<const double> integrals, double lambda, double gamma,
                                           const ControlFn& w, double S = 0.0, double T = 1.0) {
  require(!integrals.empty(), "khasminskii_check: no samples");
  require(lambda >= 0.0 && gamma > 0.0, "khasminskii_check: need lambda >= 0 and gamma > 0");
  KhasminskiiReport r;
  r.paths = integrals.size();
  r.bound = khasminskii_bound(lambda, gamma, w(S, T));
  std::vector<double> e(integrals.size());
  for (std::size_t k = 0; k < integrals.size(); ++k) {
    require(integrals[k] >= 0.0, "khasminskii_check: beta must be nonnegative");
    const double x = lambda * integrals[k];
    r.max_exponent = std::max(r.max_exponent, x);
    e[k] = std::exp(x);
    if (!std::isfinite(e[k])) r.overflow = true;
  }
  if (r.overflow) return r;
  r.empirical_mean = pairwise_mean(e);
  if (e.size() > 1) {
    std::vector<double> sq(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) sq[k] = (e[k] - r.empirical_mean) * (e[k] - r.empirical_mean);
    r.stderr_ = std::sqrt(pairwise_sum(sq) / static_cast<double>(e.size() - 1) / static_cast<double>(e.size()));
  }
  r.pass = r.empirical_mean <= r.bound + 3.0 * r.stderr_;
  return r;
}

/// Simulates M >= 1000 paths of cfg and checks the functional.
inline KhasminskiiReport khasminskii_check(const SchemeConfig& cfg, const PathFunctional& beta, double lambda,
                                           double gamma, const ControlFn& w, const MonteCarloSetup& mc) {
  require(mc.paths >= 1000, "khasminskii_check: at least 1000 paths required");
  std::vector<double> vals(mc.paths);
  parallel_for(mc.paths, mc.workers, [&](std::size_t k) {
    const auto path = simulate_tamed_em(cfg, BrownianPath::generate(cfg.d, cfg.n, mc.master_seed, k));
    vals[k] = beta(path);
  });
  return khasminskii_check(vals, lambda, gamma, w);
}

struct MomentCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs * (1.0 + 1e-12); }
};

/// || int beta ||_{L_m} (Monte Carlo) against (m!)^{1/m} rho.
inline MomentCheck khasminskii_moment_check(std::span<const double> integrals, unsigned m, double rho) {
  require(m >= 1 && !integrals.empty(), "khasminskii_moment_check: need m >= 1 and samples");
  std::vector<double> pw(integrals.size());
  for (std::size_t k = 0; k < integrals.size(); ++k) pw[k] = std::pow(integrals[k], static_cast<double>(m));
  MomentCheck c;
  c.lhs = std::pow(pairwise_mean(pw), 1.0 / static_cast<double>(m));
  c.rhs = std::pow(std::tgamma(static_cast<double>(m) + 1.0), 1.0 / static_cast<double>(m)) * rho;
  return c;
}

} // namespace tamed
