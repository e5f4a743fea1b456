#pragma once

// Strong-error tables, power-law fits and a plain multilevel estimator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/brownian.hpp"
#include "tamed/error.hpp"
#include "tamed/parallel.hpp"
#include "tamed/random.hpp"
#include "tamed/scheme.hpp"

namespace tamed {

struct RateFit {
  double A = 0.0;
  double beta = 0.0;
  double beta_stderr = 0.0;
  double r2 = 0.0;
  /// RMS residual of log(eps / log n) = c - log(n)/2.
  double constrained_residual = 0.0;
  std::size_t used = 0;
  std::vector<std::size_t> dropped;
  std::vector<std::string> warnings;
};

/// Weighted least squares of log eps on log n, eps ~ A n^{-beta}. Levels with
/// eps <= 0 are dropped with a warning; needs >= 3 remaining levels.
inline RateFit fit_rate(std::span<const double> levels, std::span<const double> errors,
                        std::span<const double> weights = {}) {
  require(levels.size() == errors.size(), "fit_rate: levels and errors differ in length");
  require(weights.empty() || weights.size() == levels.size(), "fit_rate: weights length mismatch");
  RateFit fit;
  std::vector<double> lx, ly, w;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    require(levels[k] > 1.0, "fit_rate: levels must exceed 1");
    if (!(errors[k] > 0.0) || !std::isfinite(errors[k])) {
      fit.dropped.push_back(k);
      std::ostringstream msg;
      msg << "dropped level n = " << levels[k] << " with error " << errors[k];
      fit.warnings.push_back(msg.str());
      continue;
    }
    lx.push_back(std::log(levels[k]));
    ly.push_back(std::log(errors[k]));
    w.push_back(weights.empty() ? 1.0 : weights[k]);
  }
  fit.used = lx.size();
  if (fit.used < 3) throw DomainError("fit_rate: fewer than 3 levels with positive error");
  for (std::size_t k = 1; k < lx.size(); ++k)
    require(lx[k] > lx[k - 1], "fit_rate: levels must be strictly increasing");

  double sw = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    require(w[k] > 0.0, "fit_rate: weights must be positive");
    sw += w[k];
    mx += w[k] * lx[k];
    my += w[k] * ly[k];
  }
  mx /= sw;
  my /= sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += w[k] * (lx[k] - mx) * (lx[k] - mx);
    sxy += w[k] * (lx[k] - mx) * (ly[k] - my);
    syy += w[k] * (ly[k] - my) * (ly[k] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double r = ly[k] - intercept - slope * lx[k];
    sse += w[k] * r * r;
  }
  fit.beta = -slope;
  fit.A = std::exp(intercept);
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  const double dof = static_cast<double>(lx.size()) - 2.0;
  fit.beta_stderr = std::sqrt(std::max(0.0, sse / dof / sxx));

  // Slope fixed at -1/2 for eps / log n.
  double c = 0.0;
  std::vector<double> z(lx.size());
  for (std::size_t k = 0; k < lx.size(); ++k) {
    z[k] = ly[k] - std::log(lx[k]) + 0.5 * lx[k];
    c += w[k] * z[k];
  }
  c /= sw;
  double rss = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) rss += w[k] * (z[k] - c) * (z[k] - c);
  fit.constrained_residual = std::sqrt(rss / sw);
  return fit;
}

struct ErrorLevel {
  std::size_t n = 0;
  double error = 0.0;
  double stderr_ = 0.0;
};

struct RateReport {
  std::vector<ErrorLevel> levels;
  std::optional<RateFit> fit;
  std::optional<double> theoretical_exponent;
  bool theoretical_log_factor = false;
  std::size_t n_ref = 0;
  std::string reference;
  double p_bar = 2.0;
  std::size_t paths = 0;
  /// FNV-1a digest of every per-path distance, as hex.
  std::string digest;
  std::vector<std::string> warnings;
};

/// Exact solution on the grid of `brownian`, given x0.
using ExactSolution = std::function<PathResult(const BrownianPath&, std::span<const double>)>;

struct MonteCarloSetup {
  std::size_t paths = 1000;
  double p_bar = 2.0;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
  std::size_t batches = 10;
};

namespace detail {

/// (mean of v^p)^{1/p} with a batch-means delta-method standard error.
inline std::pair<double, double> lp_norm_with_stderr(std::span<const double> values, double p, std::size_t batches) {
  std::vector<double> pw(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) pw[k] = std::pow(values[k], p);
  const double m = pairwise_mean(pw);
  const double norm = std::pow(m, 1.0 / p);
  if (m <= 0.0 || batches < 2 || values.size() < batches) return {norm, 0.0};
  std::vector<double> bm(batches);
  const std::size_t per = values.size() / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * per;
    const std::size_t hi = b + 1 == batches ? values.size() : lo + per;
    bm[b] = pairwise_mean(std::span<const double>(pw).subspan(lo, hi - lo));
  }
  const double bmean = pairwise_mean(bm);
  double var = 0.0;
  for (double v : bm) var += (v - bmean) * (v - bmean);
  var /= static_cast<double>(batches - 1);
  const double se_m = std::sqrt(var / static_cast<double>(batches));
  return {norm, se_m * std::pow(m, 1.0 / p - 1.0) / p};
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string digest_doubles(std::span<const double> v) {
  return hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double))));
}

} // namespace detail

/// Monte Carlo estimate of || sup_t |X^n - X^ref| ||_{L_pbar(Omega)} per level.
/// With `exact` set, the reference is the exact solution on the n_ref grid;
/// otherwise it is the scheme at n_ref driven by the same path.
inline RateReport strong_error(const SchemeConfig& cfg, DriftFamily drifts, std::vector<std::size_t> n_list,
                               std::size_t n_ref, const MonteCarloSetup& mc,
                               const ExactSolution& exact = nullptr) {
  require(!n_list.empty(), "strong_error: empty level list");
  require(mc.paths >= 100, "strong_error: at least 100 paths required");
  require(mc.p_bar >= 1.0, "strong_error: p_bar must be >= 1");
  std::sort(n_list.begin(), n_list.end());
  require(std::adjacent_find(n_list.begin(), n_list.end()) == n_list.end(), "strong_error: duplicate levels");
  for (auto n : n_list)
    if (n == 0 || n_ref % n != 0)
      throw DomainError("strong_error: level " + std::to_string(n) + " does not divide n_ref = " + std::to_string(n_ref));

  std::vector<std::size_t> all = n_list;
  if (!exact) all.push_back(n_ref);
  drifts.prepare(all);

  const std::size_t L = n_list.size();
  const std::size_t M = mc.paths;
  std::vector<double> dist(M * L);
  parallel_for(M, mc.workers, [&](std::size_t path) {
    const auto w = BrownianPath::generate(cfg.d, n_ref, mc.master_seed, path);
    const auto x0 = cfg.x0.sample(mc.master_seed, path);
    std::size_t current = 0;
    try {
      PathResult ref;
      if (exact) {
        current = n_ref;
        ref = exact(w, x0);
      } else {
        current = n_ref;
        SchemeConfig c = cfg;
        c.n = n_ref;
        c.output_n = 0;
        c.drift = drifts.at(n_ref);
        ref = simulate_tamed_em(c, w, x0);
      }
      for (std::size_t l = 0; l < L; ++l) {
        current = n_list[l];
        SchemeConfig c = cfg;
        c.n = n_list[l];
        c.output_n = 0;
        c.drift = drifts.at(n_list[l]);
        const auto x = simulate_tamed_em(c, w.aggregate(n_list[l]), x0);
        dist[path * L + l] = sup_distance(x, ref);
      }
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << e.what() << " [seed " << mc.master_seed << ", path " << path << ", level " << current << "]";
      throw NumericalError(msg.str());
    }
  });

  RateReport rep;
  rep.n_ref = n_ref;
  rep.reference = exact ? "exact" : "self";
  rep.p_bar = mc.p_bar;
  rep.paths = M;
  rep.digest = detail::digest_doubles(dist);
  std::vector<double> col(M);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t k = 0; k < M; ++k) col[k] = dist[k * L + l];
    const auto [e, se] = detail::lp_norm_with_stderr(col, mc.p_bar, mc.batches);
    rep.levels.push_back({n_list[l], e, se});
  }
  std::vector<double> ns, es;
  for (const auto& lv : rep.levels) {
    ns.push_back(static_cast<double>(lv.n));
    es.push_back(lv.error);
  }
  std::size_t positive = 0;
  for (double e : es) positive += e > 0.0;
  if (positive >= 3) {
    rep.fit = fit_rate(ns, es);
    rep.warnings = rep.fit->warnings;
  } else {
    rep.warnings.push_back("fewer than 3 levels with positive error; no fit");
  }
  if (!exact && n_ref < 16 * n_list.back())
    rep.warnings.push_back("n_ref below 16 x the finest level; reference bias may dominate");
  return rep;
}

/// True when each error exceeds its predecessor by at most k pooled standard errors.
inline bool monotone_within(std::span<const ErrorLevel> levels, double k = 2.0) {
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const double pooled = std::sqrt(levels[i].stderr_ * levels[i].stderr_ + levels[i - 1].stderr_ * levels[i - 1].stderr_);
    if (levels[i].error > levels[i - 1].error + k * pooled) return false;
  }
  return true;
}

struct MlmcLevel {
  std::size_t n = 0;
  std::size_t paths = 0;
  double mean = 0.0;
  double variance = 0.0;
  double cost = 0.0;
};

struct MlmcResult {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::vector<MlmcLevel> levels;
  /// Log-log slope of V_l against n_l over levels l >= 1 with V_l > 0.
  std::optional<double> variance_slope;
  double total_cost = 0.0;
  std::string digest;
};

struct MlmcSetup {
  std::size_t n0 = 4;
  std::size_t levels = 5;  // l = 0..levels-1
  std::vector<std::size_t> paths_per_level;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
};

/// Telescoping estimator of E g(X_1) over n_l = n0 2^l. Level l >= 1 couples
/// the n_l and n_{l-1} schemes on one path from an independent stream.
inline MlmcResult mlmc_estimate(const SchemeConfig& cfg, DriftFamily drifts,
                                const std::function<double(std::span<const double>)>& payoff,
                                const MlmcSetup& setup) {
  require(setup.n0 >= 1 && setup.levels >= 1, "mlmc_estimate: need n0 >= 1 and at least one level");
  require(setup.paths_per_level.size() == setup.levels, "mlmc_estimate: one path count per level required");
  std::vector<std::size_t> ns(setup.levels);
  for (std::size_t l = 0; l < setup.levels; ++l) ns[l] = setup.n0 << l;
  drifts.prepare(ns);

  MlmcResult res;
  std::vector<double> all;
  for (std::size_t l = 0; l < setup.levels; ++l) {
    const std::size_t M = setup.paths_per_level[l];
    require(M >= 2, "mlmc_estimate: at least 2 paths per level");
    std::vector<double> y(M);
    parallel_for(M, setup.workers, [&](std::size_t path) {
      const auto w = BrownianPath::generate(cfg.d, ns[l], setup.master_seed, path, StreamTag::mlmc_level, l);
      const auto x0 = cfg.x0.sample(derive_key(setup.master_seed, StreamTag::mlmc_level, l)[0], path);
      try {
        SchemeConfig c = cfg;
        c.output_n = 0;
        c.n = ns[l];
        c.drift = drifts.at(ns[l]);
        const double fine = payoff(simulate_tamed_em(c, w, x0).final_value());
        double coarse = 0.0;
        if (l > 0) {
          c.n = ns[l - 1];
          c.drift = drifts.at(ns[l - 1]);
          coarse = payoff(simulate_tamed_em(c, w.aggregate(ns[l - 1]), x0).final_value());
        }
        y[path] = fine - coarse;
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << e.what() << " [seed " << setup.master_seed << ", path " << path << ", level " << ns[l] << "]";
        throw NumericalError(msg.str());
      }
    });
    const double mean = pairwise_mean(y);
    std::vector<double> sq(M);
    for (std::size_t k = 0; k < M; ++k) sq[k] = (y[k] - mean) * (y[k] - mean);
    const double var = pairwise_sum(sq) / static_cast<double>(M - 1);
    const double cost = static_cast<double>(M) * static_cast<double>(ns[l] + (l > 0 ? ns[l - 1] : 0));
    res.levels.push_back({ns[l], M, mean, var, cost});
    res.estimate += mean;
    res.stderr_ += var / static_cast<double>(M);
    res.total_cost += cost;
    all.insert(all.end(), y.begin(), y.end());
  }
  res.stderr_ = std::sqrt(res.stderr_);
  res.digest = detail::digest_doubles(all);

  std::vector<double> lx, ly;
  for (std::size_t l = 1; l < res.levels.size(); ++l) {
    if (res.levels[l].variance > 0.0) {
      lx.push_back(std::log(static_cast<double>(res.levels[l].n)));
      ly.push_back(std::log(res.levels[l].variance));
    }
  }
  if (lx.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      mx += lx[k];
      my += ly[k];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxx += (lx[k] - mx) * (lx[k] - mx);
      sxy += (lx[k] - mx) * (ly[k] - my);
    }
    res.variance_slope = sxy / sxx;
  }
  return res;
}

} // namespace tamed
