#pragma once

// Drift-approximation error functional
//
//   varpi_n(pbar) = || sup_t | int_0^t (I + grad U)(b - b^n)(r, X_r) dr | ||_{L_pbar(Omega)}
//
// estimated on reference paths, and norm-based proxies for its bounds.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/controls.hpp"
#include "tamed/error.hpp"
#include "tamed/fields.hpp"
#include "tamed/parallel.hpp"
#include "tamed/rates.hpp"
#include "tamed/scheme.hpp"
#include "tamed/zvonkin.hpp"

namespace tamed {

enum class VarpiMode { with_gradU, gradU_zero_proxy };

inline const char* to_string(VarpiMode m) { return m == VarpiMode::with_gradU ? "with-gradU" : "gradU-zero-proxy"; }

struct VarpiEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  VarpiMode mode = VarpiMode::gradU_zero_proxy;
  std::size_t paths = 0;
  /// Paths that left the PDE box at least once (grad U taken as 0 there).
  std::size_t paths_left_box = 0;
};

/// Left-point partial sums of (I + grad U)(b - b^n) along one path; returns the
/// running sup of their norm. `left_box` is set when grad U was unavailable.
inline double varpi_path_functional(const VectorField& b, const VectorField& bn, const ZvonkinSolution* zv,
                                    const PathResult& path, bool& left_box) {
  const std::size_t d = path.d;
  const double h = 1.0 / static_cast<double>(path.n);
  std::vector<double> S(d, 0.0), u(d), v(d), diff(d), g(d * d);
  double best = 0.0;
  left_box = false;
  for (std::size_t j = 0; j < path.n; ++j) {
    const double t = static_cast<double>(j) * h;
    const auto x = path.at(j);
    b.eval(t, x, u);
    bn.eval(t, x, v);
    for (std::size_t i = 0; i < d; ++i) diff[i] = u[i] - v[i];
    if (zv && !zv->gradU_at(t, x, g)) left_box = true;
    for (std::size_t i = 0; i < d; ++i) {
      double w = diff[i];
      if (zv)
        for (std::size_t k = 0; k < d; ++k) w += g[i * d + k] * diff[k];
      S[i] += w * h;
    }
    double n2 = 0.0;
    for (double s : S) n2 += s * s;
    best = std::max(best, std::sqrt(n2));
  }
  return best;
}

/// varpi_n on given reference paths; zv == nullptr uses grad U = 0.
inline VarpiEstimate estimate_varpi(const VectorField& b, const VectorField& bn, const ZvonkinSolution* zv,
                                    std::span<const PathResult> paths, double p_bar = 2.0, std::size_t workers = 1,
                                    std::size_t batches = 10) {
  require(!paths.empty(), "estimate_varpi: no reference paths");
  require(p_bar >= 1.0, "estimate_varpi: p_bar must be >= 1");
  std::vector<double> sup(paths.size());
  std::vector<char> left(paths.size(), 0);
  parallel_for(paths.size(), workers, [&](std::size_t k) {
    bool l = false;
    sup[k] = varpi_path_functional(b, bn, zv, paths[k], l);
    left[k] = l;
  });
  VarpiEstimate est;
  est.mode = zv ? VarpiMode::with_gradU : VarpiMode::gradU_zero_proxy;
  est.paths = paths.size();
  for (char c : left) est.paths_left_box += c ? 1 : 0;
  const auto [v, se] = detail::lp_norm_with_stderr(sup, p_bar, batches);
  est.value = v;
  est.stderr_ = se;
  return est;
}

/// Simulates reference paths at n_ref (with cfg.drift) and estimates varpi_n.
inline VarpiEstimate estimate_varpi(const SchemeConfig& cfg, const VectorField& b, const VectorField& bn,
                                    const ZvonkinSolution* zv, std::size_t n_ref, const MonteCarloSetup& mc) {
  std::vector<double> sup(mc.paths);
  std::vector<char> left(mc.paths, 0);
  parallel_for(mc.paths, mc.workers, [&](std::size_t k) {
    SchemeConfig c = cfg;
    c.n = n_ref;
    c.output_n = 0;
    const auto w = BrownianPath::generate(cfg.d, n_ref, mc.master_seed, k);
    const auto path = simulate_tamed_em(c, w);
    bool l = false;
    sup[k] = varpi_path_functional(b, bn, zv, path, l);
    left[k] = l;
  });
  VarpiEstimate est;
  est.mode = zv ? VarpiMode::with_gradU : VarpiMode::gradU_zero_proxy;
  est.paths = mc.paths;
  for (char c : left) est.paths_left_box += c ? 1 : 0;
  const auto [v, se] = detail::lp_norm_with_stderr(sup, mc.p_bar, mc.batches);
  est.value = v;
  est.stderr_ = se;
  return est;
}

enum class VarpiBoundMode { i, ii, iii };

struct VarpiBoundParams {
  // mode i
  double p1 = 2.0;
  double q1 = std::numeric_limits<double>::infinity();
  NormGrid grid{};
  // mode ii
  double nu = 0.5;
  double bessel_half_width = 8.0;
  std::size_t bessel_nodes = 512;
  // modes ii and iii: time exponent (defaults to the drift's q)
  std::optional<double> q;
  // mode iii
  double Gamma = 1.0;
  std::optional<ControlFn> w0;
};

struct VarpiBound {
  double value = 0.0;
  VarpiBoundMode mode = VarpiBoundMode::i;
  std::string note = "up to an unknown constant";
};

/// Norm expression bounding varpi_n with the constant set to 1:
///  (i)   ||b - b^n||_{L^{q1}_{p1}}, needs d/p1 + 2/q1 < 2;
///  (ii)  ||b - b^n||_{L^q_{-nu,2}}, needs p = 2, nu in [0,1), nu < 3/2 - d/(2p) - 2/q;
///  (iii) Gamma (1 + |log Gamma|) w0(0,1)^{1/q}, needs d/p + 4/q < 1.
inline VarpiBound varpi_bound_from_norms(const DriftField& b, const VectorField& bn, VarpiBoundMode mode,
                                         const VarpiBoundParams& prm = {}) {
  const double d = static_cast<double>(b.dim());
  const double q = prm.q.value_or(b.q);
  VarpiBound out;
  out.mode = mode;
  std::ostringstream why;
  switch (mode) {
  case VarpiBoundMode::i: {
    if (!(d / prm.p1 + 2.0 / prm.q1 < 2.0)) {
      why << "varpi_bound_from_norms (i): d/p1 + 2/q1 = " << d / prm.p1 + 2.0 / prm.q1 << " violates d/p1 + 2/q1 < 2";
      throw DomainError(why.str());
    }
    out.value = mixed_norm(difference(b.field, bn), prm.p1, prm.q1, 0.0, 1.0, prm.grid, b.singular_points);
    return out;
  }
  case VarpiBoundMode::ii: {
    if (b.p != 2.0) throw UnsupportedError("varpi_bound_from_norms (ii): only the p = 2 Bessel surrogate is implemented");
    const double cap = 1.5 - d / (2.0 * b.p) - 2.0 / q;
    if (!(prm.nu >= 0.0 && prm.nu < 1.0) || !(prm.nu < cap)) {
      why << "varpi_bound_from_norms (ii): nu = " << prm.nu << " violates nu in [0,1) and nu < 3/2 - d/(2p) - 2/q = "
          << cap;
      throw DomainError(why.str());
    }
    out.value = bessel_mixed_norm(difference(b.field, bn), prm.nu, q, 0.0, 1.0, prm.bessel_half_width, prm.bessel_nodes);
    return out;
  }
  case VarpiBoundMode::iii: {
    if (!(d / b.p + 4.0 / q < 1.0)) {
      why << "varpi_bound_from_norms (iii): d/p + 4/q = " << d / b.p + 4.0 / q << " violates d/p + 4/q < 1";
      throw DomainError(why.str());
    }
    require(prm.Gamma >= 0.0, "varpi_bound_from_norms (iii): Gamma must be nonnegative");
    require(prm.w0.has_value(), "varpi_bound_from_norms (iii): control w0 required");
    require(std::isfinite(q), "varpi_bound_from_norms (iii): q must be finite");
    const double G = prm.Gamma;
    const double factor = G == 0.0 ? 0.0 : G * (1.0 + std::fabs(std::log(G)));
    out.value = factor * std::pow((*prm.w0)(0.0, 1.0), 1.0 / q);
    return out;
  }
  }
  return out;
}

} // namespace tamed
