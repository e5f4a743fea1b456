#pragma once

// Stochastic transport equation du + b . grad u dt + grad u o dW = 0 by
// time-reversed tamed characteristics: u^n(tau, x) = rho(X^{tau,n}_tau(x)), where
//
//   X_{s+1/n} = X_s - b^{tau,n}(s, X_s) / n + (W^tau_{s+1/n} - W^tau_s),
//   b^{tau,n}(r, x) = b^n(tau - r, x),  W^tau_r = W_tau - W_{tau-r}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/brownian.hpp"
#include "tamed/error.hpp"
#include "tamed/fields.hpp"
#include "tamed/grid.hpp"
#include "tamed/parallel.hpp"
#include "tamed/rates.hpp"
#include "tamed/taming.hpp"

namespace tamed {

/// r -> b^n(tau - r, .) on [0, tau], zero for r > tau.
inline VectorField reverse_drift(const VectorField& bn, double tau) {
  require(tau > 0.0 && tau <= 1.0, "reverse_drift: tau must lie in (0, 1]");
  VectorField out{bn.in_dim, bn.out_dim, nullptr, true};
  out.eval = [bn, tau](double r, std::span<const double> x, std::span<double> y) {
    if (r > tau + kGridTolerance) {
      std::fill(y.begin(), y.end(), 0.0);
      return;
    }
    bn.eval(std::max(0.0, tau - r), x, y);
  };
  return out;
}

inline VectorField reverse_drift(const DriftField& b, const TamingStrategy& strategy, double tau, std::size_t n,
                                 const MollificationOptions& opt = {}) {
  return reverse_drift(tame(b, strategy, n, opt).field(), tau);
}

/// Grid index of tau on the n-grid; throws DomainError when tau is off-grid.
inline std::size_t tau_index(double tau, std::size_t n) {
  require(tau > 0.0 && tau <= 1.0 + kGridTolerance, "tau must lie in (0, 1]");
  if (!on_grid(tau, n)) {
    std::ostringstream msg;
    msg << "tau = " << tau << " is not a point of the 1/" << n << " grid";
    throw DomainError(msg.str());
  }
  return static_cast<std::size_t>(cell_index(tau, n));
}

/// W^tau on the grid of W: the first K = tau * steps increments are those of
/// W on [0, tau] in reverse order; the rest come from an independent stream.
inline BrownianPath reversed_brownian(const BrownianPath& W, double tau) {
  const std::size_t n = W.steps();
  const std::size_t d = W.dim();
  const std::size_t K = tau_index(tau, n);
  std::vector<double> inc(n * d);
  for (std::size_t j = 0; j < K; ++j)
    for (std::size_t i = 0; i < d; ++i) inc[j * d + i] = W.increments()[(K - 1 - j) * d + i];
  if (K < n) {
    const auto key = derive_key(W.master_seed(), StreamTag::reversed_extension, K);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t j = K; j < n; ++j)
      for (std::size_t i = 0; i < d; ++i)
        inc[j * d + i] =
            scale * counter_normal(key, W.path_index(), static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i));
  }
  return BrownianPath::from_increments(d, std::move(inc), W.master_seed(), W.path_index());
}

struct TransportProblem {
  std::size_t d = 1;
  DriftField b;
  /// No value: the drift is used untamed (Lipschitz benchmarks).
  std::optional<TamingStrategy> taming;
  MollificationOptions mollification{};
  std::function<double(std::span<const double>)> rho;
  std::function<void(std::span<const double>, std::span<double>)> grad_rho;
  std::vector<double> taus;
  std::vector<std::vector<double>> points;
};

struct TransportSamples {
  std::size_t n = 0;
  std::size_t paths = 0;
  std::vector<double> taus;
  std::vector<std::vector<double>> points;
  /// values[(path * taus + tau) * points + point]
  std::vector<double> values;

  double value(std::size_t path, std::size_t tau, std::size_t point) const {
    return values[(path * taus.size() + tau) * points.size() + point];
  }
};

namespace detail {

inline void check_transport_problem(const TransportProblem& pb) {
  require(pb.d >= 1 && pb.b.dim() == pb.d, "transport: drift dimension mismatch");
  require(static_cast<bool>(pb.rho), "transport: initial datum not set");
  require(!pb.taus.empty() && !pb.points.empty(), "transport: empty evaluation set");
  for (const auto& x : pb.points) require(x.size() == pb.d, "transport: evaluation point dimension mismatch");
}

template <typename PerPath>
TransportSamples run_transport(const TransportProblem& pb, std::size_t n, std::size_t paths, std::size_t workers,
                               PerPath&& per_path) {
  TransportSamples out;
  out.n = n;
  out.paths = paths;
  out.taus = pb.taus;
  out.points = pb.points;
  out.values.resize(paths * pb.taus.size() * pb.points.size());
  parallel_for(paths, workers, [&](std::size_t path) {
    per_path(path, std::span<double>(out.values.data() + path * pb.taus.size() * pb.points.size(),
                                     pb.taus.size() * pb.points.size()));
  });
  return out;
}

} // namespace detail

/// M realizations of u^n(tau, x) over the problem's evaluation set. W is
/// generated at resolution n_fine (a multiple of n, default n).
inline TransportSamples solve_transport(const TransportProblem& pb, std::size_t n, std::size_t paths,
                                        std::uint64_t master_seed, std::size_t n_fine = 0, std::size_t workers = 1) {
  detail::check_transport_problem(pb);
  require(n >= 1 && paths >= 1, "solve_transport: need n >= 1 and at least one path");
  if (n_fine == 0) n_fine = n;
  require(n_fine % n == 0, "solve_transport: n_fine must be a multiple of n");
  for (double tau : pb.taus) tau_index(tau, n);

  const VectorField bn = pb.taming ? tame(pb.b, *pb.taming, n, pb.mollification).field() : pb.b.field;
  std::vector<VectorField> reversed;
  for (double tau : pb.taus) reversed.push_back(reverse_drift(bn, tau));
  const std::size_t d = pb.d;
  const double h = 1.0 / static_cast<double>(n);

  return detail::run_transport(pb, n, paths, workers, [&](std::size_t path, std::span<double> slot) {
    const auto W = BrownianPath::generate(d, n_fine, master_seed, path);
    std::vector<double> x(d), b(d);
    for (std::size_t ti = 0; ti < pb.taus.size(); ++ti) {
      const auto Wt = reversed_brownian(W, pb.taus[ti]).aggregate(n);
      const std::size_t K = tau_index(pb.taus[ti], n);
      for (std::size_t xi = 0; xi < pb.points.size(); ++xi) {
        x = pb.points[xi];
        for (std::size_t j = 0; j < K; ++j) {
          reversed[ti].eval(static_cast<double>(j) * h, x, b);
          const auto dW = Wt.increment(j);
          for (std::size_t i = 0; i < d; ++i) x[i] += -b[i] * h + dW[i];
        }
        for (double v : x)
          if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "solve_transport: non-finite characteristic [seed " << master_seed << ", path " << path
                << ", tau " << pb.taus[ti] << ", n " << n << "]";
            throw NumericalError(msg.str());
          }
        slot[ti * pb.points.size() + xi] = pb.rho(x);
      }
    }
  });
}

/// Exact characteristics for b(x) = -kappa x: X_tau = e^{kappa tau} x +
/// sum_k e^{kappa (tau - s_k)} dW^tau_k over the n_fine cells (midpoints s_k).
inline TransportSamples linear_transport_oracle(const TransportProblem& pb, double kappa, std::size_t paths,
                                                std::uint64_t master_seed, std::size_t n_fine,
                                                std::size_t workers = 1) {
  detail::check_transport_problem(pb);
  const std::size_t d = pb.d;
  const double hf = 1.0 / static_cast<double>(n_fine);
  return detail::run_transport(pb, n_fine, paths, workers, [&](std::size_t path, std::span<double> slot) {
    const auto W = BrownianPath::generate(d, n_fine, master_seed, path);
    std::vector<double> noise(d), x(d);
    for (std::size_t ti = 0; ti < pb.taus.size(); ++ti) {
      const double tau = pb.taus[ti];
      const auto Wt = reversed_brownian(W, tau);
      const std::size_t K = tau_index(tau, n_fine);
      std::fill(noise.begin(), noise.end(), 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const double w = std::exp(kappa * (tau - (static_cast<double>(k) + 0.5) * hf));
        const auto dW = Wt.increment(k);
        for (std::size_t i = 0; i < d; ++i) noise[i] += w * dW[i];
      }
      for (std::size_t xi = 0; xi < pb.points.size(); ++xi) {
        for (std::size_t i = 0; i < d; ++i) x[i] = std::exp(kappa * tau) * pb.points[xi][i] + noise[i];
        slot[ti * pb.points.size() + xi] = pb.rho(x);
      }
    }
  });
}

struct TransportErrorRow {
  double tau = 0.0;
  std::vector<double> x;
  double weighted_error = 0.0;
  double stderr_ = 0.0;
};

struct TransportErrorTable {
  std::vector<TransportErrorRow> rows;
  double max_weighted_error = 0.0;
  std::vector<std::string> warnings;
};

/// tau^{d/(2 rbar)} || u^n(tau, x) - u(tau, x) ||_{L_l(Omega)} per (tau, x).
/// `p` is the drift's spatial exponent, used only to validate l and rbar.
inline TransportErrorTable weighted_transport_error(const TransportSamples& un, const TransportSamples& oracle,
                                                    double rbar, double l, double p, std::size_t batches = 10) {
  require(un.paths == oracle.paths && un.taus == oracle.taus && un.points.size() == oracle.points.size(),
          "weighted_transport_error: sample sets do not match");
  require(rbar > 0.0 && l >= 1.0, "weighted_transport_error: need rbar > 0 and l >= 1");
  const double d = un.points.empty() ? 1.0 : static_cast<double>(un.points.front().size());
  TransportErrorTable table;
  const double l_cap = std::min(p, 2.0 * p / d);
  if (!(l > 1.0 && l < l_cap)) {
    std::ostringstream msg;
    msg << "l = " << l << " outside (1, " << l_cap << ")";
    table.warnings.push_back(msg.str());
  }
  if (!(1.0 / rbar < 1.0 / l - std::max(1.0, d / 2.0) / p)) {
    std::ostringstream msg;
    msg << "rbar = " << rbar << " violates 1/rbar < 1/l - (1/p) max(1, d/2)";
    table.warnings.push_back(msg.str());
  }
  std::vector<double> diff(un.paths);
  for (std::size_t ti = 0; ti < un.taus.size(); ++ti) {
    const double weight = std::pow(un.taus[ti], d / (2.0 * rbar));
    for (std::size_t xi = 0; xi < un.points.size(); ++xi) {
      for (std::size_t k = 0; k < un.paths; ++k) diff[k] = std::fabs(un.value(k, ti, xi) - oracle.value(k, ti, xi));
      const auto [e, se] = detail::lp_norm_with_stderr(diff, l, batches);
      TransportErrorRow row{un.taus[ti], un.points[xi], weight * e, weight * se};
      table.max_weighted_error = std::max(table.max_weighted_error, row.weighted_error);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

} // namespace tamed
