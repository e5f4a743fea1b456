#pragma once

// Backward PDE of the Zvonkin transform, for d <= 2:
//
//   dU/dt + 1/2 (sigma sigma^*)_{ij} d_ij U + b^n . grad U = lambda U - b^n,  U(1, .) = 0,
//
// solved componentwise on [-L, L]^d with homogeneous Dirichlet data.
// Diffusion is implicit (tridiagonal solves, one sweep per axis), drift
// (upwind), damping and forcing are explicit.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tamed/error.hpp"
#include "tamed/fields.hpp"

namespace tamed {

struct ZvonkinGrid {
  double half_width = 8.0;
  /// Spatial intervals per axis (nodes = intervals + 1).
  std::size_t intervals = 200;
  std::size_t time_steps = 200;
  /// Upper bound on stored doubles (U and grad U over time levels).
  std::size_t max_stored = 20'000'000;
};

class ZvonkinSolution {
public:
  double lambda = 1.0;
  std::size_t d = 1;
  std::size_t nodes = 0;
  std::size_t time_steps = 0;
  double half_width = 8.0;
  double h = 0.0;
  double dt = 0.0;
  /// Largest |b| dt / h seen.
  double cfl = 0.0;
  /// Stored time levels, ascending (t = 1 included).
  std::vector<double> times;
  /// Per stored level: nodes^d x d values of U.
  std::vector<std::vector<double>> U;
  /// Per stored level: nodes^d x d x d, entry (i, k) = d_k U_i.
  std::vector<std::vector<double>> gradU;
  /// sup over all time steps and nodes with |x|_inf <= L/2 of |grad U|_F.
  double sup_gradU = 0.0;

  double coordinate(std::size_t k) const { return -half_width + h * static_cast<double>(k); }

  bool inside(std::span<const double> x) const {
    for (double v : x)
      if (!(std::fabs(v) <= half_width)) return false;
    return true;
  }

  /// Value of component `comp` at the node nearest to x, nearest stored time level.
  double U_at(double t, std::span<const double> x, std::size_t comp = 0) const {
    std::vector<double> out(1);
    interpolate(U[level(t)], d, comp, 1, x, out);
    return out[0];
  }

  /// Multilinear interpolation of grad U at (t, x) into out (d x d, row-major).
  /// Returns false (and zeros) when x is outside the box.
  bool gradU_at(double t, std::span<const double> x, std::span<double> out) const {
    if (!inside(x)) {
      std::fill(out.begin(), out.end(), 0.0);
      return false;
    }
    interpolate(gradU[level(t)], d * d, 0, d * d, x, out);
    return true;
  }

private:
  std::size_t level(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end()) return times.size() - 1;
    if (it == times.begin()) return 0;
    const auto hi = static_cast<std::size_t>(it - times.begin());
    return (t - times[hi - 1] <= times[hi] - t) ? hi - 1 : hi;
  }

  void interpolate(const std::vector<double>& data, std::size_t stride, std::size_t first, std::size_t count,
                   std::span<const double> x, std::span<double> out) const {
    std::array<std::size_t, 2> base{};
    std::array<double, 2> frac{};
    for (std::size_t i = 0; i < d; ++i) {
      const double u = std::clamp((x[i] + half_width) / h, 0.0, static_cast<double>(nodes - 1));
      base[i] = std::min(static_cast<std::size_t>(u), nodes - 2);
      frac[i] = u - static_cast<double>(base[i]);
    }
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(count), 0.0);
    const std::size_t corners = std::size_t{1} << d;
    for (std::size_t c = 0; c < corners; ++c) {
      double w = 1.0;
      std::size_t node = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const std::size_t bit = (c >> i) & 1U;
        w *= bit ? frac[i] : 1.0 - frac[i];
        node = node * nodes + base[i] + bit;
      }
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < count; ++k) out[k] += w * data[node * stride + first + k];
    }
  }
};

namespace detail {

/// Solves (1 + 2 r_k) v_k - r_k v_{k-1} - r_k v_{k+1} = rhs_k on interior
/// nodes of a line with zero end values. `r` and `rhs` have the line length.
inline void dirichlet_line_solve(std::span<const double> r, std::span<double> v, std::vector<double>& c_prime) {
  const std::size_t N = v.size();
  if (N < 3) return;
  c_prime.assign(N, 0.0);
  v[0] = 0.0;
  v[N - 1] = 0.0;
  // Thomas algorithm over k = 1..N-2 (v[0] = v[N-1] = 0 enter as zeros).
  double prev_c = 0.0, prev_d = 0.0;
  for (std::size_t k = 1; k + 1 < N; ++k) {
    const double a = -r[k], b = 1.0 + 2.0 * r[k], c = -r[k];
    const double denom = b - a * prev_c;
    const double ck = (k + 2 < N) ? c / denom : 0.0;
    const double dk = (v[k] - a * prev_d) / denom;
    c_prime[k] = ck;
    v[k] = dk;
    prev_c = ck;
    prev_d = dk;
  }
  for (std::size_t k = N - 2; k-- > 1;) v[k] -= c_prime[k] * v[k + 1];
}

} // namespace detail

/// Solves the backward PDE with damping lambda. Throws NumericalError on
/// instability (CFL above 1, non-finite values or growth above 10x per step).
inline ZvonkinSolution solve_backward_pde(const VectorField& bn, const DiffusionField& sigma, double lambda,
                                          const ZvonkinGrid& grid = {}) {
  const std::size_t d = bn.in_dim;
  require(d >= 1 && d <= 2, "solve_backward_pde: only d <= 2 is supported");
  require(bn.out_dim == d && sigma.dim == d, "solve_backward_pde: dimension mismatch");
  require(lambda > 0.0, "solve_backward_pde: lambda must be positive");
  require(grid.intervals >= 4 && grid.time_steps >= 1 && grid.half_width > 0.0, "solve_backward_pde: bad grid");

  ZvonkinSolution sol;
  sol.lambda = lambda;
  sol.d = d;
  sol.nodes = grid.intervals + 1;
  sol.time_steps = grid.time_steps;
  sol.half_width = grid.half_width;
  sol.h = 2.0 * grid.half_width / static_cast<double>(grid.intervals);
  sol.dt = 1.0 / static_cast<double>(grid.time_steps);
  const std::size_t N = sol.nodes;
  const std::size_t total = d == 1 ? N : N * N;
  const double h = sol.h, dt = sol.dt;

  const std::size_t per_level = total * d * (1 + d);
  const std::size_t levels_wanted = grid.time_steps + 1;
  const std::size_t stride =
      std::max<std::size_t>(1, (levels_wanted * per_level + grid.max_stored - 1) / std::max<std::size_t>(grid.max_stored, 1));

  std::vector<double> coords(N);
  for (std::size_t k = 0; k < N; ++k) coords[k] = sol.coordinate(k);
  auto node_x = [&](std::size_t node, std::span<double> x) {
    if (d == 1) x[0] = coords[node];
    else {
      x[0] = coords[node / N];
      x[1] = coords[node % N];
    }
  };
  const std::array<std::size_t, 2> axis_stride = d == 1 ? std::array<std::size_t, 2>{1, 0}
                                                        : std::array<std::size_t, 2>{N, 1};
  auto boundary = [&](std::size_t node) {
    if (d == 1) return node == 0 || node == N - 1;
    const std::size_t i = node / N, j = node % N;
    return i == 0 || j == 0 || i == N - 1 || j == N - 1;
  };

  std::vector<double> U(total * d, 0.0), next(total * d), bvals(total * d), avals(total * d * d);
  auto sample_coefficients = [&](double t) {
    std::vector<double> x(d), sig(d * d);
    double bmax = 0.0;
    for (std::size_t node = 0; node < total; ++node) {
      node_x(node, x);
      bn.eval(t, x, std::span<double>(bvals.data() + node * d, d));
      double b2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double v = bvals[node * d + i];
        if (!std::isfinite(v)) throw NumericalError("solve_backward_pde: non-finite drift sample");
        b2 += v * v;
      }
      bmax = std::max(bmax, std::sqrt(b2));
      sigma.eval(t, x, sig);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) {
          double a = 0.0;
          for (std::size_t l = 0; l < d; ++l) a += sig[i * d + l] * sig[k * d + l];
          avals[node * d * d + i * d + k] = a;
        }
    }
    return bmax;
  };

  auto gradient = [&](const std::vector<double>& u, std::vector<double>& g) {
    g.assign(total * d * d, 0.0);
    for (std::size_t node = 0; node < total; ++node) {
      for (std::size_t ax = 0; ax < d; ++ax) {
        const std::size_t s = axis_stride[ax];
        const std::size_t pos = d == 1 ? node : (ax == 0 ? node / N : node % N);
        for (std::size_t c = 0; c < d; ++c) {
          double v;
          if (pos == 0) v = (u[(node + s) * d + c] - u[node * d + c]) / h;
          else if (pos == N - 1) v = (u[node * d + c] - u[(node - s) * d + c]) / h;
          else v = (u[(node + s) * d + c] - u[(node - s) * d + c]) / (2.0 * h);
          g[node * d * d + c * d + ax] = v;
        }
      }
    }
  };
  auto interior_sup = [&](const std::vector<double>& g) {
    double best = 0.0;
    std::vector<double> x(d);
    for (std::size_t node = 0; node < total; ++node) {
      node_x(node, x);
      bool interior = true;
      for (double v : x) interior = interior && std::fabs(v) <= 0.5 * sol.half_width + 1e-12;
      if (!interior) continue;
      double f2 = 0.0;
      for (std::size_t k = 0; k < d * d; ++k) f2 += g[node * d * d + k] * g[node * d * d + k];
      best = std::max(best, std::sqrt(f2));
    }
    return best;
  };

  std::vector<double> g;
  std::vector<std::pair<double, std::vector<double>>> stored_U, stored_g;
  auto store = [&](double t, const std::vector<double>& u) {
    gradient(u, g);
    stored_U.emplace_back(t, u);
    stored_g.emplace_back(t, g);
  };
  store(1.0, U);

  const bool frozen = !bn.time_dependent && !sigma.time_dependent;
  double bmax = 0.0;
  if (frozen) bmax = sample_coefficients(0.0);

  std::vector<double> line, rline, cprime;
  double prev_max = 0.0;
  for (std::size_t k = 0; k < grid.time_steps; ++k) {
    const double t = 1.0 - static_cast<double>(k) * dt;
    if (!frozen) bmax = sample_coefficients(t);
    sol.cfl = std::max(sol.cfl, bmax * dt / h);
    if (bmax * dt / h > 1.0) {
      std::ostringstream msg;
      msg << "solve_backward_pde: explicit drift unstable (|b| dt / h = " << bmax * dt / h
          << " > 1); use a finer time grid";
      throw NumericalError(msg.str());
    }
    // Explicit part.
    for (std::size_t node = 0; node < total; ++node) {
      for (std::size_t c = 0; c < d; ++c) {
        if (boundary(node)) {
          next[node * d + c] = 0.0;
          continue;
        }
        const double u = U[node * d + c];
        double rhs = -lambda * u + bvals[node * d + c];
        for (std::size_t ax = 0; ax < d; ++ax) {
          const std::size_t s = axis_stride[ax];
          const double b = bvals[node * d + ax];
          const double du = b > 0.0 ? (U[(node + s) * d + c] - u) / h : (u - U[(node - s) * d + c]) / h;
          rhs += b * du;
        }
        if (d == 2) {
          const double a01 = avals[node * 4 + 1];
          if (a01 != 0.0) {
            const double cross = (U[(node + N + 1) * d + c] - U[(node + N - 1) * d + c] - U[(node - N + 1) * d + c] +
                                  U[(node - N - 1) * d + c]) /
                                 (4.0 * h * h);
            rhs += a01 * cross;
          }
        }
        next[node * d + c] = u + dt * rhs;
      }
    }
    // Implicit diffusion, one sweep per axis.
    if (!frozen) sample_coefficients(t - dt);
    for (std::size_t ax = 0; ax < d; ++ax) {
      const std::size_t s = axis_stride[ax];
      const std::size_t lines = d == 1 ? 1 : N;
      line.resize(N);
      rline.resize(N);
      for (std::size_t ln = 0; ln < lines; ++ln) {
        const std::size_t start = d == 1 ? 0 : (ax == 0 ? ln : ln * N);
        if (d == 2 && (ln == 0 || ln == N - 1)) continue;  // boundary line stays 0
        for (std::size_t c = 0; c < d; ++c) {
          for (std::size_t k2 = 0; k2 < N; ++k2) {
            const std::size_t node = start + k2 * s;
            line[k2] = next[node * d + c];
            rline[k2] = 0.5 * dt * avals[node * d * d + ax * d + ax] / (h * h);
          }
          detail::dirichlet_line_solve(rline, line, cprime);
          for (std::size_t k2 = 0; k2 < N; ++k2) next[(start + k2 * s) * d + c] = line[k2];
        }
      }
    }
    double cur_max = 0.0;
    for (double v : next) {
      if (!std::isfinite(v)) throw NumericalError("solve_backward_pde: non-finite value; use a finer time grid");
      cur_max = std::max(cur_max, std::fabs(v));
    }
    const double scale = std::max(prev_max, dt * bmax);
    if (cur_max > 10.0 * scale) {
      std::ostringstream msg;
      msg << "solve_backward_pde: growth factor " << cur_max / scale << " > 10 at t = " << t - dt
          << "; use a finer time grid";
      throw NumericalError(msg.str());
    }
    prev_max = cur_max;
    U.swap(next);
    gradient(U, g);
    sol.sup_gradU = std::max(sol.sup_gradU, interior_sup(g));
    if ((k + 1) % stride == 0 || k + 1 == grid.time_steps) {
      stored_U.emplace_back(t - dt, U);
      stored_g.emplace_back(t - dt, g);
    }
  }
  stored_U.back().first = 0.0;
  stored_g.back().first = 0.0;
  for (std::size_t k = stored_U.size(); k-- > 0;) {
    sol.times.push_back(stored_U[k].first);
    sol.U.push_back(std::move(stored_U[k].second));
    sol.gradU.push_back(std::move(stored_g[k].second));
  }
  return sol;
}

/// Smallest lambda in `ladder` with sup_gradU <= target; the last one when none qualifies.
inline ZvonkinSolution solve_with_default_lambda(const VectorField& bn, const DiffusionField& sigma,
                                                 const ZvonkinGrid& grid = {},
                                                 std::span<const double> ladder = std::array<double, 4>{1, 4, 16, 64},
                                                 double target = 0.5) {
  require(!ladder.empty(), "solve_with_default_lambda: empty ladder");
  std::optional<ZvonkinSolution> last;
  for (double lambda : ladder) {
    last = solve_backward_pde(bn, sigma, lambda, grid);
    if (last->sup_gradU <= target) break;
  }
  return std::move(*last);
}

} // namespace tamed
