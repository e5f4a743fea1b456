#pragma once

// Brownian paths at a fixed finest resolution. Increment j, component i of
// path k is a function of (master_seed, k, j, i) only, so any subset of paths
// can be regenerated in any order on any worker.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tamed/error.hpp"
#include "tamed/random.hpp"

namespace tamed {

class BrownianPath {
public:
  BrownianPath() = default;

  /// Fresh path with n_fine steps on [0,1]; increments have variance 1/n_fine.
  static BrownianPath generate(std::size_t d, std::size_t n_fine, std::uint64_t master_seed, std::uint64_t path_index,
                               StreamTag tag = StreamTag::brownian, std::uint64_t sub = 0) {
    require(d >= 1 && n_fine >= 1, "BrownianPath: dimension and resolution must be positive");
    require(n_fine <= 0xffffffffULL, "BrownianPath: resolution exceeds the counter range");
    BrownianPath w;
    w.d_ = d;
    w.n_ = n_fine;
    w.seed_ = master_seed;
    w.path_ = path_index;
    w.increments_.resize(n_fine * d);
    const auto key = derive_key(master_seed, tag, sub);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_fine));
    for (std::size_t j = 0; j < n_fine; ++j)
      for (std::size_t i = 0; i < d; ++i)
        w.increments_[j * d + i] =
            scale * counter_normal(key, path_index, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i));
    return w;
  }

  /// Path from given increments (row-major steps x d).
  static BrownianPath from_increments(std::size_t d, std::vector<double> increments, std::uint64_t master_seed = 0,
                                      std::uint64_t path_index = 0) {
    require(d >= 1 && !increments.empty() && increments.size() % d == 0, "BrownianPath: bad increment array");
    BrownianPath w;
    w.d_ = d;
    w.n_ = increments.size() / d;
    w.seed_ = master_seed;
    w.path_ = path_index;
    w.increments_ = std::move(increments);
    return w;
  }

  std::size_t dim() const { return d_; }
  std::size_t steps() const { return n_; }
  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t path_index() const { return path_; }
  const std::vector<double>& increments() const { return increments_; }

  std::span<const double> increment(std::size_t j) const { return {increments_.data() + j * d_, d_}; }

  /// Path on the coarser grid n_coarse | steps(); each coarse increment is the
  /// in-order sum of its fine increments.
  BrownianPath aggregate(std::size_t n_coarse) const {
    require(n_coarse >= 1 && n_ % n_coarse == 0, "BrownianPath::aggregate: coarse resolution must divide the fine one");
    const std::size_t ratio = n_ / n_coarse;
    BrownianPath w;
    w.d_ = d_;
    w.n_ = n_coarse;
    w.seed_ = seed_;
    w.path_ = path_;
    w.increments_.assign(n_coarse * d_, 0.0);
    for (std::size_t J = 0; J < n_coarse; ++J)
      for (std::size_t k = 0; k < ratio; ++k)
        for (std::size_t i = 0; i < d_; ++i) w.increments_[J * d_ + i] += increments_[(J * ratio + k) * d_ + i];
    return w;
  }

  /// W at grid times j/steps(), (steps()+1) x d row-major; W_0 = 0.
  std::vector<double> cumulative() const {
    std::vector<double> out((n_ + 1) * d_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < d_; ++i) out[(j + 1) * d_ + i] = out[j * d_ + i] + increments_[j * d_ + i];
    return out;
  }

  /// Sum of squared increments, componentwise total.
  double quadratic_variation(std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1)) const {
    last = std::min(last, n_);
    double qv = 0.0;
    for (std::size_t j = first; j < last; ++j)
      for (std::size_t i = 0; i < d_; ++i) qv += increments_[j * d_ + i] * increments_[j * d_ + i];
    return qv;
  }

private:
  std::size_t d_ = 0;
  std::size_t n_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t path_ = 0;
  std::vector<double> increments_;
};

} // namespace tamed
