#pragma once

// Counter-based random numbers.
//
// Every Gaussian used by the library is a pure function of
// (master seed, stream tag, path index, step, component), so results never
// depend on generation order or on how paths are spread over workers.
// The block cipher is Philox4x32-10; uniforms are mapped to normals with
// Wichura's AS241 (PPND16) inverse normal CDF, accurate to about 1e-16.

#include <array>
#include <cmath>
#include <cstdint>

namespace tamed {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint64_t kMul0 = 0xD2511F53u;
  constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kMul0 * ctr[0];
    const std::uint64_t p1 = kMul1 * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent random streams derived from one master seed.
enum class StreamTag : std::uint64_t {
  brownian = 1,
  initial_condition = 2,
  reversed_extension = 3,
  verifier = 4,
  mlmc_level = 5,
};

/// Key for stream `tag` (and an optional sub-stream, e.g. an MLMC level).
inline Philox4x32Key derive_key(std::uint64_t master_seed, StreamTag tag, std::uint64_t sub = 0) {
  const std::uint64_t k =
      splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(tag) * 0x632BE59BD9B4E019ull + sub));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

/// Uniform in the open interval (0, 1) from 52 random bits; the extreme
/// values are 2^-53 and 1 - 2^-53.
inline double bits_to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Inverse of the standard normal CDF (Wichura 1988, algorithm AS241).
inline double inverse_normal_cdf(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

/// Uniform (0,1) draw addressed by (path, step, component).
inline double counter_uniform(const Philox4x32Key& key, std::uint64_t path, std::uint32_t step,
                              std::uint32_t component) {
  const auto out = philox4x32_10(
      {step, component, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)}, key);
  return bits_to_open_unit(out[0], out[1]);
}

inline double counter_normal(const Philox4x32Key& key, std::uint64_t path, std::uint32_t step,
                             std::uint32_t component) {
  return inverse_normal_cdf(counter_uniform(key, path, step, component));
}

/// Sequential view of a counter-based stream, for samplers in verifiers.
class CounterStream {
public:
  CounterStream(std::uint64_t master_seed, StreamTag tag, std::uint64_t stream = 0)
      : key_(derive_key(master_seed, tag)), stream_(stream) {}

  double uniform() {
    const std::uint64_t c = counter_++;
    return counter_uniform(key_, stream_, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32));
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return inverse_normal_cdf(uniform()); }
  /// Integer in [lo, hi].
  std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {
    const auto span = hi - lo + 1;
    auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(span));
    return lo + (k >= span ? span - 1 : k);
  }

private:
  Philox4x32Key key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

} // namespace tamed
