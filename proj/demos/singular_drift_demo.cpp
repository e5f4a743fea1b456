// Strong error of the tamed scheme for a drift with an integrable
// singularity at the origin, one table per taming strategy.
//
//   b(x) = sign(x) |x|^{-0.4} on |x| < 1,   sigma = identity,   X_0 = 0.

#include <cstdio>
#include <limits>
#include <vector>

#include "tamed/tamed.hpp"

int main() {
  using namespace tamed;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto b = power_singularity_drift(1, 0.4, 1.0, 2.0);

  SchemeConfig cfg;
  cfg.d = 1;
  cfg.x0 = InitialCondition::point({0.0});
  cfg.diffusion = identity_diffusion(1);

  MonteCarloSetup mc;
  mc.paths = 400;
  mc.master_seed = 17;
  mc.workers = 4;

  const std::vector<std::size_t> levels{16, 32, 64, 128, 256};
  const std::size_t n_ref = 4096;
  const std::pair<const char*, TamingStrategy> strategies[] = {
      {"relative truncation", {TamingKind::relative_truncation, 1.0, 0.25}},
      {"absolute truncation", {TamingKind::absolute_truncation, 1.0, 0.25}},
      {"mollification", {TamingKind::mollification, 1.0, 1.0}},
  };

  for (const auto& [name, s] : strategies) {
    const auto rep = strong_error(cfg, DriftFamily::tamed(b, s), levels, n_ref, mc);
    const auto theory = admissible_chi(s.kind, b.p, b.q, 1.0, 1.0);
    std::printf("%s, chi = %g\n", name, s.chi);
    std::printf("  %6s  %12s  %12s\n", "n", "error", "stderr");
    for (const auto& l : rep.levels) std::printf("  %6zu  %12.5e  %12.5e\n", l.n, l.error, l.stderr_);
    if (rep.fit) std::printf("  fitted exponent %.3f +- %.3f", rep.fit->beta, rep.fit->beta_stderr);
    const auto with_chi = admissible_chi(s.kind, b.p, b.q, 1.0, 1.0, kInf, kInf, s.chi);
    if (with_chi.predicted_exponent) std::printf(", predicted %.3f", *with_chi.predicted_exponent);
    std::printf(" (admissible chi in (%g, %g%c)\n\n", theory.lower, theory.upper, theory.upper_inclusive ? ']' : ')');
  }
}
