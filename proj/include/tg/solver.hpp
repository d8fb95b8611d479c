#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tg/lambda.hpp"
#include "tg/mode.hpp"
#include "tg/rational.hpp"

namespace tg {

// One nonnegative integer weight per state, in canonical state order.
struct CoefficientVector {
  std::vector<std::uint32_t> values;

  bool operator==(const CoefficientVector&) const = default;
};

struct SolverConfig {
  int max_iterations = 5000;
  // Stop once the largest relative change of a nonzero entry drops below this.
  double tolerance = 1e-9;
  // Thresholds as fractions of the mean: entries below m are zeroed, entries
  // above M are clamped to M.
  double m_fraction = 0.42;
  double M_fraction = 1.5;
  // The mean maps to this integer when snapping to the integer grid.
  std::uint32_t grid = 10000;
  // Divide by the mean of the nonzero entries instead of all entries.
  bool nonzero_mean = false;
  bool random_init = false;
  std::uint64_t seed = 1;
  int threads = 1;
  // Progress lines go here when set (iteration, alpha estimate, nonzeros).
  std::ostream* log = nullptr;
  int log_every = 100;

  std::uint32_t m_threshold() const;
  std::uint32_t M_threshold() const;
};

struct SolveResult {
  CoefficientVector coefficients;
  Rational alpha;
  Rational gamma;
  std::uint32_t m = 0;
  std::uint32_t M = 0;
  int iterations = 0;
  double last_change = 0;
};

// C''_v = sum over surviving letters b of C[state(vb)], with class
// multiplicities. Overflow throws.
std::vector<std::uint64_t> sum_step(const LambdaSet& lambda, std::span<const std::uint64_t> c,
                                    int threads = 1);

// C'_v = min over Ben's options a of C''[state(va)], a dead branch counting as
// zero. HARD also offers the pass (C''_v) and forbids the class of the last
// letter of v.
std::vector<std::uint64_t> min_step(const LambdaSet& lambda, std::span<const std::uint64_t> c2,
                                    GameMode mode, int threads = 1);

// Rescale so the mean lands on cfg.grid, round, then zero entries below m and
// clamp entries above M. Throws Diverged when nothing survives.
CoefficientVector normalize_threshold(std::span<const double> c, const SolverConfig& cfg);

// min over v with C_v > 0 of C'_v / C_v, computed exactly.
Rational growth_alpha(const LambdaSet& lambda, const CoefficientVector& c, GameMode mode,
                      int threads = 1);

// Largest over smallest nonzero entry.
Rational spread_gamma(const CoefficientVector& c);

SolveResult solve(const LambdaSet& lambda, GameMode mode, const SolverConfig& cfg = {});

}  // namespace tg
