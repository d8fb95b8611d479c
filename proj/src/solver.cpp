#include "tg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "tg/detail/parallel.hpp"
#include "tg/error.hpp"

namespace tg {

namespace {

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "coefficient sum overflows 64 bits");
  return r;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "coefficient product overflows 64 bits");
  return r;
}

template <typename T>
T branch_sum(const LambdaSet& lambda, std::uint32_t s, std::span<const T> c) {
  const int k = lambda.alphabet_size();
  const int d = lambda.distinct_raw(s);
  const auto succ = lambda.successors(s);
  T acc{};
  for (std::size_t cls = 0; cls < succ.size(); ++cls) {
    const std::uint32_t t = succ[cls];
    if (t == LambdaSet::kDead) continue;
    const auto mult = static_cast<std::uint64_t>(static_cast<int>(cls) < d ? 1 : k - d);
    if constexpr (std::is_same_v<T, std::uint64_t>) {
      acc = checked_add(acc, checked_mul(mult, c[t]));
    } else {
      acc += static_cast<T>(mult) * c[t];
    }
  }
  return acc;
}

template <typename T>
T branch_min(const LambdaSet& lambda, std::uint32_t s, std::span<const T> c2, GameMode mode) {
  const auto succ = lambda.successors(s);
  const bool hard = mode == GameMode::Hard;
  const int excluded = hard ? lambda.last_letter_raw(s) : -1;
  T best = hard ? c2[s] : std::numeric_limits<T>::max();
  for (std::size_t cls = 0; cls < succ.size(); ++cls) {
    if (static_cast<int>(cls) == excluded) continue;
    const std::uint32_t t = succ[cls];
    const T v = t == LambdaSet::kDead ? T{} : c2[t];
    best = std::min(best, v);
  }
  return best;
}

template <typename T>
std::vector<T> sum_step_impl(const LambdaSet& lambda, std::span<const T> c, int threads) {
  if (c.size() != lambda.size()) throw Error(ErrorCode::InvalidArgument, "coefficient vector has wrong length");
  std::vector<T> out(c.size());
  detail::parallel_for(c.size(), threads, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t s = b; s < e; ++s) out[s] = branch_sum(lambda, static_cast<std::uint32_t>(s), c);
  });
  return out;
}

template <typename T>
std::vector<T> min_step_impl(const LambdaSet& lambda, std::span<const T> c2, GameMode mode, int threads) {
  if (c2.size() != lambda.size()) throw Error(ErrorCode::InvalidArgument, "coefficient vector has wrong length");
  mode = counting_mode(mode);
  std::vector<T> out(c2.size());
  detail::parallel_for(c2.size(), threads, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t s = b; s < e; ++s) out[s] = branch_min(lambda, static_cast<std::uint32_t>(s), c2, mode);
  });
  return out;
}

void check_mode(const LambdaSet& lambda, GameMode mode) {
  if (lambda.range().pmin != min_period(counting_mode(mode))) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("mode ") + std::string(to_string(mode)) + " requires pmin = " +
                    std::to_string(min_period(counting_mode(mode))));
  }
}

double mean_of(std::span<const double> c, bool nonzero_only) {
  double sum = 0;
  std::size_t count = 0;
  for (double v : c) {
    sum += v;
    if (!nonzero_only || v > 0) ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

std::uint32_t SolverConfig::m_threshold() const {
  return static_cast<std::uint32_t>(std::ceil(m_fraction * grid));
}

std::uint32_t SolverConfig::M_threshold() const {
  return static_cast<std::uint32_t>(std::floor(M_fraction * grid));
}

std::vector<std::uint64_t> sum_step(const LambdaSet& lambda, std::span<const std::uint64_t> c, int threads) {
  return sum_step_impl<std::uint64_t>(lambda, c, threads);
}

std::vector<std::uint64_t> min_step(const LambdaSet& lambda, std::span<const std::uint64_t> c2,
                                    GameMode mode, int threads) {
  return min_step_impl<std::uint64_t>(lambda, c2, mode, threads);
}

CoefficientVector normalize_threshold(std::span<const double> c, const SolverConfig& cfg) {
  if (cfg.M_fraction < cfg.m_fraction || cfg.m_threshold() < 1) {
    throw Error(ErrorCode::InvalidArgument, "thresholds must satisfy M >= m >= 1");
  }
  const double mean = mean_of(c, cfg.nonzero_mean);
  if (!(mean > 0)) throw Error(ErrorCode::Diverged, "coefficients collapsed to zero");
  const std::uint32_t m = cfg.m_threshold();
  const std::uint32_t M = cfg.M_threshold();
  CoefficientVector out;
  out.values.resize(c.size());
  bool any = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double scaled = std::round(c[i] / mean * cfg.grid);
    std::uint32_t v = 0;
    if (scaled >= m) v = scaled > M ? M : static_cast<std::uint32_t>(scaled);
    out.values[i] = v;
    any = any || v > 0;
  }
  if (!any) throw Error(ErrorCode::Diverged, "coefficients collapsed to zero");
  return out;
}

Rational growth_alpha(const LambdaSet& lambda, const CoefficientVector& c, GameMode mode, int threads) {
  std::vector<std::uint64_t> wide(c.values.begin(), c.values.end());
  const auto c2 = sum_step(lambda, wide, threads);
  const auto c1 = min_step(lambda, c2, mode, threads);
  bool found = false;
  std::uint64_t best_num = 0;
  std::uint64_t best_den = 1;
  for (std::size_t v = 0; v < wide.size(); ++v) {
    if (wide[v] == 0) continue;
    using U = unsigned __int128;
    if (!found || static_cast<U>(c1[v]) * best_den < static_cast<U>(best_num) * wide[v]) {
      best_num = c1[v];
      best_den = wide[v];
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::InvalidArgument, "coefficient vector has no positive entry");
  return Rational(BigInt(best_num), BigInt(best_den));
}

Rational spread_gamma(const CoefficientVector& c) {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  for (std::uint32_t v : c.values) {
    if (v == 0) continue;
    lo = lo == 0 ? v : std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == 0) throw Error(ErrorCode::InvalidArgument, "coefficient vector has no positive entry");
  return Rational(BigInt(hi), BigInt(lo));
}

SolveResult solve(const LambdaSet& lambda, GameMode mode, const SolverConfig& cfg) {
  check_mode(lambda, mode);
  if (!(cfg.tolerance > 0) || cfg.max_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be positive and max_iterations >= 1");
  }
  const std::size_t n = lambda.size();
  const int threads = detail::resolve_threads(cfg.threads);
  std::vector<double> current(n, 1.0);
  if (cfg.random_init) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    for (auto& v : current) v = dist(rng);
  }
  const double lo = cfg.m_fraction;
  const double hi = cfg.M_fraction;

  std::vector<double> raw;
  SolveResult result;
  bool converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const auto c2 = sum_step_impl<double>(lambda, current, threads);
    raw = min_step_impl<double>(lambda, c2, mode, threads);
    const double mean = mean_of(raw, cfg.nonzero_mean);
    if (!(mean > 0)) throw Error(ErrorCode::Diverged, "coefficients collapsed to zero");

    double alpha_estimate = std::numeric_limits<double>::infinity();
    double change = 0;
    std::size_t nonzero = 0;
    std::vector<double> next(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (current[v] > 0) alpha_estimate = std::min(alpha_estimate, raw[v] / current[v]);
      double x = raw[v] / mean;
      if (x < lo) x = 0;
      else if (x > hi) x = hi;
      next[v] = x;
      if (x > 0) {
        ++nonzero;
        change = std::max(change, std::abs(x - current[v]) / x);
      } else if (current[v] > 0) {
        change = std::max(change, 1.0);
      }
    }
    if (nonzero == 0) throw Error(ErrorCode::Diverged, "coefficients collapsed to zero");
    current.swap(next);
    result.iterations = it;
    result.last_change = change;
    if (cfg.log && (it % std::max(cfg.log_every, 1) == 0 || change < cfg.tolerance)) {
      *cfg.log << "iteration " << it << " alpha~" << alpha_estimate << " nonzero " << nonzero
               << " change " << change << '\n';
    }
    if (change < cfg.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NotConverged,
                "no convergence after " + std::to_string(cfg.max_iterations) +
                    " iterations (last relative change " + std::to_string(result.last_change) + ")");
  }

  result.coefficients = normalize_threshold(raw, cfg);
  if (result.coefficients.values[lambda.zero_state().value] == 0) {
    throw Error(ErrorCode::Diverged, "coefficient of the single-letter state collapsed to zero");
  }
  result.m = cfg.m_threshold();
  result.M = cfg.M_threshold();
  result.alpha = growth_alpha(lambda, result.coefficients, mode, threads);
  result.gamma = spread_gamma(result.coefficients);
  return result;
}

}  // namespace tg
