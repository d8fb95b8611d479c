#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tg/lambda.hpp"
#include "tg/mode.hpp"
#include "tg/rational.hpp"
#include "tg/solver.hpp"

namespace tg {

struct Certificate {
  GameMode mode = GameMode::Hard;  // NONREPETITIVE or HARD
  int k = 0;
  PeriodRange range{};
  std::uint64_t lambda_count = 0;
  std::uint64_t lambda_fingerprint = 0;
  CoefficientVector coefficients;
  std::uint32_t m = 0;  // smallest allowed nonzero coefficient
  std::uint32_t M = 0;  // largest allowed coefficient
  Rational alpha;
  Rational gamma;
  Rational beta;  // 0 when no feasible beta was recorded
  std::string created_by;

  bool operator==(const Certificate&) const = default;
};

struct VerificationReport {
  bool passed = false;
  std::vector<std::string> failures;
  std::vector<std::string> notes;
  // First violating state in canonical order, with the branch that attains
  // the minimum ("e" for the pass, otherwise the class letter).
  std::optional<std::string> witness_state;
  std::optional<std::string> witness_branch;
  // Every violating (state, branch) pair in canonical order, capped at
  // kMaxViolations.
  std::vector<std::pair<std::string, std::string>> violations;
  static constexpr std::size_t kMaxViolations = 64;
  std::uint64_t states_checked = 0;
  std::uint64_t nonzero = 0;
  std::optional<Rational> recomputed_gamma;
  // min over C_v > 0 of branch-min / C_v: the best alpha this vector supports.
  std::optional<Rational> tightest_alpha;
  std::optional<std::string> tightest_state;

  std::string summary() const;
};

// Certificate from a solver run; beta is the top of the feasible interval on
// the 1/1000 grid, or 0.
Certificate make_certificate(const LambdaSet& lambda, GameMode mode, const SolveResult& result,
                             std::string created_by);

// Exact check against an already built automaton.
VerificationReport verify_certificate(const Certificate& cert, const LambdaSet& lambda, int threads = 1);
// Rebuilds the automaton first; throws ResourceLimit when it does not fit.
VerificationReport verify_certificate(const Certificate& cert, const LambdaBuildOptions& options = {});

// lhs - beta of the beta-inequality; check_beta holds iff this is >= 0.
// NONREPETITIVE requires odd p, HARD (and ERASE) even p; beta must exceed 1.
Rational beta_margin(GameMode mode, const Rational& alpha, const Rational& gamma, int p,
                     const Rational& beta);
bool check_beta(GameMode mode, const Rational& alpha, const Rational& gamma, int p, const Rational& beta);

struct BetaInterval {
  Rational lo;
  Rational hi;
};

// Outermost multiples of `resolution` in (1, 100] where check_beta holds.
// Scans at step max(resolution, 1/100) and bisects the two boundary brackets,
// so a feasible window narrower than the scan step can be missed.
std::optional<BetaInterval> beta_interval(GameMode mode, const Rational& alpha, const Rational& gamma,
                                          int p, const Rational& resolution);

// "TGCRT1" binary form with a trailing CRC32.
std::vector<std::uint8_t> encode(const Certificate& cert);
Certificate decode(std::span<const std::uint8_t> bytes);

// JSON mirror. States are listed alongside the coefficients when `lambda` is
// given. Refused for 100000 states or more.
std::string to_json(const Certificate& cert, const LambdaSet* lambda = nullptr);
Certificate certificate_from_json(const std::string& text);
inline constexpr std::uint64_t kJsonMirrorLimit = 100000;

void save_certificate(const std::string& path, const Certificate& cert);
// Accepts either the binary form or the JSON mirror.
Certificate load_certificate(const std::string& path);

}  // namespace tg
