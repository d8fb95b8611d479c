#include "tg/certificate.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <iterator>
#include <limits>
#include <json.hpp>
#include <sstream>

#include "tg/detail/binary_io.hpp"
#include "tg/detail/parallel.hpp"
#include "tg/error.hpp"

namespace tg {

namespace {

constexpr std::string_view kMagic = "TGCRT1";
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint32_t kMaxBigIntBytes = 1u << 20;

using U128 = unsigned __int128;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, n);
    done += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_bigint(detail::ByteWriter& out, const BigInt& v) {
  std::vector<std::uint8_t> bytes;
  if (v != 0) boost::multiprecision::export_bits(BigInt(abs(v)), std::back_inserter(bytes), 8, false);
  out.u8(v < 0 ? 1 : 0);
  out.u32(static_cast<std::uint32_t>(bytes.size()));
  out.raw(bytes);
}

BigInt read_bigint(detail::ByteReader& in) {
  const std::uint8_t negative = in.u8();
  const std::uint32_t n = in.u32();
  if (negative > 1 || n > kMaxBigIntBytes) throw Error(ErrorCode::FormatError, "malformed integer field");
  BigInt v = 0;
  if (n > 0) {
    auto bytes = in.raw(n);
    boost::multiprecision::import_bits(v, bytes.begin(), bytes.end(), 8, false);
  }
  return negative ? BigInt(-v) : v;
}

void write_rational(detail::ByteWriter& out, const Rational& r) {
  write_bigint(out, r.numerator());
  write_bigint(out, r.denominator());
}

Rational read_rational(detail::ByteReader& in) {
  BigInt num = read_bigint(in);
  BigInt den = read_bigint(in);
  if (den <= 0) throw Error(ErrorCode::FormatError, "nonpositive denominator");
  Rational r(num, den);
  if (r.denominator() != den) throw Error(ErrorCode::FormatError, "rational not in reduced form");
  return r;
}

GameMode mode_from_byte(std::uint8_t b) {
  switch (b) {
    case 0: return GameMode::Nonrepetitive;
    case 2: return GameMode::Hard;
    default: throw Error(ErrorCode::FormatError, "unknown certificate mode " + std::to_string(b));
  }
}

std::uint8_t mode_to_byte(GameMode mode) {
  return counting_mode(mode) == GameMode::Hard ? 2 : 0;
}

std::uint64_t checked_mul_add(std::uint64_t acc, std::uint64_t a, std::uint64_t b) {
  std::uint64_t prod;
  if (__builtin_mul_overflow(a, b, &prod) || __builtin_add_overflow(acc, prod, &acc)) {
    throw Error(ErrorCode::Overflow, "branch sum overflows 64 bits");
  }
  return acc;
}

// Sum over Ann's replies b of C[state(tb)].
std::uint64_t branch_sum(const LambdaSet& lambda, std::uint32_t t, const std::vector<std::uint32_t>& c) {
  const int k = lambda.alphabet_size();
  const int d = lambda.distinct_raw(t);
  const auto succ = lambda.successors(t);
  std::uint64_t acc = 0;
  for (std::size_t cls = 0; cls < succ.size(); ++cls) {
    if (succ[cls] == LambdaSet::kDead) continue;
    acc = checked_mul_add(acc, static_cast<int>(cls) < d ? 1 : k - d, c[succ[cls]]);
  }
  return acc;
}

struct BranchMin {
  std::uint64_t value = 0;
  int branch = -1;  // -1: pass
};

BranchMin branch_min(const LambdaSet& lambda, std::uint32_t v, const std::vector<std::uint32_t>& c, bool hard) {
  BranchMin best{std::numeric_limits<std::uint64_t>::max(), -2};
  if (hard) best = {branch_sum(lambda, v, c), -1};
  const int excluded = hard ? lambda.last_letter_raw(v) : -1;
  const auto succ = lambda.successors(v);
  for (std::size_t cls = 0; cls < succ.size(); ++cls) {
    if (static_cast<int>(cls) == excluded) continue;
    const std::uint64_t s = succ[cls] == LambdaSet::kDead ? 0 : branch_sum(lambda, succ[cls], c);
    if (s < best.value) best = {s, static_cast<int>(cls)};
  }
  return best;
}

// a * x <= b * y for nonnegative a, b.
bool scaled_leq(const BigInt& a, std::uint64_t x, const BigInt& b, std::uint64_t y, bool small,
                std::uint64_t a64, std::uint64_t b64) {
  if (small) {
    U128 lhs, rhs;
    if (!__builtin_mul_overflow(static_cast<U128>(a64), static_cast<U128>(x), &lhs) &&
        !__builtin_mul_overflow(static_cast<U128>(b64), static_cast<U128>(y), &rhs)) {
      return lhs <= rhs;
    }
  }
  return a * x <= b * y;
}

struct ChunkResult {
  std::vector<std::pair<std::uint32_t, int>> violations;
  std::optional<std::uint32_t> out_of_range;
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  std::uint64_t nonzero = 0;
  std::optional<std::uint32_t> tightest;
  std::uint64_t tight_num = 0;
  std::uint64_t tight_den = 1;
};

std::string branch_name(int branch) {
  return branch < 0 ? std::string("e") : std::string(1, "0123456789abcdef"[branch]);
}

}  // namespace

std::string VerificationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " (" << states_checked << " states, " << nonzero << " nonzero)";
  for (const auto& f : failures) os << "\n  failure: " << f;
  for (const auto& [v, branch] : violations) os << "\n  violated: v=" << v << " branch=" << branch;
  if (recomputed_gamma) os << "\n  gamma (recomputed): " << *recomputed_gamma;
  if (tightest_alpha) os << "\n  tightest ratio: " << *tightest_alpha << " at v=" << tightest_state.value_or("?");
  for (const auto& n : notes) os << "\n  note: " << n;
  return os.str();
}

Certificate make_certificate(const LambdaSet& lambda, GameMode mode, const SolveResult& result,
                             std::string created_by) {
  Certificate cert;
  cert.mode = counting_mode(mode);
  cert.k = lambda.alphabet_size();
  cert.range = lambda.range();
  cert.lambda_count = lambda.size();
  cert.lambda_fingerprint = lambda.fingerprint();
  cert.coefficients = result.coefficients;
  cert.m = result.m;
  cert.M = result.M;
  cert.alpha = result.alpha;
  cert.gamma = result.gamma;
  const int p = lambda.range().pmax;
  const bool parity_ok = (p % 2 == 0) == (cert.mode == GameMode::Hard);
  cert.beta = Rational(0);
  if (parity_ok && result.alpha > Rational(1)) {
    if (auto iv = beta_interval(cert.mode, cert.alpha, cert.gamma, p, Rational(1, 1000))) cert.beta = iv->hi;
  }
  cert.created_by = std::move(created_by);
  return cert;
}

VerificationReport verify_certificate(const Certificate& cert, const LambdaSet& lambda, int threads) {
  VerificationReport report;
  report.notes.push_back("zero coefficients are unconstrained; nonzero ones must lie in [m, M]");
  auto fail = [&](std::string msg) { report.failures.push_back(std::move(msg)); };

  if (cert.mode == GameMode::Erase) fail("certificate mode must be nonrep or hard");
  if (cert.k != lambda.alphabet_size() || cert.range.pmin != lambda.range().pmin ||
      cert.range.pmax != lambda.range().pmax) {
    fail("parameters do not match the automaton");
  }
  if (cert.range.pmin != min_period(counting_mode(cert.mode))) {
    fail("pmin " + std::to_string(cert.range.pmin) + " does not match mode " + std::string(to_string(cert.mode)));
  }
  if (cert.lambda_count != lambda.size()) {
    fail("lambda count mismatch (certificate " + std::to_string(cert.lambda_count) + ", rebuilt " +
         std::to_string(lambda.size()) + ")");
  }
  if (cert.lambda_fingerprint != lambda.fingerprint()) fail("fingerprint mismatch");
  if (cert.coefficients.values.size() != lambda.size()) fail("coefficient count mismatch");
  if (!report.failures.empty()) return report;

  const auto& c = cert.coefficients.values;
  if (c[lambda.zero_state().value] == 0) fail("C_0 > 0 violated");
  if (cert.m < 1 || cert.M < cert.m) fail("thresholds must satisfy 1 <= m <= M");
  if (cert.alpha.sign() <= 0) fail("alpha must be positive");
  if (!report.failures.empty()) return report;

  const bool hard = cert.mode == GameMode::Hard;
  const BigInt a = cert.alpha.numerator();
  const BigInt b = cert.alpha.denominator();
  const bool small = a <= std::numeric_limits<std::uint64_t>::max() && b <= std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t a64 = small ? a.convert_to<std::uint64_t>() : 0;
  const std::uint64_t b64 = small ? b.convert_to<std::uint64_t>() : 0;

  const int workers = detail::resolve_threads(threads);
  std::vector<ChunkResult> chunks(detail::chunk_count(c.size(), workers));
  detail::parallel_for(c.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t id) {
    ChunkResult r;
    for (std::size_t s = begin; s < end; ++s) {
      const std::uint32_t cv = c[s];
      if (cv == 0) continue;
      ++r.nonzero;
      r.lo = r.lo == 0 ? cv : std::min(r.lo, cv);
      r.hi = std::max(r.hi, cv);
      if (!r.out_of_range && (cv < cert.m || cv > cert.M)) r.out_of_range = static_cast<std::uint32_t>(s);
      const BranchMin bm = branch_min(lambda, static_cast<std::uint32_t>(s), c, hard);
      if (!r.tightest || static_cast<U128>(bm.value) * r.tight_den < static_cast<U128>(r.tight_num) * cv) {
        r.tightest = static_cast<std::uint32_t>(s);
        r.tight_num = bm.value;
        r.tight_den = cv;
      }
      if (r.violations.size() < VerificationReport::kMaxViolations &&
          !scaled_leq(a, cv, b, bm.value, small, a64, b64)) {
        r.violations.emplace_back(static_cast<std::uint32_t>(s), bm.branch);
      }
    }
    chunks[id] = r;
  });

  ChunkResult all;
  for (const auto& r : chunks) {
    all.nonzero += r.nonzero;
    if (r.nonzero > 0) {
      all.lo = all.lo == 0 ? r.lo : std::min(all.lo, r.lo);
      all.hi = std::max(all.hi, r.hi);
    }
    if (!all.out_of_range) all.out_of_range = r.out_of_range;
    for (const auto& v : r.violations) {
      if (all.violations.size() < VerificationReport::kMaxViolations) all.violations.push_back(v);
    }
    if (r.tightest && (!all.tightest || static_cast<U128>(r.tight_num) * all.tight_den <
                                            static_cast<U128>(all.tight_num) * r.tight_den)) {
      all.tightest = r.tightest;
      all.tight_num = r.tight_num;
      all.tight_den = r.tight_den;
    }
  }

  report.states_checked = c.size();
  report.nonzero = all.nonzero;
  report.recomputed_gamma = Rational(BigInt(all.hi), BigInt(all.lo));
  if (all.tightest) {
    report.tightest_alpha = Rational(BigInt(all.tight_num), BigInt(all.tight_den));
    report.tightest_state = describe_state(lambda, StateId{*all.tightest});
  }
  if (all.out_of_range) {
    fail("coefficient " + std::to_string(c[*all.out_of_range]) + " at v=" +
         describe_state(lambda, StateId{*all.out_of_range}) + " outside [m, M] = [" + std::to_string(cert.m) +
         ", " + std::to_string(cert.M) + "]");
  }
  for (const auto& [s, branch] : all.violations) {
    report.violations.emplace_back(describe_state(lambda, StateId{s}), branch_name(branch));
  }
  if (!report.violations.empty()) {
    report.witness_state = report.violations.front().first;
    report.witness_branch = report.violations.front().second;
    fail("alpha*C_v <= min branch sum violated at " + std::to_string(report.violations.size()) +
         (report.violations.size() == VerificationReport::kMaxViolations ? "+" : "") + " state(s), first v=" +
         *report.witness_state + " (branch " + *report.witness_branch + ")");
  }
  if (*report.recomputed_gamma > cert.gamma) {
    fail("gamma understated: recomputed " + report.recomputed_gamma->to_string() + " > claimed " +
         cert.gamma.to_string());
  }
  report.passed = report.failures.empty();
  return report;
}

VerificationReport verify_certificate(const Certificate& cert, const LambdaBuildOptions& options) {
  if (cert.k < 2 || cert.k > kMaxAlphabet || cert.range.pmin < 1 || cert.range.pmax < cert.range.pmin) {
    throw Error(ErrorCode::InvalidArgument, "certificate parameters out of range");
  }
  const LambdaSet lambda = LambdaSet::build(cert.k, cert.range, options);
  return verify_certificate(cert, lambda, options.threads);
}

Rational beta_margin(GameMode mode, const Rational& alpha, const Rational& gamma, int p, const Rational& beta) {
  if (beta <= Rational(1)) throw Error(ErrorCode::InvalidArgument, "beta must exceed 1");
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "p must be positive");
  const Rational one(1);
  if (counting_mode(mode) == GameMode::Nonrepetitive) {
    if (p % 2 == 0) throw Error(ErrorCode::InvalidArgument, "nonrep beta test needs odd p");
    const Rational tail = Rational(2) * gamma * pow(beta, (3 - p) / 2) / (beta - one);
    return alpha - tail - beta;
  }
  if (p % 2 != 0) throw Error(ErrorCode::InvalidArgument, "hard beta test needs even p");
  const int h = p / 2;
  const Rational bm1 = beta - one;
  const Rational poly = pow(beta, 3 + h) + Rational(2) * pow(beta, 2 + h) + pow(beta, 1 + h) - beta * beta - one;
  const Rational tail = gamma * pow(beta, 1 - p) * poly / ((one + beta) * bm1 * bm1);
  return alpha - tail - beta;
}

bool check_beta(GameMode mode, const Rational& alpha, const Rational& gamma, int p, const Rational& beta) {
  return beta_margin(mode, alpha, gamma, p, beta).sign() >= 0;
}

std::optional<BetaInterval> beta_interval(GameMode mode, const Rational& alpha, const Rational& gamma, int p,
                                          const Rational& resolution) {
  if (resolution.sign() <= 0) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  // Grid points are j * resolution; j ranges over (1/res, 100/res].
  const Rational inv = Rational(1) / resolution;
  auto floor_of = [](const Rational& r) { return BigInt(r.numerator() / r.denominator()); };
  const BigInt j_first = floor_of(inv) + 1;
  const BigInt j_last = floor_of(Rational(100) * inv);
  if (j_first > j_last) return std::nullopt;
  BigInt stride = floor_of(inv / Rational(100));
  if (stride < 1) stride = 1;

  auto ok = [&](const BigInt& j) { return check_beta(mode, alpha, gamma, p, Rational(j, 1) * resolution); };

  std::optional<BigInt> first_ok, last_ok;
  BigInt prev_bad_before = j_first - 1;
  const BigInt none = j_last + 1;
  BigInt next_bad_after = none;
  BigInt prev = j_first - 1;
  for (BigInt j = j_first; j <= j_last; j += stride) {
    if (ok(j)) {
      if (!first_ok) {
        first_ok = j;
        prev_bad_before = prev;
      }
      last_ok = j;
      next_bad_after = none;
    } else if (first_ok && next_bad_after == none) {
      next_bad_after = j;
    }
    prev = j;
  }
  if (!first_ok) return std::nullopt;

  // Smallest feasible j in (prev_bad_before, first_ok].
  BigInt lo_bad = prev_bad_before, lo_ok = *first_ok;
  while (lo_ok - lo_bad > 1) {
    BigInt mid = (lo_ok + lo_bad) / 2;
    (ok(mid) ? lo_ok : lo_bad) = mid;
  }
  // Largest feasible j in [last_ok, next_bad_after).
  BigInt hi_ok = *last_ok;
  BigInt hi_bad = next_bad_after;
  while (hi_bad - hi_ok > 1) {
    BigInt mid = (hi_ok + hi_bad) / 2;
    (ok(mid) ? hi_ok : hi_bad) = mid;
  }
  return BetaInterval{Rational(lo_ok, 1) * resolution, Rational(hi_ok, 1) * resolution};
}

std::vector<std::uint8_t> encode(const Certificate& cert) {
  if (cert.coefficients.values.size() != cert.lambda_count) {
    throw Error(ErrorCode::InvalidArgument, "coefficient count differs from lambda_count");
  }
  detail::ByteWriter out;
  out.raw(kMagic);
  out.u8(kFormatVersion);
  out.u8(mode_to_byte(cert.mode));
  out.u8(static_cast<std::uint8_t>(cert.k));
  out.u8(static_cast<std::uint8_t>(cert.range.pmin));
  out.u8(static_cast<std::uint8_t>(cert.range.pmax));
  out.u64(cert.lambda_count);
  out.u64(cert.lambda_fingerprint);
  out.u32(cert.m);
  out.u32(cert.M);
  write_rational(out, cert.alpha);
  write_rational(out, cert.gamma);
  write_rational(out, cert.beta);
  out.u32(static_cast<std::uint32_t>(cert.created_by.size()));
  out.raw(cert.created_by);
  for (std::uint32_t v : cert.coefficients.values) out.u32(v);
  const std::uint32_t crc = crc32_of(out.bytes());
  out.u32(crc);
  return out.take();
}

Certificate decode(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  if (bytes.size() < kMagic.size() || in.str(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::FormatError, "bad magic (not a TGCRT1 certificate)");
  }
  const std::uint8_t version = in.u8();
  if (version != kFormatVersion) throw Error(ErrorCode::FormatError, "unsupported version " + std::to_string(version));
  Certificate cert;
  cert.mode = mode_from_byte(in.u8());
  cert.k = in.u8();
  cert.range.pmin = in.u8();
  cert.range.pmax = in.u8();
  cert.lambda_count = in.u64();
  cert.lambda_fingerprint = in.u64();
  cert.m = in.u32();
  cert.M = in.u32();
  cert.alpha = read_rational(in);
  cert.gamma = read_rational(in);
  cert.beta = read_rational(in);
  cert.created_by = in.str(in.u32());
  if (cert.lambda_count > in.remaining() / 4) throw Error(ErrorCode::FormatError, "unexpected end of data");
  cert.coefficients.values.resize(cert.lambda_count);
  for (auto& v : cert.coefficients.values) v = in.u32();
  const std::size_t body = in.position();
  const std::uint32_t stored = in.u32();
  if (in.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes after checksum");
  if (crc32_of(bytes.first(body)) != stored) throw Error(ErrorCode::FormatError, "checksum mismatch");
  return cert;
}

std::string to_json(const Certificate& cert, const LambdaSet* lambda) {
  if (cert.lambda_count >= kJsonMirrorLimit) {
    throw Error(ErrorCode::Unsupported, "JSON mirror is only written below 100000 states");
  }
  nlohmann::ordered_json j;
  j["format"] = "TGCRT1-json";
  j["mode"] = to_string(cert.mode);
  j["k"] = cert.k;
  j["pmin"] = cert.range.pmin;
  j["pmax"] = cert.range.pmax;
  j["lambda_count"] = cert.lambda_count;
  j["fingerprint"] = cert.lambda_fingerprint;
  j["m"] = cert.m;
  j["M"] = cert.M;
  j["alpha"] = cert.alpha.to_string();
  j["gamma"] = cert.gamma.to_string();
  j["beta"] = cert.beta.to_string();
  j["created_by"] = cert.created_by;
  j["coefficients"] = cert.coefficients.values;
  if (lambda != nullptr && lambda->size() == cert.lambda_count) {
    auto states = nlohmann::ordered_json::array();
    for (std::uint32_t s = 0; s < lambda->size(); ++s) states.push_back(describe_state(*lambda, StateId{s}));
    j["states"] = std::move(states);
  }
  return j.dump(1);
}

Certificate certificate_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "TGCRT1-json") throw Error(ErrorCode::FormatError, "bad JSON format tag");
    Certificate cert;
    cert.mode = counting_mode(parse_game_mode(j.at("mode").get<std::string>()));
    cert.k = j.at("k").get<int>();
    cert.range.pmin = j.at("pmin").get<int>();
    cert.range.pmax = j.at("pmax").get<int>();
    cert.lambda_count = j.at("lambda_count").get<std::uint64_t>();
    cert.lambda_fingerprint = j.at("fingerprint").get<std::uint64_t>();
    cert.m = j.at("m").get<std::uint32_t>();
    cert.M = j.at("M").get<std::uint32_t>();
    cert.alpha = Rational::parse(j.at("alpha").get<std::string>());
    cert.gamma = Rational::parse(j.at("gamma").get<std::string>());
    cert.beta = Rational::parse(j.at("beta").get<std::string>());
    cert.created_by = j.value("created_by", std::string());
    cert.coefficients.values = j.at("coefficients").get<std::vector<std::uint32_t>>();
    if (cert.coefficients.values.size() != cert.lambda_count) {
      throw Error(ErrorCode::FormatError, "coefficient count differs from lambda_count");
    }
    return cert;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed certificate JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) throw;
    throw Error(ErrorCode::FormatError, std::string("malformed certificate JSON: ") + e.what());
  }
}

void save_certificate(const std::string& path, const Certificate& cert) {
  const auto bytes = encode(cert);
  detail::write_file(path, bytes);
}

Certificate load_certificate(const std::string& path) {
  const auto bytes = detail::read_file(path);
  const auto first = std::find_if(bytes.begin(), bytes.end(), [](std::uint8_t ch) { return !std::isspace(ch); });
  if (first != bytes.end() && *first == '{') return certificate_from_json(std::string(bytes.begin(), bytes.end()));
  return decode(bytes);
}

}  // namespace tg
