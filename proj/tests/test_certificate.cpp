#include <gmpxx.h>
#include <gtest/gtest.h>
#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>
#include <random>

#include "oracles.hpp"
#include "tg/certificate.hpp"
#include "tg/error.hpp"

using namespace tg;

namespace {

std::vector<Letter> L(const std::string& s) { return oracle::word(s); }

const std::vector<std::string> kSevenLetterSubset = {"",     "0",     "01",   "0102",  "010201", "012",
                                                     "0120", "01210", "0123", "01230", "012301"};

const LambdaSet& seven() {
  static const LambdaSet lam = LambdaSet::build(7, {1, 4});
  return lam;
}

const LambdaSet& six() {
  static const LambdaSet lam = LambdaSet::build(6, {1, 8});
  return lam;
}

Certificate indicator_certificate() {
  const auto& lam = seven();
  Certificate c;
  c.mode = GameMode::Hard;
  c.k = 7;
  c.range = {1, 4};
  c.lambda_count = lam.size();
  c.lambda_fingerprint = lam.fingerprint();
  c.coefficients.values.assign(lam.size(), 0);
  for (const auto& w : kSevenLetterSubset) c.coefficients.values[lam.find(L(w)).value().value] = 1;
  c.m = 1;
  c.M = 1;
  c.alpha = Rational(4);
  c.gamma = Rational(1);
  c.beta = Rational(3);
  c.created_by = "indicator";
  return c;
}

const Certificate& six_certificate() {
  static const Certificate c = make_certificate(six(), GameMode::Hard, solve(six(), GameMode::Hard), "test");
  return c;
}

mpq_class to_mpq(const Rational& r) { return mpq_class(mpz_class(r.numerator().str()), mpz_class(r.denominator().str())); }

mpq_class mpq_pow(const mpq_class& b, int e) {
  mpq_class out = 1;
  for (int i = 0; i < std::abs(e); ++i) out *= b;
  if (e < 0) out = 1 / out;
  return out;
}

// The two inequalities written out with GMP rationals.
mpq_class gmp_margin(GameMode mode, const mpq_class& a, const mpq_class& g, int p, const mpq_class& b) {
  if (mode == GameMode::Nonrepetitive) {
    return a - 2 * g * mpq_pow(b, (3 - p) / 2) / (b - 1) - b;
  }
  const int h = p / 2;
  const mpq_class num = mpq_pow(b, 3 + h) + 2 * mpq_pow(b, 2 + h) + mpq_pow(b, 1 + h) - b * b - 1;
  return a - g * mpq_pow(b, 1 - p) * num / ((1 + b) * (b - 1) * (b - 1)) - b;
}

std::vector<std::uint8_t> reseal(std::vector<std::uint8_t> bytes) {
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(body)));
  for (int i = 0; i < 4; ++i) bytes[body + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(crc >> (8 * i));
  return bytes;
}

}  // namespace

TEST(Verify, SevenLetterIndicatorPasses) {
  const auto report = verify_certificate(indicator_certificate(), seven());
  EXPECT_TRUE(report.passed) << report.summary();
  EXPECT_EQ(report.nonzero, 11u);
  EXPECT_EQ(report.recomputed_gamma, std::optional<Rational>(Rational(1)));
  EXPECT_EQ(report.tightest_alpha, std::optional<Rational>(Rational(4)));
  EXPECT_FALSE(report.notes.empty());
}

// With alpha = 41/10 every state whose worst branch is exactly 4 fails;
// 010201 is among them (Ben's letter 0 leads to 0102010, outside L').
TEST(Verify, SevenLetterAlphaTooHigh) {
  auto c = indicator_certificate();
  c.alpha = Rational(41, 10);
  const auto report = verify_certificate(c, seven());
  EXPECT_FALSE(report.passed);
  ASSERT_TRUE(report.witness_state.has_value());
  std::map<std::string, std::string> violations(report.violations.begin(), report.violations.end());
  ASSERT_TRUE(violations.count("010201"));
  EXPECT_EQ(violations["010201"], "0");
  EXPECT_EQ(violations.size(), 8u);
  EXPECT_EQ(*report.witness_state, "012");
}

TEST(Verify, AllZeroFails) {
  auto c = indicator_certificate();
  std::fill(c.coefficients.values.begin(), c.coefficients.values.end(), 0u);
  const auto report = verify_certificate(c, seven());
  EXPECT_FALSE(report.passed);
  bool found = false;
  for (const auto& f : report.failures) found = found || f.find("C_0 > 0 violated") != std::string::npos;
  EXPECT_TRUE(found) << report.summary();
}

TEST(Verify, DetectsTampering) {
  auto c = indicator_certificate();
  c.lambda_fingerprint ^= 1;
  auto r = verify_certificate(c, seven());
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.summary().find("fingerprint mismatch"), std::string::npos);

  c = indicator_certificate();
  c.gamma = Rational(1, 2);
  r = verify_certificate(c, seven());
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.summary().find("gamma understated"), std::string::npos);

  c = indicator_certificate();
  c.coefficients.values[seven().find(L("0120")).value().value] = 2;
  EXPECT_FALSE(verify_certificate(c, seven()).passed);  // above M

  c = indicator_certificate();
  c.lambda_count += 1;
  c.coefficients.values.push_back(0);
  EXPECT_FALSE(verify_certificate(c, seven()).passed);
}

TEST(Verify, RebuildsAutomaton) {
  const auto report = verify_certificate(six_certificate(), LambdaBuildOptions{});
  EXPECT_TRUE(report.passed) << report.summary();
  LambdaBuildOptions tiny;
  tiny.memory_budget_bytes = 4096;
  try {
    verify_certificate(six_certificate(), tiny);
    FAIL() << "budget ignored";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ResourceLimit);
  }
}

// Replays the hypothesis on 100 random states with GMP integers and a
// concrete-letter enumeration instead of the class tables.
TEST(Verify, GmpReplayOnRandomStates) {
  const auto& lam = six();
  const auto& cert = six_certificate();
  ASSERT_TRUE(verify_certificate(cert, lam).passed);
  const mpq_class alpha = to_mpq(cert.alpha);
  std::mt19937_64 rng(2024);
  const int k = lam.alphabet_size();
  for (int trial = 0; trial < 100; ++trial) {
    const StateId v{static_cast<std::uint32_t>(rng() % lam.size())};
    const auto word = lam.word(v);
    mpz_class best = -1;
    std::vector<std::optional<int>> branches;
    branches.push_back(std::nullopt);
    for (int a = 0; a < k; ++a) {
      if (word.empty() || word.back() != a) branches.push_back(a);
    }
    for (const auto& a : branches) {
      oracle::W va(word.begin(), word.end());
      if (a) {
        va.push_back(static_cast<Letter>(*a));
        if (oracle::has_square(va, 1, 8)) {
          best = 0;
          continue;
        }
      }
      mpz_class sum = 0;
      for (int b = 0; b < k; ++b) {
        oracle::W vab = va;
        vab.push_back(static_cast<Letter>(b));
        if (oracle::has_square(vab, 1, 8)) continue;
        sum += cert.coefficients.values[lam.state_of(vab).value];
      }
      if (best < 0 || sum < best) best = sum;
    }
    const mpq_class lhs = alpha * mpz_class(cert.coefficients.values[v.value]);
    ASSERT_LE(lhs, mpq_class(best)) << "state " << oracle::str(oracle::W(word.begin(), word.end()));
  }
}

TEST(CheckBeta, KnownConstants) {
  const Rational a1(12914, 6541), g1(10635, 4441);
  EXPECT_FALSE(check_beta(GameMode::Nonrepetitive, a1, g1, 15, Rational(17, 10)));
  // 9/5 falls just outside the feasible window [1.733, 1.790]; the exact
  // margin is negative.
  const Rational m = beta_margin(GameMode::Nonrepetitive, a1, g1, 15, Rational(9, 5));
  EXPECT_EQ(m, Rational(-87686505671, 51458689784070));
  EXPECT_FALSE(check_beta(GameMode::Nonrepetitive, a1, g1, 15, Rational(9, 5)));
  EXPECT_TRUE(check_beta(GameMode::Nonrepetitive, a1, g1, 15, Rational(176, 100)));

  EXPECT_TRUE(check_beta(GameMode::Hard, Rational(27195, 9091), Rational(11699, 6806), 8, Rational(5, 2)));
  EXPECT_TRUE(check_beta(GameMode::Hard, Rational(4), Rational(1), 4, Rational(3)));
  EXPECT_TRUE(check_beta(GameMode::Erase, Rational(4), Rational(1), 4, Rational(3)));
}

TEST(CheckBeta, Preconditions) {
  EXPECT_THROW(check_beta(GameMode::Nonrepetitive, 4, 1, 14, Rational(3, 2)), Error);
  EXPECT_THROW(check_beta(GameMode::Hard, 4, 1, 5, Rational(3, 2)), Error);
  EXPECT_THROW(check_beta(GameMode::Hard, 4, 1, 4, Rational(1)), Error);
  EXPECT_THROW(check_beta(GameMode::Hard, 4, 1, 4, Rational(1, 2)), Error);
}

TEST(CheckBeta, MatchesGmpOracle) {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 2000; ++trial) {
    const GameMode mode = trial % 2 ? GameMode::Hard : GameMode::Nonrepetitive;
    const int p = mode == GameMode::Hard ? 2 * static_cast<int>(1 + rng() % 10) : 1 + 2 * static_cast<int>(rng() % 10);
    const Rational a(static_cast<long>(1000 + rng() % 5000), static_cast<long>(1 + rng() % 2000));
    const Rational g(static_cast<long>(1000 + rng() % 3000), static_cast<long>(1000 + rng() % 1000));
    const Rational b(static_cast<long>(1001 + rng() % 4000), 1000);
    const mpq_class expected = gmp_margin(mode, to_mpq(a), to_mpq(g), p, to_mpq(b));
    const Rational got = beta_margin(mode, a, g, p, b);
    ASSERT_EQ(to_mpq(got), expected);
    ASSERT_EQ(check_beta(mode, a, g, p, b), expected >= 0);
  }
}

// Raising alpha never removes a feasible beta.
TEST(CheckBeta, MonotoneInAlpha) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const GameMode mode = trial % 2 ? GameMode::Hard : GameMode::Nonrepetitive;
    const int p = mode == GameMode::Hard ? 2 * static_cast<int>(1 + rng() % 8) : 1 + 2 * static_cast<int>(1 + rng() % 8);
    const Rational a(static_cast<long>(1000 + rng() % 4000), 1000);
    const Rational a2 = a + Rational(static_cast<long>(rng() % 1000), 1000);
    const Rational g(static_cast<long>(1000 + rng() % 1000), 1000);
    const Rational b(static_cast<long>(1001 + rng() % 3000), 1000);
    if (check_beta(mode, a, g, p, b)) ASSERT_TRUE(check_beta(mode, a2, g, p, b));
  }
}

TEST(BetaInterval, Examples) {
  const Rational res(1, 1000);
  const auto nonrep = beta_interval(GameMode::Nonrepetitive, Rational(12914, 6541), Rational(10635, 4441), 15, res);
  ASSERT_TRUE(nonrep.has_value());
  EXPECT_LE(nonrep->lo, Rational(174, 100));
  EXPECT_GE(nonrep->hi, Rational(178, 100));
  EXPECT_GE(nonrep->lo, Rational(172, 100));
  EXPECT_LE(nonrep->hi, Rational(180, 100));

  const auto hard7 = beta_interval(GameMode::Hard, 4, 1, 4, res);
  ASSERT_TRUE(hard7.has_value());
  EXPECT_LE(std::abs(hard7->lo.to_double() - 2.494), 0.01);
  EXPECT_LE(std::abs(hard7->hi.to_double() - 3.072), 0.01);

  EXPECT_FALSE(beta_interval(GameMode::Hard, 1, 1, 8, res).has_value());
}

// The reported bounds are feasible and one grid step outside is not.
TEST(BetaInterval, EndpointsAreTight) {
  const Rational res(1, 1000);
  for (const auto& [mode, a, g, p] : std::vector<std::tuple<GameMode, Rational, Rational, int>>{
           {GameMode::Hard, 4, 1, 4},
           {GameMode::Hard, Rational(27195, 9091), Rational(11699, 6806), 8},
           {GameMode::Nonrepetitive, Rational(12914, 6541), Rational(10635, 4441), 15}}) {
    const auto iv = beta_interval(mode, a, g, p, res);
    ASSERT_TRUE(iv.has_value());
    EXPECT_TRUE(check_beta(mode, a, g, p, iv->lo));
    EXPECT_TRUE(check_beta(mode, a, g, p, iv->hi));
    EXPECT_FALSE(check_beta(mode, a, g, p, iv->hi + res));
    if (iv->lo - res > Rational(1)) EXPECT_FALSE(check_beta(mode, a, g, p, iv->lo - res));
  }
}

TEST(Codec, RoundTrip) {
  for (const auto& c : {indicator_certificate(), six_certificate()}) {
    const auto bytes = encode(c);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 6), "TGCRT1");
    EXPECT_EQ(decode(bytes), c);
    EXPECT_EQ(certificate_from_json(to_json(c)), c);
  }
  const auto json = to_json(indicator_certificate(), &seven());
  EXPECT_NE(json.find("\"010201\""), std::string::npos);
  EXPECT_EQ(certificate_from_json(json), indicator_certificate());
}

TEST(Codec, Truncation) {
  const auto bytes = encode(indicator_certificate());
  for (std::size_t n = 0; n + 4 < bytes.size(); n += 3) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    try {
      decode(cut);
      FAIL() << "accepted truncation at " << n;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::FormatError);
    }
  }
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 30);
  try {
    decode(cut);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unexpected end"), std::string::npos) << e.what();
  }
}

// Any single flipped bit is caught by the decoder (bad magic, bad field or
// checksum).
TEST(Codec, EveryBitFlipDetected) {
  const auto bytes = encode(indicator_certificate());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      auto bad = bytes;
      bad[i] ^= static_cast<std::uint8_t>(1u << bit);
      EXPECT_THROW(decode(bad), Error) << "byte " << i << " bit " << bit;
    }
  }
}

TEST(Codec, BadMagicAndVersion) {
  auto bytes = encode(indicator_certificate());
  auto bad = bytes;
  bad[0] = 'X';
  try {
    decode(reseal(bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
  bad = bytes;
  bad[6] = 9;
  try {
    decode(reseal(bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported version"), std::string::npos);
  }
}

// A fingerprint byte flipped and re-sealed decodes, then fails verification.
TEST(Codec, FlippedFingerprintFailsVerification) {
  const auto c = indicator_certificate();
  const auto bytes = encode(c);
  std::size_t pos = bytes.size();
  for (std::size_t i = 0; i + 8 <= bytes.size(); ++i) {
    std::uint64_t v = 0;
    for (int j = 7; j >= 0; --j) v = (v << 8) | bytes[i + static_cast<std::size_t>(j)];
    if (v == c.lambda_fingerprint) {
      pos = i;
      break;
    }
  }
  ASSERT_LT(pos, bytes.size());
  auto bad = bytes;
  bad[pos + 3] ^= 0x40;
  const auto decoded = decode(reseal(bad));
  EXPECT_NE(decoded.lambda_fingerprint, c.lambda_fingerprint);
  const auto report = verify_certificate(decoded, seven());
  EXPECT_FALSE(report.passed);
  EXPECT_NE(report.summary().find("fingerprint mismatch"), std::string::npos);
}

TEST(Codec, Files) {
  const auto dir = std::filesystem::temp_directory_path() / "tg_cert_test";
  std::filesystem::create_directories(dir);
  const auto bin = (dir / "seven.tgc").string();
  save_certificate(bin, indicator_certificate());
  EXPECT_EQ(load_certificate(bin), indicator_certificate());
  const auto js = (dir / "seven.json").string();
  {
    std::ofstream f(js);
    f << to_json(indicator_certificate(), &seven());
  }
  EXPECT_EQ(load_certificate(js), indicator_certificate());
  EXPECT_THROW(load_certificate((dir / "missing.tgc").string()), Error);
  std::filesystem::remove_all(dir);
}
