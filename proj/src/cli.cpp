#include "tg/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "tg/certificate.hpp"
#include "tg/error.hpp"
#include "tg/game.hpp"
#include "tg/lambda.hpp"
#include "tg/registry.hpp"
#include "tg/service.hpp"
#include "tg/solver.hpp"

namespace tg::cli {

namespace {

using json = nlohmann::ordered_json;

// Automata known to need tens of gigabytes; refused without --big-memory.
constexpr int kBigMemoryMinK = 4;
constexpr int kBigMemoryMinPeriod = 15;
constexpr std::uint64_t kBigMemoryBudget = 64ull << 30;

struct Globals {
  bool json = false;
  int threads = 0;
  std::string memory_budget;
  bool big_memory = false;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string letters_text(std::span<const Letter> w) {
  if (w.empty()) return "ε";
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (Letter a : w) s.push_back(hex[a & 15]);
  return s;
}

class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err, std::istream& in)
      : g_(g), out(out), err(err), in(in) {}

  int threads() const {
    if (g_.threads > 0) return g_.threads;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  bool json_output() const { return g_.json; }

  LambdaBuildOptions build_options(int k, int pmax) const {
    LambdaBuildOptions o;
    o.threads = threads();
    if (!g_.memory_budget.empty()) {
      o.memory_budget_bytes = parse_byte_size(g_.memory_budget);
    } else if (const char* env = std::getenv("TG_MEMORY_BUDGET"); env && *env) {
      o.memory_budget_bytes = parse_byte_size(env);
    }
    if (k >= kBigMemoryMinK && pmax >= kBigMemoryMinPeriod) {
      if (!g_.big_memory) {
        throw Error(ErrorCode::ResourceLimit, "k=" + std::to_string(k) + " with p=" + std::to_string(pmax) +
                                                  " needs tens of gigabytes; pass --big-memory to proceed");
      }
      o.memory_budget_bytes = std::max(o.memory_budget_bytes, kBigMemoryBudget);
    }
    return o;
  }

  const Globals& g_;
  std::ostream& out;
  std::ostream& err;
  std::istream& in;
};

PeriodRange range_for(GameMode mode, std::optional<int> pmin, int pmax) {
  const int lo = pmin.value_or(min_period(mode));
  if (lo < 1 || pmax < lo || pmax > LambdaSet::kMaxPeriod) {
    throw Error(ErrorCode::InvalidArgument, "period range must satisfy 1 <= pmin <= p <= " +
                                                std::to_string(LambdaSet::kMaxPeriod));
  }
  return PeriodRange{lo, pmax};
}

void check_k(int k) {
  if (k < 2 || k > kMaxAlphabet) {
    throw Error(ErrorCode::InvalidArgument, "k must be in [2, " + std::to_string(kMaxAlphabet) + "]");
  }
}

// ---- lambda ----------------------------------------------------------------

struct LambdaArgs {
  std::string mode = "hard";
  int k = 0;
  std::optional<int> pmin;
  int p = 0;
  std::string dump;
};

int cmd_lambda(Context& cx, const LambdaArgs& a) {
  const GameMode mode = counting_mode(parse_game_mode(a.mode));
  check_k(a.k);
  const PeriodRange range = range_for(mode, a.pmin, a.p);
  const LambdaSet lambda = LambdaSet::build(a.k, range, cx.build_options(a.k, range.pmax));
  if (!a.dump.empty()) {
    const auto bytes = lambda.dump();
    std::ofstream f(a.dump, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + a.dump);
  }
  if (cx.json_output()) {
    json j;
    j["command"] = "lambda";
    j["mode"] = to_string(mode);
    j["k"] = a.k;
    j["pmin"] = range.pmin;
    j["pmax"] = range.pmax;
    j["states"] = lambda.size();
    j["fingerprint"] = hex64(lambda.fingerprint());
    j["maxLength"] = lambda.max_length();
    j["memoryBytes"] = lambda.memory_bytes();
    if (!a.dump.empty()) j["dump"] = a.dump;
    cx.out << j.dump(2) << '\n';
  } else {
    cx.out << "lambda " << to_string(mode) << " k=" << a.k << " periods " << range.pmin << ".." << range.pmax << '\n'
           << "states      " << lambda.size() << '\n'
           << "fingerprint " << hex64(lambda.fingerprint()) << '\n'
           << "max length  " << lambda.max_length() << '\n'
           << "memory      " << lambda.memory_bytes() << " bytes\n";
    if (!a.dump.empty()) cx.out << "dumped to " << a.dump << '\n';
  }
  return kExitOk;
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string mode = "hard";
  int k = 0;
  std::optional<int> pmin;
  int p = 0;
  std::string output;
  std::string json_mirror;
  SolverConfig cfg;
  bool verbose = false;
};

int cmd_solve(Context& cx, SolveArgs a) {
  const GameMode mode = counting_mode(parse_game_mode(a.mode));
  check_k(a.k);
  const PeriodRange range = range_for(mode, a.pmin, a.p);
  const LambdaSet lambda = LambdaSet::build(a.k, range, cx.build_options(a.k, range.pmax));
  a.cfg.threads = cx.threads();
  if (a.verbose) a.cfg.log = &cx.err;
  const SolveResult result = solve(lambda, mode, a.cfg);
  const Certificate cert = make_certificate(lambda, mode, result, "tg solve");
  const auto report = verify_certificate(cert, lambda, cx.threads());
  save_certificate(a.output, cert);
  if (!a.json_mirror.empty()) {
    std::ofstream f(a.json_mirror);
    f << to_json(cert, &lambda) << '\n';
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + a.json_mirror);
  }
  if (cx.json_output()) {
    json j;
    j["command"] = "solve";
    j["mode"] = to_string(mode);
    j["k"] = a.k;
    j["pmin"] = range.pmin;
    j["pmax"] = range.pmax;
    j["states"] = lambda.size();
    j["fingerprint"] = hex64(lambda.fingerprint());
    j["iterations"] = result.iterations;
    j["m"] = cert.m;
    j["M"] = cert.M;
    j["alpha"] = cert.alpha.to_string();
    j["gamma"] = cert.gamma.to_string();
    j["beta"] = cert.beta.is_zero() ? json(nullptr) : json(cert.beta.to_string());
    j["verified"] = report.passed;
    j["output"] = a.output;
    cx.out << j.dump(2) << '\n';
  } else {
    cx.out << "solved " << to_string(mode) << " k=" << a.k << " periods " << range.pmin << ".." << range.pmax << " ("
           << lambda.size() << " states, " << result.iterations << " iterations)\n"
           << "alpha " << cert.alpha << " (" << cert.alpha.to_double() << ")\n"
           << "gamma " << cert.gamma << " (" << cert.gamma.to_double() << ")\n"
           << "beta  ";
    if (cert.beta.is_zero()) cx.out << "none\n";
    else cx.out << cert.beta << " (" << cert.beta.to_double() << ")\n";
    cx.out << "thresholds m=" << cert.m << " M=" << cert.M << '\n'
           << "self-check " << (report.passed ? "PASS" : "FAIL") << '\n'
           << "wrote " << a.output << '\n';
  }
  return report.passed ? kExitOk : kExitFail;
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string path;
  std::string beta;
};

int cmd_verify(Context& cx, const VerifyArgs& a) {
  Certificate cert;
  try {
    cert = load_certificate(a.path);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::FormatError) throw;
    if (cx.json_output()) {
      json j;
      j["command"] = "verify";
      j["result"] = "FAIL";
      j["failures"] = json::array({std::string("unreadable certificate: ") + e.what()});
      cx.out << j.dump(2) << '\n';
    } else {
      cx.out << "FAIL\n  failure: unreadable certificate: " << e.what() << '\n';
    }
    return kExitFail;
  }
  check_k(cert.k);
  const auto report = verify_certificate(cert, cx.build_options(cert.k, cert.range.pmax));
  std::optional<Rational> beta;
  std::optional<Rational> margin;
  if (!a.beta.empty()) {
    beta = Rational::parse(a.beta);
    margin = beta_margin(cert.mode, cert.alpha, cert.gamma, cert.range.pmax, *beta);
  }
  const bool beta_ok = !margin || margin->sign() >= 0;
  const bool passed = report.passed && beta_ok;
  if (cx.json_output()) {
    json j;
    j["command"] = "verify";
    j["result"] = passed ? "PASS" : "FAIL";
    j["mode"] = to_string(cert.mode);
    j["k"] = cert.k;
    j["pmin"] = cert.range.pmin;
    j["pmax"] = cert.range.pmax;
    j["states"] = report.states_checked;
    j["nonzero"] = report.nonzero;
    j["alpha"] = cert.alpha.to_string();
    j["gamma"] = cert.gamma.to_string();
    j["certificateValid"] = report.passed;
    j["failures"] = report.failures;
    auto v = json::array();
    for (const auto& [state, branch] : report.violations) v.push_back({{"state", state}, {"branch", branch}});
    j["violations"] = std::move(v);
    j["tightestAlpha"] = report.tightest_alpha ? json(report.tightest_alpha->to_string()) : json(nullptr);
    j["tightestState"] = report.tightest_state ? json(*report.tightest_state) : json(nullptr);
    if (beta) {
      j["beta"] = beta->to_string();
      j["betaHolds"] = beta_ok;
      j["betaMargin"] = margin->to_string();
    }
    cx.out << j.dump(2) << '\n';
  } else {
    cx.out << (passed ? "PASS" : "FAIL") << '\n';
    cx.out << "certificate " << to_string(cert.mode) << " k=" << cert.k << " periods " << cert.range.pmin << ".."
           << cert.range.pmax << ": " << report.summary() << '\n';
    if (beta) {
      cx.out << "beta " << *beta << (beta_ok ? " holds" : " fails") << " (margin " << *margin << ", "
             << margin->to_double() << ")\n";
    }
  }
  return passed ? kExitOk : kExitFail;
}

// ---- beta ------------------------------------------------------------------

struct BetaArgs {
  std::string mode = "hard";
  std::string alpha;
  std::string gamma;
  int p = 0;
  std::string beta;
  bool interval = false;
  std::string resolution = "1/1000";
};

int cmd_beta(Context& cx, const BetaArgs& a) {
  const GameMode mode = counting_mode(parse_game_mode(a.mode));
  const Rational alpha = Rational::parse(a.alpha);
  const Rational gamma = Rational::parse(a.gamma);
  if (a.beta.empty() && !a.interval) throw Error(ErrorCode::InvalidArgument, "give --beta, --interval or both");
  json j;
  j["command"] = "beta";
  j["mode"] = to_string(mode);
  j["alpha"] = alpha.to_string();
  j["gamma"] = gamma.to_string();
  j["p"] = a.p;
  bool ok = true;
  if (!a.beta.empty()) {
    const Rational beta = Rational::parse(a.beta);
    const Rational margin = beta_margin(mode, alpha, gamma, a.p, beta);
    const bool holds = margin.sign() >= 0;
    ok = ok && holds;
    j["beta"] = beta.to_string();
    j["holds"] = holds;
    j["margin"] = margin.to_string();
    if (!cx.json_output()) {
      cx.out << (holds ? "PASS" : "FAIL") << ": beta " << beta << (holds ? " satisfies" : " violates")
             << " the inequality (margin " << margin << ", " << margin.to_double() << ")\n";
    }
  }
  if (a.interval) {
    const Rational res = Rational::parse(a.resolution);
    const auto iv = beta_interval(mode, alpha, gamma, a.p, res);
    ok = ok && iv.has_value();
    j["resolution"] = res.to_string();
    j["interval"] = iv ? json::array({iv->lo.to_string(), iv->hi.to_string()}) : json(nullptr);
    if (!cx.json_output()) {
      if (iv) {
        cx.out << "interval [" << iv->lo << ", " << iv->hi << "] (" << iv->lo.to_double() << " .. "
               << iv->hi.to_double() << ")\n";
      } else {
        cx.out << "interval empty\n";
      }
    }
  }
  j["result"] = ok ? "PASS" : "FAIL";
  if (cx.json_output()) cx.out << j.dump(2) << '\n';
  return ok ? kExitOk : kExitFail;
}

// ---- game solve ------------------------------------------------------------

struct GameSolveArgs {
  std::string mode = "nonrep";
  int k = 0;
  int max_plies = 24;
  std::uint64_t node_budget = ForcedWinOptions{}.node_budget;
  bool strategy = false;
};

int cmd_game_solve(Context& cx, const GameSolveArgs& a) {
  const GameMode mode = parse_game_mode(a.mode);
  check_k(a.k);
  if (a.max_plies < 0) throw Error(ErrorCode::InvalidArgument, "max plies must be nonnegative");
  const auto r = solve_forced_win(mode, a.k, a.max_plies, ForcedWinOptions{a.node_budget});
  const bool won = r.outcome == ForcedWinResult::Outcome::BenWins;
  if (cx.json_output()) {
    json j;
    j["command"] = "game solve";
    j["mode"] = to_string(mode);
    j["k"] = a.k;
    j["maxPlies"] = a.max_plies;
    j["outcome"] = won ? "BEN_WINS" : "NOT_WITHIN_DEPTH";
    j["depth"] = won ? json(r.depth) : json(nullptr);
    j["nodes"] = r.nodes;
    json table = json::object();
    for (const auto& [w, m] : r.strategy) table[w.empty() ? "" : w] = to_string(m);
    j["strategy"] = std::move(table);
    cx.out << j.dump(2) << '\n';
  } else {
    if (won) {
      cx.out << "BEN WINS at depth " << r.depth << " (" << r.nodes << " nodes, " << r.strategy.size()
             << " strategy entries)\n";
      if (a.strategy) {
        for (const auto& [w, m] : r.strategy) cx.out << "  " << (w.empty() ? "ε" : w) << " -> " << to_string(m) << '\n';
      }
    } else {
      cx.out << "NOT WITHIN DEPTH " << a.max_plies << " (" << r.nodes << " nodes)\n";
    }
  }
  return won ? kExitOk : kExitFail;
}

// ---- weights from a file or the registry -----------------------------------

std::shared_ptr<const WeightModel> load_weights(Context& cx, const std::string& cert_path, GameMode mode, int k,
                                                CertificateRegistry& registry) {
  if (cert_path.empty()) return registry.get(mode, k);
  const Certificate cert = load_certificate(cert_path);
  auto lambda = std::make_shared<const LambdaSet>(
      LambdaSet::build(cert.k, cert.range, cx.build_options(cert.k, cert.range.pmax)));
  const auto report = verify_certificate(cert, *lambda, cx.threads());
  if (!report.passed) throw Error(ErrorCode::Unsupported, "certificate " + cert_path + " fails verification");
  auto model = std::make_shared<const WeightModel>(lambda, std::make_shared<const Certificate>(cert));
  model->check_compatible(mode, k);
  return model;
}

// ---- oracle ----------------------------------------------------------------

struct OracleArgs {
  std::string mode = "hard";
  int k = 0;
  int n = 5;
  std::string ben = "weight-min";
  std::uint64_t seed = 1;
  std::string beta;
  std::string cert;
  std::uint64_t max_words = OracleOptions{}.max_words;
};

int cmd_oracle(Context& cx, const OracleArgs& a) {
  const GameMode mode = parse_game_mode(a.mode);
  check_k(a.k);
  if (a.n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  CertificateRegistry registry(cx.build_options(a.k, 0));
  const auto weights = load_weights(cx, a.cert, mode, a.k, registry);
  const BenEngine engine = parse_ben_engine(a.ben);
  const BenStrategy phi = engine == BenEngine::WeightMin ? ben_weight_min(weights)
                          : engine == BenEngine::Random  ? ben_random(a.seed)
                                                         : ben_script_3();
  Rational beta = weights->certificate().beta;
  if (!a.beta.empty()) beta = Rational::parse(a.beta);
  if (beta <= Rational(1)) throw Error(ErrorCode::InvalidArgument, "no beta above 1 recorded; pass --beta");
  const auto r = weighted_growth_oracle(mode, *weights, phi, a.n, beta, OracleOptions{a.max_words});
  if (cx.json_output()) {
    json j;
    j["command"] = "oracle";
    j["mode"] = to_string(mode);
    j["k"] = a.k;
    j["ben"] = phi.name();
    j["beta"] = beta.to_string();
    auto levels = json::array();
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
      json l;
      l["n"] = i;
      l["words"] = r.sizes[i];
      l["weight"] = r.weights[i].str();
      l["ratio"] = i < r.ratios.size() && r.ratios[i] ? json(r.ratios[i]->to_double()) : json(nullptr);
      levels.push_back(std::move(l));
    }
    j["levels"] = std::move(levels);
    j["minRatio"] = r.min_ratio.to_double();
    j["result"] = r.all_ratios_at_least_beta ? "PASS" : "FAIL";
    cx.out << j.dump(2) << '\n';
  } else {
    cx.out << "oracle " << to_string(mode) << " k=" << a.k << " ben=" << phi.name() << " beta=" << beta << '\n';
    cx.out << std::setw(3) << "n" << std::setw(12) << "words" << std::setw(24) << "weight" << std::setw(12) << "ratio"
           << '\n';
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
      std::ostringstream ratio;
      if (i < r.ratios.size() && r.ratios[i]) ratio << std::fixed << std::setprecision(4) << r.ratios[i]->to_double();
      else ratio << "-";
      cx.out << std::setw(3) << i << std::setw(12) << r.sizes[i] << std::setw(24) << r.weights[i].str() << std::setw(12)
             << ratio.str() << '\n';
    }
    cx.out << (r.all_ratios_at_least_beta ? "PASS" : "FAIL") << ": min ratio " << std::fixed << std::setprecision(4)
           << r.min_ratio.to_double() << (r.all_ratios_at_least_beta ? " >= " : " < ") << "beta\n";
    cx.out.unsetf(std::ios::floatfield);
  }
  return r.all_ratios_at_least_beta ? kExitOk : kExitFail;
}

// ---- play ------------------------------------------------------------------

struct PlayArgs {
  std::string mode = "hard";
  int k = 6;
  std::string role = "ben";
  std::string ben;
  std::uint64_t seed = 1;
  int lookahead = 4;
  std::optional<std::size_t> length_target;
  std::string cert;
};

void print_view(Context& cx, const StateView& v) {
  if (cx.json_output()) {
    cx.out << state_view_json(v) << '\n';
    return;
  }
  cx.out << "word " << letters_text(v.word);
  for (const auto& e : v.last_erased) cx.out << "  (erased " << letters_text(e) << ")";
  if (v.terminal != "none") cx.out << "  [" << v.terminal << "]";
  else cx.out << "  " << to_string(v.turn) << " to move";
  cx.out << '\n';
}

int cmd_play(Context& cx, const PlayArgs& a) {
  const GameMode mode = parse_game_mode(a.mode);
  auto registry = std::make_shared<CertificateRegistry>(cx.build_options(a.k, 0));
  if (!a.cert.empty()) registry->add(load_certificate(a.cert));
  SessionManager sessions(registry);
  SessionOptions o;
  o.mode = mode;
  o.k = a.k;
  o.human = a.role == "ann" ? Player::Ann : Player::Ben;
  if (a.role != "ann" && a.role != "ben") throw Error(ErrorCode::InvalidArgument, "role must be ann or ben");
  if (!a.ben.empty()) o.ben_engine = parse_ben_engine(a.ben);
  o.seed = a.seed;
  o.lookahead = a.lookahead;
  o.length_target = a.length_target;
  StateView v = sessions.create(o);
  if (!cx.json_output()) {
    cx.out << "playing " << to_string(mode) << " over " << a.k << " letters as " << to_string(o.human)
           << "; enter a hex letter, P to pass, hint, or quit\n";
  }
  print_view(cx, v);
  std::string line;
  while (v.terminal == "none") {
    if (v.turn != o.human) {
      const auto [move, next] = sessions.engine_move(v.id);
      v = next;
      if (!cx.json_output()) cx.out << "engine " << (move ? to_string(*move) : std::string("resigns")) << '\n';
      print_view(cx, v);
      continue;
    }
    if (!cx.json_output()) cx.out << "> " << std::flush;
    if (!std::getline(cx.in, line)) break;
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    if (line == "quit" || line == "q") break;
    if (line == "hint") {
      const Hint h = sessions.hint(v.id);
      if (cx.json_output()) {
        cx.out << hint_json(h) << '\n';
      } else {
        auto moves = h.moves;
        std::sort(moves.begin(), moves.end(), [](const HintEntry& x, const HintEntry& y) { return x.rank < y.rank; });
        for (const auto& e : moves) {
          cx.out << "  " << e.rank << ". " << to_string(e.move) << " weight "
                 << (e.weight ? std::to_string(*e.weight) : std::string("-")) << (e.creates_square ? " square" : "")
                 << (e.two_minus_power ? " 2-power" : "") << (e.safe ? " safe" : " unsafe") << '\n';
        }
      }
      continue;
    }
    try {
      v = sessions.submit_move(v.id, parse_move(line, a.k));
      print_view(cx, v);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IllegalMove && e.code() != ErrorCode::InvalidArgument) throw;
      cx.err << to_string(e.code()) << ": " << e.what() << '\n';
    }
  }
  if (!cx.json_output()) cx.out << "result " << v.terminal << " after " << v.ply_count << " plies\n";
  return kExitOk;
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string transcripts;
  std::vector<std::string> certs;
};

int cmd_serve(Context& cx, const ServeArgs& a) {
  auto registry = std::make_shared<CertificateRegistry>(cx.build_options(kServiceMinK, 0));
  for (const auto& path : a.certs) registry->add(load_certificate(path));
  SessionManager sessions(registry, a.transcripts.empty() ? std::nullopt : std::optional<std::string>(a.transcripts));
  HttpService http(sessions);
  const int port = http.bind(a.host, a.port);
  if (cx.json_output()) {
    cx.out << json{{"command", "serve"}, {"host", a.host}, {"port", port}}.dump() << std::endl;
  } else {
    cx.out << "listening on http://" << a.host << ":" << port << "/v1" << std::endl;
  }
  http.listen();
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return kExitUsage;
    case ErrorCode::ResourceLimit: return kExitResource;
    default: return kExitFail;
  }
}

}  // namespace

std::uint64_t parse_byte_size(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty byte size");
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad byte size '" + text + "'");
  }
  std::string suffix = text.substr(pos);
  if (!suffix.empty() && (suffix.back() == 'B' || suffix.back() == 'b')) suffix.pop_back();
  int shift = 0;
  if (suffix == "K" || suffix == "k" || suffix == "Ki") shift = 10;
  else if (suffix == "M" || suffix == "m" || suffix == "Mi") shift = 20;
  else if (suffix == "G" || suffix == "g" || suffix == "Gi") shift = 30;
  else if (suffix == "T" || suffix == "t" || suffix == "Ti") shift = 40;
  else if (!suffix.empty()) throw Error(ErrorCode::InvalidArgument, "bad byte size '" + text + "'");
  if (shift > 0 && v > (~0ull >> shift)) throw Error(ErrorCode::InvalidArgument, "byte size overflows");
  return static_cast<std::uint64_t>(v) << shift;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"tg: square-avoidance games, weight certificates and play"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_option("--threads", g.threads, "Worker threads (default: logical cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--memory-budget", g.memory_budget, "Automaton memory budget, e.g. 8G (env TG_MEMORY_BUDGET)");
  app.add_flag("--big-memory", g.big_memory, "Allow automata that need tens of gigabytes");

  int (*dispatch)(Context&, const void*) = nullptr;
  const void* payload = nullptr;

  LambdaArgs la;
  auto* lambda = app.add_subcommand("lambda", "Build the prefix automaton and print statistics");
  lambda->fallthrough();
  lambda->add_option("--mode", la.mode, "nonrep | hard | erase");
  lambda->add_option("--k", la.k, "Alphabet size")->required();
  lambda->add_option("--pmin", la.pmin, "Smallest period (default by mode)");
  lambda->add_option("--p,--pmax", la.p, "Largest period")->required();
  lambda->add_option("--dump", la.dump, "Write the automaton (TGLAM1)");
  lambda->callback([&] {
    payload = &la;
    dispatch = [](Context& cx, const void* p) { return cmd_lambda(cx, *static_cast<const LambdaArgs*>(p)); };
  });

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "Solve for coefficients and write a certificate");
  solve_cmd->fallthrough();
  solve_cmd->add_option("--mode", sa.mode, "nonrep | hard | erase");
  solve_cmd->add_option("--k", sa.k, "Alphabet size")->required();
  solve_cmd->add_option("--pmin", sa.pmin, "Smallest period (default by mode)");
  solve_cmd->add_option("--p,--pmax", sa.p, "Largest period")->required();
  solve_cmd->add_option("-o,--output", sa.output, "Certificate path (TGCRT1)")->required();
  solve_cmd->add_option("--json-mirror", sa.json_mirror, "Also write the JSON mirror");
  solve_cmd->add_option("--grid", sa.cfg.grid, "Coefficient mean after normalization");
  solve_cmd->add_option("--m-fraction", sa.cfg.m_fraction, "Lower threshold as a fraction of the grid");
  solve_cmd->add_option("--M-fraction", sa.cfg.M_fraction, "Upper cap as a fraction of the grid");
  solve_cmd->add_option("--max-iterations", sa.cfg.max_iterations, "Iteration limit");
  solve_cmd->add_option("--tolerance", sa.cfg.tolerance, "Stop when the relative change drops below this");
  solve_cmd->add_flag("--random-init", sa.cfg.random_init, "Start from random positive coefficients");
  solve_cmd->add_option("--seed", sa.cfg.seed, "Seed for --random-init");
  solve_cmd->add_flag("--verbose", sa.verbose, "Log iterations to standard error");
  solve_cmd->callback([&] {
    payload = &sa;
    dispatch = [](Context& cx, const void* p) { return cmd_solve(cx, *static_cast<const SolveArgs*>(p)); };
  });

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Exact check of a certificate file");
  verify->fallthrough();
  verify->add_option("certificate", va.path, "Certificate path")->required();
  verify->add_option("--beta", va.beta, "Also check the beta inequality at this num/den");
  verify->callback([&] {
    payload = &va;
    dispatch = [](Context& cx, const void* p) { return cmd_verify(cx, *static_cast<const VerifyArgs*>(p)); };
  });

  BetaArgs ba;
  auto* beta = app.add_subcommand("beta", "Check the beta inequality for given constants");
  beta->fallthrough();
  beta->add_option("--mode", ba.mode, "nonrep | hard | erase");
  beta->add_option("--alpha", ba.alpha, "num/den")->required();
  beta->add_option("--gamma", ba.gamma, "num/den")->required();
  beta->add_option("--p", ba.p, "Largest period")->required();
  beta->add_option("--beta", ba.beta, "num/den to test");
  beta->add_flag("--interval", ba.interval, "Report the feasible interval");
  beta->add_option("--resolution", ba.resolution, "Interval grid step, num/den");
  beta->callback([&] {
    payload = &ba;
    dispatch = [](Context& cx, const void* p) { return cmd_beta(cx, *static_cast<const BetaArgs*>(p)); };
  });

  GameSolveArgs ga;
  auto* game = app.add_subcommand("game", "Game analysis");
  game->fallthrough();
  game->require_subcommand(1);
  auto* game_solve = game->add_subcommand("solve", "Search for a forced win of Ben");
  game_solve->fallthrough();
  game_solve->add_option("--mode", ga.mode, "nonrep | hard");
  game_solve->add_option("--k", ga.k, "Alphabet size")->required();
  game_solve->add_option("--max-plies", ga.max_plies, "Depth limit in plies");
  game_solve->add_option("--node-budget", ga.node_budget, "Abort after this many nodes");
  game_solve->add_flag("--strategy", ga.strategy, "Print the strategy table");
  game_solve->callback([&] {
    payload = &ga;
    dispatch = [](Context& cx, const void* p) { return cmd_game_solve(cx, *static_cast<const GameSolveArgs*>(p)); };
  });

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Weighted growth of Ann's position sets");
  oracle->fallthrough();
  oracle->add_option("--mode", oa.mode, "nonrep | hard | erase");
  oracle->add_option("--k", oa.k, "Alphabet size")->required();
  oracle->add_option("--n", oa.n, "Number of Ann moves");
  oracle->add_option("--ben", oa.ben, "weight-min | random | script3");
  oracle->add_option("--seed", oa.seed, "Seed for random Ben");
  oracle->add_option("--beta", oa.beta, "Growth target, num/den (default: the certificate's)");
  oracle->add_option("--cert", oa.cert, "Certificate file (default: solve on demand)");
  oracle->add_option("--max-words", oa.max_words, "Abort when a level exceeds this many words");
  oracle->callback([&] {
    payload = &oa;
    dispatch = [](Context& cx, const void* p) { return cmd_oracle(cx, *static_cast<const OracleArgs*>(p)); };
  });

  PlayArgs pa;
  auto* play = app.add_subcommand("play", "Play against the engine in the terminal");
  play->fallthrough();
  play->add_option("--mode", pa.mode, "nonrep | hard | erase");
  play->add_option("--k", pa.k, "Alphabet size");
  play->add_option("--role", pa.role, "Your seat: ann | ben");
  play->add_option("--ben-engine", pa.ben, "Engine Ben: weight-min | random | script3");
  play->add_option("--seed", pa.seed, "Seed for random Ben");
  play->add_option("--lookahead", pa.lookahead, "Engine Ann lookahead in plies");
  play->add_option("--length-target", pa.length_target, "Ann wins at this length");
  play->add_option("--cert", pa.cert, "Certificate file (default: solve on demand)");
  play->callback([&] {
    payload = &pa;
    dispatch = [](Context& cx, const void* p) { return cmd_play(cx, *static_cast<const PlayArgs*>(p)); };
  });

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP play service");
  serve->fallthrough();
  serve->add_option("--host", sv.host, "Bind address");
  serve->add_option("--port", sv.port, "Port (0 picks a free one)");
  serve->add_option("--transcripts", sv.transcripts, "Directory for JSON-lines transcripts");
  serve->add_option("--cert", sv.certs, "Preload certificate files");
  serve->callback([&] {
    payload = &sv;
    dispatch = [](Context& cx, const void* p) { return cmd_serve(cx, *static_cast<const ServeArgs*>(p)); };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  if (!dispatch) return kExitUsage;
  Context cx(g, out, err, in);
  try {
    return dispatch(cx, payload);
  } catch (const Error& e) {
    err << "tg: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::bad_alloc&) {
    err << "tg: RESOURCE_LIMIT: out of memory\n";
    return kExitResource;
  } catch (const std::exception& e) {
    err << "tg: " << e.what() << '\n';
    return kExitFail;
  }
}

}  // namespace tg::cli
