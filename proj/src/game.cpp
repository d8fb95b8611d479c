#include "tg/game.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tg/error.hpp"

namespace tg {

namespace {

constexpr PeriodRange kTwoMinusPeriods{2, PeriodRange::kUnbounded};

bool creates_square(GameMode mode, std::span<const Letter> w) {
  return ends_with_square(w, game_periods(mode));
}

// Letters that are pairwise distinguishable after w: every letter of w plus
// the smallest absent one.
std::vector<Letter> representative_letters(std::span<const Letter> w, int k) {
  std::array<bool, kMaxAlphabet> seen{};
  for (Letter a : w) seen[a] = true;
  std::vector<Letter> out;
  bool fresh_added = false;
  for (int a = 0; a < k; ++a) {
    if (seen[a]) {
      out.push_back(static_cast<Letter>(a));
    } else if (!fresh_added) {
      out.push_back(static_cast<Letter>(a));
      fresh_added = true;
    }
  }
  return out;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::vector<Letter> erase_unchecked(std::vector<Letter> w, std::vector<std::vector<Letter>>* erased) {
  for (;;) {
    const auto periods = square_suffix_periods(w, PeriodRange::unbounded(1));
    if (periods.empty()) return w;
    const auto q = static_cast<std::size_t>(periods.front());
    if (erased) erased->emplace_back(w.end() - static_cast<std::ptrdiff_t>(q), w.end());
    w.resize(w.size() - q);
  }
}

// Ben's options as raw moves, letters ascending then PASS.
std::vector<Move> ben_options(GameMode mode, std::span<const Letter> w, int k, bool symmetric) {
  std::vector<Move> out;
  const auto last = last_letter(w);
  if (symmetric) {
    for (Letter a : representative_letters(w, k)) {
      if (mode == GameMode::Hard && last && a == *last) continue;
      out.push_back(Move::play(a));
    }
  } else {
    for (int a = 0; a < k; ++a) {
      if (mode == GameMode::Hard && last && a == *last) continue;
      out.push_back(Move::play(static_cast<Letter>(a)));
    }
  }
  if (mode == GameMode::Hard) out.push_back(Move::pass());
  return out;
}

// Word after Ben's move, erase resolved. Sets ben_won when the move ends the
// game.
std::vector<Letter> after_ben(GameMode mode, std::span<const Letter> w, const Move& m, bool& ben_won) {
  std::vector<Letter> out(w.begin(), w.end());
  ben_won = false;
  if (m.is_pass()) return out;
  out.push_back(*m.letter);
  if (mode == GameMode::Erase) return erase_unchecked(std::move(out), nullptr);
  ben_won = creates_square(mode, out);
  return out;
}

bool survives(GameMode mode, std::vector<Letter>& w, int depth, const WeightModel& weights);

bool ann_has_answer(GameMode mode, std::vector<Letter>& w, int depth, const WeightModel& weights) {
  for (Letter a : representative_letters(w, weights.alphabet_size())) {
    w.push_back(a);
    const bool ok = ann_safe(mode, w, weights) && survives(mode, w, depth, weights);
    w.pop_back();
    if (ok) return true;
  }
  return false;
}

// Ben to move at w; true when Ann can keep playing safely for depth plies.
bool survives(GameMode mode, std::vector<Letter>& w, int depth, const WeightModel& weights) {
  if (depth <= 0) return true;
  for (const Move& m : ben_options(mode, w, weights.alphabet_size(), true)) {
    bool ben_won = false;
    auto next = after_ben(mode, w, m, ben_won);
    if (ben_won) return false;
    if (depth == 1) continue;
    if (!ann_has_answer(mode, next, depth - 2, weights)) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(Player p) { return p == Player::Ann ? "ann" : "ben"; }

std::string_view to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "none";
    case Terminal::BenWon: return "ben_won";
    case Terminal::LengthTargetReached: return "length_target_reached";
  }
  return "?";
}

std::string to_string(const Move& m) {
  if (m.is_pass()) return "P";
  return to_string(std::span<const Letter>(&*m.letter, 1));
}

Move parse_move(std::string_view text, int k) {
  if (text == "P" || text == "p" || text == "pass" || text == "PASS") return Move::pass();
  const Word w = parse_word(text, k);
  if (w.size() != 1) throw Error(ErrorCode::InvalidArgument, "a move is one letter or PASS");
  return Move::play(w[0]);
}

PeriodRange game_periods(GameMode mode) {
  return PeriodRange::unbounded(mode == GameMode::Nonrepetitive ? 2 : 1);
}

GameState::GameState(GameMode mode, int k, std::optional<std::size_t> length_target)
    : mode_(mode), k_(k), word_(k) {
  length_target_ = length_target.value_or(mode == GameMode::Erase ? 64 : 0);
}

GameState GameState::from_position(GameMode mode, int k, std::span<const Letter> word, Player turn,
                                   std::optional<std::size_t> length_target) {
  GameState s(mode, k, length_target);
  s.word_ = Word(std::vector<Letter>(word.begin(), word.end()), k);
  if (!is_square_free(word, game_periods(mode))) {
    throw Error(ErrorCode::InvalidArgument, "position " + to_string(word) + " already contains a square");
  }
  s.turn_ = turn;
  if (s.length_target_ > 0 && word.size() >= s.length_target_) s.terminal_ = Terminal::LengthTargetReached;
  return s;
}

std::vector<Move> legal_moves(const GameState& s) {
  if (s.terminal() != Terminal::None) throw Error(ErrorCode::IllegalMove, "game is over");
  if (s.turn() == Player::Ann) {
    std::vector<Move> out;
    for (int a = 0; a < s.alphabet_size(); ++a) out.push_back(Move::play(static_cast<Letter>(a)));
    return out;
  }
  return ben_options(s.mode(), s.word().letters(), s.alphabet_size(), false);
}

std::optional<std::string> illegal_reason(const GameState& s, const Move& m) {
  if (s.terminal() != Terminal::None) return "game over";
  if (m.is_pass()) {
    if (s.turn() == Player::Ben && s.mode() == GameMode::Hard) return std::nullopt;
    return "pass not allowed";
  }
  if (*m.letter >= s.alphabet_size()) return "out of alphabet";
  if (s.turn() == Player::Ben && s.mode() == GameMode::Hard) {
    const auto last = last_letter(s.word().letters());
    if (last && *last == *m.letter) return "repeat";
  }
  return std::nullopt;
}

bool is_legal(const GameState& s, const Move& m) { return !illegal_reason(s, m).has_value(); }

EraseResult erase_reduce(std::span<const Letter> w) {
  if (!w.empty() && !is_square_free(w.first(w.size() - 1), PeriodRange::unbounded(1))) {
    throw Error(ErrorCode::InvalidArgument, "erase_reduce needs a square-free word before the last letter");
  }
  EraseResult r;
  r.word = erase_unchecked(std::vector<Letter>(w.begin(), w.end()), &r.erased);
  return r;
}

void apply_move_in_place(GameState& s, const Move& m) {
  if (const auto reason = illegal_reason(s, m)) {
    throw Error(ErrorCode::IllegalMove, *reason + ": move " + to_string(m) + " by " +
                                            std::string(to_string(s.turn_)) + " in " +
                                            std::string(to_string(s.mode_)));
  }
  PlyRecord rec;
  rec.ply = s.ply() + 1;
  rec.mover = s.turn_;
  rec.move = m;
  if (!m.is_pass()) {
    std::vector<Letter> w(s.word_.letters().begin(), s.word_.letters().end());
    w.push_back(*m.letter);
    if (s.mode_ == GameMode::Erase) {
      w = erase_unchecked(std::move(w), &rec.erased);
    } else if (creates_square(s.mode_, w)) {
      s.terminal_ = Terminal::BenWon;
    }
    s.word_ = Word(std::move(w), s.k_);
  }
  rec.word_after.assign(s.word_.letters().begin(), s.word_.letters().end());
  s.history_.push_back(std::move(rec));
  s.turn_ = s.turn_ == Player::Ann ? Player::Ben : Player::Ann;
  if (s.terminal_ == Terminal::None && s.length_target_ > 0 && s.word_.size() >= s.length_target_) {
    s.terminal_ = Terminal::LengthTargetReached;
  }
}

GameState apply_move(const GameState& s, const Move& m) {
  GameState next = s;
  apply_move_in_place(next, m);
  return next;
}

std::string transcript_jsonl(const GameState& s) {
  std::ostringstream os;
  for (const auto& rec : s.history()) {
    nlohmann::ordered_json j;
    j["ply"] = rec.ply;
    j["mover"] = to_string(rec.mover);
    j["move"] = to_string(rec.move);
    j["word"] = to_string(rec.word_after);
    auto erased = nlohmann::json::array();
    for (const auto& e : rec.erased) erased.push_back(to_string(e));
    j["erased"] = std::move(erased);
    os << j.dump() << '\n';
  }
  return os.str();
}

Letter normalize_letter(std::span<const Letter> w, Letter a) {
  std::array<int, 256> rank;
  rank.fill(-1);
  int next = 0;
  for (Letter b : w) {
    if (rank[b] < 0) rank[b] = next++;
  }
  return static_cast<Letter>(rank[a] >= 0 ? rank[a] : next);
}

Letter denormalize_letter(std::span<const Letter> w, Letter normalized, int k) {
  std::vector<Letter> order;
  std::array<bool, 256> seen{};
  for (Letter b : w) {
    if (!seen[b]) {
      seen[b] = true;
      order.push_back(b);
    }
  }
  if (normalized < order.size()) return order[normalized];
  if (normalized != order.size()) throw Error(ErrorCode::InvalidArgument, "normalized letter skips a fresh letter");
  for (int a = 0; a < k; ++a) {
    if (!seen[static_cast<std::size_t>(a)]) return static_cast<Letter>(a);
  }
  throw Error(ErrorCode::InvalidArgument, "no fresh letter left in the alphabet");
}

WeightModel::WeightModel(std::shared_ptr<const LambdaSet> lambda, std::shared_ptr<const Certificate> cert)
    : lambda_(std::move(lambda)), cert_(std::move(cert)) {
  if (!lambda_ || !cert_) throw Error(ErrorCode::InvalidArgument, "weight model needs an automaton and a certificate");
  if (cert_->k != lambda_->alphabet_size() || cert_->range != lambda_->range() ||
      cert_->lambda_fingerprint != lambda_->fingerprint() ||
      cert_->coefficients.values.size() != lambda_->size()) {
    throw Error(ErrorCode::InvalidArgument, "certificate does not belong to this automaton");
  }
}

std::uint32_t WeightModel::weight(std::span<const Letter> w) const {
  const std::size_t keep = std::min(w.size(), lambda_->max_length() + 1);
  return cert_->coefficients.values[lambda_->state_of(w.last(keep)).value];
}

void WeightModel::check_compatible(GameMode game_mode, int k) const {
  if (k != alphabet_size()) {
    throw Error(ErrorCode::InvalidArgument, "certificate is for k=" + std::to_string(alphabet_size()) +
                                                ", game has k=" + std::to_string(k));
  }
  if (counting_mode(game_mode) != cert_->mode) {
    throw Error(ErrorCode::InvalidArgument, "a " + std::string(to_string(game_mode)) + " game needs a " +
                                                std::string(to_string(counting_mode(game_mode))) + " certificate");
  }
}

bool ann_safe(GameMode mode, std::span<const Letter> u, const WeightModel& weights) {
  if (creates_square(mode, u)) return false;
  if (ends_with_two_minus_power(u, kTwoMinusPeriods, true)) return false;
  return weights.weight(u) > 0;
}

std::vector<AnnEvaluation> evaluate_ann_moves(const GameState& s, const WeightModel& weights, int lookahead_plies) {
  if (s.terminal() != Terminal::None) throw Error(ErrorCode::IllegalMove, "game is over");
  if (s.turn() != Player::Ann) throw Error(ErrorCode::NotYourTurn, "Ann is not to move");
  weights.check_compatible(s.mode(), s.alphabet_size());
  std::vector<Letter> w(s.word().letters().begin(), s.word().letters().end());
  const auto reps = representative_letters(w, s.alphabet_size());
  const Letter fresh_rep = reps.back();
  const bool has_fresh = std::find(w.begin(), w.end(), fresh_rep) == w.end();

  std::vector<AnnEvaluation> out;
  std::optional<AnnEvaluation> fresh_eval;
  for (int a = 0; a < s.alphabet_size(); ++a) {
    const auto letter = static_cast<Letter>(a);
    const bool is_fresh = std::find(w.begin(), w.end(), letter) == w.end();
    if (is_fresh && has_fresh && fresh_eval) {
      AnnEvaluation e = *fresh_eval;
      e.letter = letter;
      out.push_back(e);
      continue;
    }
    AnnEvaluation e;
    e.letter = letter;
    w.push_back(letter);
    if (!creates_square(s.mode(), w) && !ends_with_two_minus_power(w, kTwoMinusPeriods, true)) {
      e.weight = weights.weight(w);
      e.safe = e.weight > 0;
      e.survives = e.safe && survives(s.mode(), w, lookahead_plies, weights);
    }
    w.pop_back();
    if (is_fresh) fresh_eval = e;
    out.push_back(e);
  }
  return out;
}

Move ann_move(const GameState& s, const WeightModel& weights, int lookahead_plies) {
  const auto evals = evaluate_ann_moves(s, weights, lookahead_plies);
  const AnnEvaluation* best = nullptr;
  for (const auto& e : evals) {
    if (e.survives && (!best || e.weight > best->weight)) best = &e;
  }
  if (!best) {
    throw Error(ErrorCode::NoSafeMove, "no safe move for Ann after " + to_string(s.word().letters()));
  }
  return Move::play(best->letter);
}

Move BenStrategy::operator()(const GameState& s) const {
  if (s.terminal() != Terminal::None) throw Error(ErrorCode::IllegalMove, "game is over");
  if (s.turn() != Player::Ben) throw Error(ErrorCode::NotYourTurn, "Ben is not to move");
  Move m = fn_(s);
  if (!is_legal(s, m)) throw Error(ErrorCode::IllegalMove, name_ + " produced an illegal move");
  return m;
}

BenStrategy ben_random(std::uint64_t seed) {
  return BenStrategy("random(" + std::to_string(seed) + ")", [seed](const GameState& s) {
    std::uint64_t h = mix(seed);
    for (Letter a : s.word().letters()) h = mix(h ^ (a + 1ull));
    h = mix(h ^ static_cast<std::uint64_t>(s.word().size()));
    const auto moves = legal_moves(s);
    return moves[h % moves.size()];
  });
}

BenStrategy ben_weight_min(std::shared_ptr<const WeightModel> weights) {
  return BenStrategy("weight-min", [weights](const GameState& s) {
    weights->check_compatible(s.mode(), s.alphabet_size());
    const auto moves = legal_moves(s);
    std::optional<Move> best;
    std::uint64_t best_value = 0;
    for (const Move& m : moves) {
      bool ben_won = false;
      auto w = after_ben(s.mode(), s.word().letters(), m, ben_won);
      if (ben_won) return m;
      std::uint64_t value = 0;
      for (int a = 0; a < s.alphabet_size(); ++a) {
        w.push_back(static_cast<Letter>(a));
        if (!creates_square(s.mode(), w)) value += weights->weight(w);
        w.pop_back();
      }
      if (!best || value < best_value) {
        best = m;
        best_value = value;
      }
    }
    return *best;
  });
}

const std::map<std::string, Move>& script_3_table() {
  // Ben-to-move positions reachable against this script, normalized; the
  // reply is a normalized letter ("1" after "0" is the fresh letter).
  static const std::map<std::string, Move> table = {
      {"0", Move::play(1)},     {"01", Move::play(1)},    {"010", Move::play(1)},
      {"012", Move::play(0)},   {"0120", Move::play(0)},  {"01201", Move::play(2)},
      {"01202", Move::play(0)}, {"0121", Move::play(2)},
  };
  return table;
}

Move ben_script_3(const GameState& s) {
  if (s.mode() != GameMode::Erase || s.alphabet_size() != 3) {
    throw Error(ErrorCode::Unsupported, "the three-letter script plays ERASE over 3 letters only");
  }
  if (s.turn() != Player::Ben) throw Error(ErrorCode::NotYourTurn, "Ben is not to move");
  const auto w = s.word().letters();
  const auto& table = script_3_table();
  const auto it = table.find(to_string(normalize(w)));
  // Off-script positions are unreachable against the script; repeating the
  // last letter is a harmless skip there.
  if (it == table.end()) return Move::play(w.back());
  return Move::play(denormalize_letter(w, *it->second.letter, 3));
}

BenStrategy ben_script_3() {
  return BenStrategy("script3", [](const GameState& s) { return ben_script_3(s); });
}

BenStrategy ben_fixed_table(std::map<std::string, Move> table, std::string name) {
  return BenStrategy(std::move(name), [table = std::move(table)](const GameState& s) {
    const auto w = s.word().letters();
    const auto it = table.find(to_string(normalize(w)));
    if (it != table.end()) {
      if (it->second.is_pass()) return it->second;
      return Move::play(denormalize_letter(w, *it->second.letter, s.alphabet_size()));
    }
    return legal_moves(s).front();
  });
}

namespace {

class ForcedWinSearch {
 public:
  ForcedWinSearch(GameMode mode, int k, std::uint64_t budget) : mode_(mode), k_(k), budget_(budget) {}

  // Ben forces a square within r plies from (w, turn). w stays normalized.
  bool win(std::vector<Letter>& w, Player turn, int r) {
    if (r <= 0) return false;
    std::string key = make_key(w, turn);
    if (auto it = memo_.find(key); it != memo_.end()) {
      if (r >= it->second.win) return true;
      if (r <= it->second.fail) return false;
    }
    if (++nodes_ > budget_) {
      throw Error(ErrorCode::ResourceLimit, "forced-win search exceeded " + std::to_string(budget_) + " nodes");
    }
    const bool result = turn == Player::Ann ? ann_node(w, r) : ben_node(w, r);
    auto& e = memo_[std::move(key)];
    if (result) e.win = std::min(e.win, r);
    else e.fail = std::max(e.fail, r);
    return result;
  }

  // Ben's move at (w, Ben) that wins within r plies.
  std::optional<Move> winning_reply(std::vector<Letter>& w, int r) {
    for (const Move& m : moves(w)) {
      if (m.is_pass()) {
        if (win(w, Player::Ann, r - 1)) return m;
        continue;
      }
      w.push_back(*m.letter);
      const bool ok = creates_square(mode_, w) || win(w, Player::Ann, r - 1);
      w.pop_back();
      if (ok) return m;
    }
    return std::nullopt;
  }

  void extract(std::vector<Letter>& w, Player turn, int r, std::map<std::string, Move>& out) {
    if (turn == Player::Ann) {
      for (Letter a : letters(w)) {
        w.push_back(a);
        if (!creates_square(mode_, w)) extract(w, Player::Ben, r - 1, out);
        w.pop_back();
      }
      return;
    }
    const auto m = winning_reply(w, r);
    if (!m) throw Error(ErrorCode::InvalidArgument, "internal: lost the winning line");
    out.emplace(to_string(w), *m);
    if (m->is_pass()) {
      extract(w, Player::Ann, r - 1, out);
      return;
    }
    w.push_back(*m->letter);
    if (!creates_square(mode_, w)) extract(w, Player::Ann, r - 1, out);
    w.pop_back();
  }

  std::uint64_t nodes() const { return nodes_; }

 private:
  struct Entry {
    int win = INT_MAX;
    int fail = -1;
  };

  static std::string make_key(const std::vector<Letter>& w, Player turn) {
    std::string key(w.begin(), w.end());
    key.push_back(turn == Player::Ann ? 'a' : 'b');
    return key;
  }

  std::vector<Letter> letters(const std::vector<Letter>& w) const {
    const int distinct = w.empty() ? 0 : *std::max_element(w.begin(), w.end()) + 1;
    std::vector<Letter> out;
    for (int a = 0; a <= std::min(distinct, k_ - 1); ++a) out.push_back(static_cast<Letter>(a));
    return out;
  }

  std::vector<Move> moves(const std::vector<Letter>& w) const {
    std::vector<Move> out;
    for (Letter a : letters(w)) {
      if (mode_ == GameMode::Hard && !w.empty() && a == w.back()) continue;
      out.push_back(Move::play(a));
    }
    if (mode_ == GameMode::Hard) out.push_back(Move::pass());
    return out;
  }

  bool ann_node(std::vector<Letter>& w, int r) {
    for (Letter a : letters(w)) {
      w.push_back(a);
      const bool lost = creates_square(mode_, w) || win(w, Player::Ben, r - 1);
      w.pop_back();
      if (!lost) return false;
    }
    return true;
  }

  bool ben_node(std::vector<Letter>& w, int r) {
    const auto ms = moves(w);
    for (const Move& m : ms) {
      if (m.is_pass()) continue;
      w.push_back(*m.letter);
      const bool now = creates_square(mode_, w);
      w.pop_back();
      if (now) return true;
    }
    return winning_reply(w, r).has_value();
  }

  GameMode mode_;
  int k_;
  std::uint64_t budget_;
  std::uint64_t nodes_ = 0;
  std::unordered_map<std::string, Entry> memo_;
};

}  // namespace

ForcedWinResult solve_forced_win(GameMode mode, int k, int max_plies, const ForcedWinOptions& options) {
  if (mode == GameMode::Erase) throw Error(ErrorCode::Unsupported, "forced-win search needs a game that ends on a square");
  if (k < kMinAlphabet || k > kMaxAlphabet) throw Error(ErrorCode::InvalidArgument, "alphabet size out of range");
  if (max_plies < 1) throw Error(ErrorCode::InvalidArgument, "max plies must be positive");
  ForcedWinSearch search(mode, k, options.node_budget);
  ForcedWinResult result;
  std::vector<Letter> root;
  for (int d = 1; d <= max_plies; ++d) {
    if (search.win(root, Player::Ann, d)) {
      result.outcome = ForcedWinResult::Outcome::BenWins;
      result.depth = d;
      search.extract(root, Player::Ann, d, result.strategy);
      break;
    }
  }
  result.nodes = search.nodes();
  return result;
}

WeightedGrowthReport weighted_growth_oracle(GameMode mode, const WeightModel& weights, const BenStrategy& phi,
                                            int n_max, const Rational& beta, const OracleOptions& options) {
  if (mode == GameMode::Erase) mode = GameMode::Hard;
  weights.check_compatible(mode, weights.alphabet_size());
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be at least 1");
  const int k = weights.alphabet_size();

  WeightedGrowthReport report;
  report.beta = beta;
  std::vector<std::vector<Letter>> level{{}};
  auto weigh = [&](const std::vector<std::vector<Letter>>& words) {
    BigInt total = 0;
    for (const auto& w : words) total += weights.weight(w);
    return total;
  };
  report.sizes.push_back(1);
  report.weights.push_back(weigh(level));

  for (int n = 0; n <= n_max; ++n) {
    std::set<std::vector<Letter>> next;
    for (const auto& v : level) {
      std::vector<Letter> w = v;
      if (n > 0) {
        const auto s = GameState::from_position(mode, k, v, Player::Ben);
        bool ben_won = false;
        w = after_ben(mode, v, phi(s), ben_won);
        if (ben_won) continue;
      }
      for (int a = 0; a < k; ++a) {
        w.push_back(static_cast<Letter>(a));
        if (ann_safe(mode, w, weights)) {
          next.insert(w);
          if (next.size() > options.max_words) {
            throw Error(ErrorCode::ResourceLimit, "oracle level exceeds " + std::to_string(options.max_words) + " words");
          }
        }
        w.pop_back();
      }
    }
    level.assign(next.begin(), next.end());
    report.sizes.push_back(level.size());
    report.weights.push_back(weigh(level));
  }

  report.ratios.assign(report.weights.size() - 1, std::nullopt);
  bool first = true;
  for (std::size_t n = 1; n + 1 < report.weights.size(); ++n) {
    if (report.weights[n] == 0) continue;
    Rational r(report.weights[n + 1], report.weights[n]);
    if (first || r < report.min_ratio) report.min_ratio = r;
    first = false;
    if (r < beta) report.all_ratios_at_least_beta = false;
    report.ratios[n] = r;
  }
  if (first) report.all_ratios_at_least_beta = false;
  return report;
}

}  // namespace tg
