#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tg/certificate.hpp"
#include "tg/lambda.hpp"
#include "tg/mode.hpp"
#include "tg/rational.hpp"
#include "tg/word.hpp"

namespace tg {

enum class Player { Ann, Ben };
enum class Terminal { None, BenWon, LengthTargetReached };

std::string_view to_string(Player p);
std::string_view to_string(Terminal t);

struct Move {
  std::optional<Letter> letter;  // nullopt: PASS

  static Move pass() { return Move{}; }
  static Move play(Letter a) { return Move{a}; }
  bool is_pass() const noexcept { return !letter.has_value(); }
  bool operator==(const Move&) const = default;
};

// "P" for a pass, otherwise the hex digit.
std::string to_string(const Move& m);
Move parse_move(std::string_view text, int k);

struct PlyRecord {
  int ply = 0;
  Player mover = Player::Ann;
  Move move;
  std::vector<Letter> word_after;
  std::vector<std::vector<Letter>> erased;
};

class GameState {
 public:
  // ERASE defaults to a length target of 64; the other modes have none (0)
  // unless one is given.
  GameState(GameMode mode, int k, std::optional<std::size_t> length_target = std::nullopt);

  GameMode mode() const noexcept { return mode_; }
  int alphabet_size() const noexcept { return k_; }
  const Word& word() const noexcept { return word_; }
  Player turn() const noexcept { return turn_; }
  int ply() const noexcept { return static_cast<int>(history_.size()); }
  const std::vector<PlyRecord>& history() const noexcept { return history_; }
  Terminal terminal() const noexcept { return terminal_; }
  std::size_t length_target() const noexcept { return length_target_; }

  // Rebuilds a position without history; the word must satisfy the mode's
  // square-freedom invariant.
  static GameState from_position(GameMode mode, int k, std::span<const Letter> word, Player turn,
                                 std::optional<std::size_t> length_target = std::nullopt);

 private:
  friend GameState apply_move(const GameState& s, const Move& m);
  friend void apply_move_in_place(GameState& s, const Move& m);

  GameMode mode_;
  int k_;
  Word word_;
  Player turn_ = Player::Ann;
  std::vector<PlyRecord> history_;
  Terminal terminal_ = Terminal::None;
  std::size_t length_target_ = 0;
};

// Periods whose squares matter in a mode, with no upper cap.
PeriodRange game_periods(GameMode mode);

std::vector<Move> legal_moves(const GameState& s);
bool is_legal(const GameState& s, const Move& m);
// Short reason a move is rejected: "game over", "out of alphabet", "repeat",
// "pass not allowed"; nullopt when legal.
std::optional<std::string> illegal_reason(const GameState& s, const Move& m);

struct EraseResult {
  std::vector<Letter> word;
  std::vector<std::vector<Letter>> erased;
};

// Repeatedly removes the second half of the shortest-period square ending at
// the last position. Every proper prefix of w must be square-free.
EraseResult erase_reduce(std::span<const Letter> w);

GameState apply_move(const GameState& s, const Move& m);
void apply_move_in_place(GameState& s, const Move& m);

// One JSON object per ply: ply, mover, move, word, erased.
std::string transcript_jsonl(const GameState& s);

// Letter for a normalized letter relative to w: the letter occupying that
// rank of first occurrence, or the smallest unused letter for a fresh one.
Letter denormalize_letter(std::span<const Letter> w, Letter normalized, int k);
Letter normalize_letter(std::span<const Letter> w, Letter a);

// C_{Lambda(w)} lookups for a verified certificate.
class WeightModel {
 public:
  WeightModel(std::shared_ptr<const LambdaSet> lambda, std::shared_ptr<const Certificate> cert);

  GameMode mode() const noexcept { return cert_->mode; }
  int alphabet_size() const noexcept { return lambda_->alphabet_size(); }
  const LambdaSet& lambda() const noexcept { return *lambda_; }
  const Certificate& certificate() const noexcept { return *cert_; }
  // w must be free of squares in the certificate's range.
  std::uint32_t weight(std::span<const Letter> w) const;
  // Checks the model fits a game in this mode over k letters.
  void check_compatible(GameMode game_mode, int k) const;

 private:
  std::shared_ptr<const LambdaSet> lambda_;
  std::shared_ptr<const Certificate> cert_;
};

// The playability predicate for a word just produced by Ann: free of squares
// in the game's scope, no 2^- -power suffix of any period, positive weight.
bool ann_safe(GameMode mode, std::span<const Letter> u, const WeightModel& weights);

struct AnnEvaluation {
  Letter letter = 0;
  bool safe = false;
  bool survives = false;
  std::uint32_t weight = 0;
};

// Per-letter diagnostics behind ann_move.
std::vector<AnnEvaluation> evaluate_ann_moves(const GameState& s, const WeightModel& weights, int lookahead_plies);

// Best safe letter surviving a worst-case search of lookahead_plies plies
// (Ben replies, Ann answers, ...); ties go to the smaller letter. Throws
// NoSafeMove when no letter qualifies.
Move ann_move(const GameState& s, const WeightModel& weights, int lookahead_plies = 4);

class BenStrategy {
 public:
  using Fn = std::function<Move(const GameState&)>;
  BenStrategy(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  const std::string& name() const noexcept { return name_; }
  // Throws NotYourTurn unless Ben is to move.
  Move operator()(const GameState& s) const;

 private:
  std::string name_;
  Fn fn_;
};

// Uniform over legal moves, seeded by a hash of (seed, word) so the same
// position always gets the same answer.
BenStrategy ben_random(std::uint64_t seed);
// An immediately winning move if one exists, else the move minimizing the sum
// of Ann's successor weights; ties to the smaller letter, PASS last.
BenStrategy ben_weight_min(std::shared_ptr<const WeightModel> weights);
// ERASE over 3 letters: keeps the word at length <= 6.
BenStrategy ben_script_3();
// Lookup on the normalized word; entries map to a normalized letter or PASS.
// Positions missing from the table get the first legal move.
BenStrategy ben_fixed_table(std::map<std::string, Move> table, std::string name = "fixed-table");

Move ben_script_3(const GameState& s);
const std::map<std::string, Move>& script_3_table();

struct ForcedWinResult {
  enum class Outcome { BenWins, NotWithinDepth } outcome = Outcome::NotWithinDepth;
  int depth = 0;  // plies of the shortest forced win
  // Ben's reply per normalized Ben-to-move word along the winning strategy.
  std::map<std::string, Move> strategy;
  std::uint64_t nodes = 0;
};

struct ForcedWinOptions {
  std::uint64_t node_budget = 200'000'000;
};

// Iterative deepening AND/OR search from the empty word, Ann first. Throws
// ResourceLimit past the node budget; ERASE is not supported.
ForcedWinResult solve_forced_win(GameMode mode, int k, int max_plies, const ForcedWinOptions& options = {});

struct WeightedGrowthReport {
  // Index n: words after n Ann moves; entry 0 is the empty word.
  std::vector<std::uint64_t> sizes;
  std::vector<BigInt> weights;
  // ratios[n] = weights[n+1] / weights[n] for n >= 1 with weights[n] > 0.
  std::vector<std::optional<Rational>> ratios;
  Rational min_ratio;
  bool all_ratios_at_least_beta = true;
  Rational beta;
};

struct OracleOptions {
  std::uint64_t max_words = 20'000'000;
};

WeightedGrowthReport weighted_growth_oracle(GameMode mode, const WeightModel& weights, const BenStrategy& phi,
                                            int n_max, const Rational& beta, const OracleOptions& options = {});

}  // namespace tg
