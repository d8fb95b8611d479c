#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tg/error.hpp"
#include "tg/game.hpp"
#include "tg/registry.hpp"

namespace tg {

inline constexpr int kServiceMinK = 3;
inline constexpr int kServiceMaxK = 8;

enum class BenEngine { WeightMin, Random, Script3 };
std::string_view to_string(BenEngine e);
BenEngine parse_ben_engine(std::string_view text);

struct SessionOptions {
  GameMode mode = GameMode::Hard;
  int k = 6;
  Player human = Player::Ben;
  // Only used when the engine plays Ben; defaults to SCRIPT3 for ERASE over
  // 3 letters, WEIGHT_MIN otherwise.
  std::optional<BenEngine> ben_engine;
  std::uint64_t seed = 1;
  int lookahead = 4;
  std::optional<std::size_t> length_target;
};

struct StateView {
  std::string id;
  GameMode mode = GameMode::Hard;
  int k = 0;
  Player human = Player::Ben;
  std::vector<Letter> word;
  Player turn = Player::Ann;
  // "none", "ben_won", "length_target_reached" or "engine_resigned".
  std::string terminal;
  std::vector<std::vector<Letter>> last_erased;
  int ply_count = 0;
};

struct HintEntry {
  Move move;
  bool creates_square = false;
  bool two_minus_power = false;
  std::optional<std::uint32_t> weight;  // C of the resulting state, when a certificate is loaded
  bool safe = false;
  bool survives = false;
  int rank = 0;  // 1 is what the engine would play in this seat
};

struct Hint {
  Player to_move = Player::Ann;
  std::vector<HintEntry> moves;
};

// In-memory sessions. Mutations on one session are serialized by rejecting
// (BUSY) rather than queueing; reads take a shared lock.
class SessionManager {
 public:
  explicit SessionManager(std::shared_ptr<CertificateRegistry> registry,
                          std::optional<std::string> transcript_dir = std::nullopt);

  StateView create(const SessionOptions& options);
  StateView get(const std::string& id) const;
  StateView submit_move(const std::string& id, const Move& move);
  // The move is empty when the engine resigns (Ann found no safe letter).
  std::pair<std::optional<Move>, StateView> engine_move(const std::string& id);
  Hint hint(const std::string& id) const;
  void remove(const std::string& id);
  std::size_t size() const;

 private:
  struct Session {
    std::string id;
    SessionOptions options;
    GameState state;
    std::shared_ptr<const WeightModel> weights;
    std::optional<BenStrategy> ben;
    bool engine_resigned = false;
    std::chrono::system_clock::time_point created;
    mutable std::shared_mutex lock;

    Session(std::string i, SessionOptions o, GameState s)
        : id(std::move(i)), options(o), state(std::move(s)), created(std::chrono::system_clock::now()) {}
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  static StateView view_of(const Session& s);
  void persist(const Session& s) const;
  std::string next_id();

  std::shared_ptr<CertificateRegistry> registry_;
  std::optional<std::string> transcript_dir_;
  mutable std::shared_mutex map_lock_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_lock_;
  std::uint64_t id_state_;
};

// JSON bodies of the /v1 protocol.
std::string state_view_json(const StateView& v);
std::string engine_move_json(const std::optional<Move>& move, const StateView& v);
SessionOptions session_options_from_json(const std::string& body);
Move move_from_json(const std::string& body);
std::string hint_json(const Hint& h);
std::string error_json(ErrorCode code, const std::string& message);
int http_status(ErrorCode code);

// HTTP front end over a SessionManager; routes live under /v1.
class HttpService {
 public:
  explicit HttpService(SessionManager& sessions);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Returns the bound port (an ephemeral one when port is 0).
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tg
