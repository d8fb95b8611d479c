#include "tg/service.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>

#include "tg/error.hpp"

namespace tg {

namespace {

using json = nlohmann::ordered_json;

json letters_json(std::span<const Letter> w) {
  auto out = json::array();
  for (Letter a : w) out.push_back(static_cast<int>(a));
  return out;
}

json move_json(const Move& m) {
  json j;
  if (m.is_pass()) j["pass"] = true;
  else j["letter"] = static_cast<int>(*m.letter);
  return j;
}

json view_json(const StateView& v) {
  json j;
  j["id"] = v.id;
  j["mode"] = to_string(v.mode);
  j["k"] = v.k;
  j["humanRole"] = to_string(v.human);
  j["word"] = letters_json(v.word);
  j["turn"] = to_string(v.turn);
  j["terminal"] = v.terminal;
  auto erased = json::array();
  for (const auto& e : v.last_erased) erased.push_back(letters_json(e));
  j["lastErased"] = std::move(erased);
  j["plyCount"] = v.ply_count;
  return j;
}

Player parse_player(const std::string& s) {
  if (s == "ann" || s == "ANN") return Player::Ann;
  if (s == "ben" || s == "BEN") return Player::Ben;
  throw Error(ErrorCode::InvalidArgument, "role must be 'ann' or 'ben'");
}

}  // namespace

std::string_view to_string(BenEngine e) {
  switch (e) {
    case BenEngine::WeightMin: return "weight-min";
    case BenEngine::Random: return "random";
    case BenEngine::Script3: return "script3";
  }
  return "?";
}

BenEngine parse_ben_engine(std::string_view text) {
  if (text == "weight-min" || text == "WEIGHT_MIN") return BenEngine::WeightMin;
  if (text == "random" || text == "RANDOM") return BenEngine::Random;
  if (text == "script3" || text == "SCRIPT3") return BenEngine::Script3;
  throw Error(ErrorCode::InvalidArgument, "unknown Ben engine '" + std::string(text) + "'");
}

SessionManager::SessionManager(std::shared_ptr<CertificateRegistry> registry, std::optional<std::string> transcript_dir)
    : registry_(std::move(registry)), transcript_dir_(std::move(transcript_dir)) {
  if (!registry_) throw Error(ErrorCode::InvalidArgument, "session manager needs a certificate registry");
  std::random_device rd;
  id_state_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string SessionManager::next_id() {
  std::lock_guard lock(id_lock_);
  id_state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = id_state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  static const char* hex = "0123456789abcdef";
  std::string id = "g";
  for (int i = 15; i >= 0; --i) id.push_back(hex[(z >> (4 * i)) & 15]);
  return id;
}

StateView SessionManager::create(const SessionOptions& options) {
  if (options.k < kServiceMinK || options.k > kServiceMaxK) {
    throw Error(ErrorCode::Unsupported, "unsupported k " + std::to_string(options.k) + " (service supports " +
                                            std::to_string(kServiceMinK) + ".." + std::to_string(kServiceMaxK) + ")");
  }
  if (options.lookahead < 0 || options.lookahead > 8) {
    throw Error(ErrorCode::InvalidArgument, "lookahead must be in [0, 8]");
  }
  if (options.length_target && *options.length_target == 0) {
    throw Error(ErrorCode::InvalidArgument, "length target must be positive");
  }
  std::shared_ptr<const WeightModel> weights;
  std::optional<BenStrategy> ben;
  if (options.human == Player::Ben) {
    try {
      weights = registry_->get(options.mode, options.k);
    } catch (const Error& e) {
      throw Error(ErrorCode::Unsupported, std::string("missing certificate: ") + e.what());
    }
  } else {
    const bool script_default = options.mode == GameMode::Erase && options.k == 3;
    const BenEngine engine = options.ben_engine.value_or(script_default ? BenEngine::Script3 : BenEngine::WeightMin);
    switch (engine) {
      case BenEngine::Script3:
        if (!script_default) throw Error(ErrorCode::Unsupported, "script3 plays ERASE over 3 letters only");
        ben = ben_script_3();
        break;
      case BenEngine::Random:
        ben = ben_random(options.seed);
        break;
      case BenEngine::WeightMin:
        weights = registry_->try_get(options.mode, options.k);
        if (!weights) throw Error(ErrorCode::Unsupported, "missing certificate for weight-min Ben");
        ben = ben_weight_min(weights);
        break;
    }
  }
  auto session = std::make_shared<Session>(next_id(), options, GameState(options.mode, options.k, options.length_target));
  session->weights = std::move(weights);
  session->ben = std::move(ben);
  {
    std::unique_lock lock(map_lock_);
    sessions_[session->id] = session;
  }
  std::shared_lock read(session->lock);
  return view_of(*session);
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(map_lock_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'");
  return it->second;
}

StateView SessionManager::view_of(const Session& s) {
  StateView v;
  v.id = s.id;
  v.mode = s.state.mode();
  v.k = s.state.alphabet_size();
  v.human = s.options.human;
  const auto w = s.state.word().letters();
  v.word.assign(w.begin(), w.end());
  v.turn = s.state.turn();
  v.terminal = s.engine_resigned ? "engine_resigned" : std::string(to_string(s.state.terminal()));
  if (!s.state.history().empty()) v.last_erased = s.state.history().back().erased;
  v.ply_count = s.state.ply();
  return v;
}

StateView SessionManager::get(const std::string& id) const {
  const auto s = find(id);
  std::shared_lock lock(s->lock);
  return view_of(*s);
}

StateView SessionManager::submit_move(const std::string& id, const Move& move) {
  const auto s = find(id);
  std::unique_lock lock(s->lock, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::Busy, "another move is in flight for this session");
  if (s->engine_resigned || s->state.terminal() != Terminal::None) throw Error(ErrorCode::IllegalMove, "game over");
  if (s->state.turn() != s->options.human) throw Error(ErrorCode::NotYourTurn, "it is the engine's turn");
  apply_move_in_place(s->state, move);
  persist(*s);
  return view_of(*s);
}

std::pair<std::optional<Move>, StateView> SessionManager::engine_move(const std::string& id) {
  const auto s = find(id);
  std::unique_lock lock(s->lock, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::Busy, "another move is in flight for this session");
  if (s->engine_resigned || s->state.terminal() != Terminal::None) throw Error(ErrorCode::IllegalMove, "game over");
  if (s->state.turn() == s->options.human) throw Error(ErrorCode::NotEngineTurn, "it is the human's turn");
  std::optional<Move> move;
  if (s->state.turn() == Player::Ann) {
    try {
      move = ann_move(s->state, *s->weights, s->options.lookahead);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSafeMove) throw;
      s->engine_resigned = true;
    }
  } else {
    move = (*s->ben)(s->state);
  }
  if (move) apply_move_in_place(s->state, *move);
  persist(*s);
  return {move, view_of(*s)};
}

Hint SessionManager::hint(const std::string& id) const {
  const auto s = find(id);
  std::shared_lock lock(s->lock);
  if (s->engine_resigned || s->state.terminal() != Terminal::None) throw Error(ErrorCode::IllegalMove, "game over");
  const GameState& st = s->state;
  auto weights = s->weights;
  if (!weights || weights->mode() != counting_mode(st.mode())) weights = registry_->try_get(st.mode(), st.alphabet_size());

  Hint h;
  h.to_move = st.turn();
  const auto w = st.word().letters();
  const PeriodRange scope = game_periods(st.mode());
  if (st.turn() == Player::Ann) {
    std::vector<AnnEvaluation> evals;
    if (weights) evals = evaluate_ann_moves(st, *weights, s->options.lookahead);
    for (int a = 0; a < st.alphabet_size(); ++a) {
      std::vector<Letter> u(w.begin(), w.end());
      u.push_back(static_cast<Letter>(a));
      HintEntry e;
      e.move = Move::play(static_cast<Letter>(a));
      e.creates_square = ends_with_square(u, scope);
      e.two_minus_power = ends_with_two_minus_power(u, PeriodRange{2, PeriodRange::kUnbounded}, true);
      if (weights) {
        e.safe = evals[a].safe;
        e.survives = evals[a].survives;
        if (!e.creates_square) e.weight = evals[a].weight;
      } else {
        e.safe = !e.creates_square && !e.two_minus_power;
      }
      h.moves.push_back(e);
    }
    std::vector<std::size_t> order(h.moves.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      const auto& a = h.moves[x];
      const auto& b = h.moves[y];
      if (a.survives != b.survives) return a.survives;
      if (a.safe != b.safe) return a.safe;
      return a.weight.value_or(0) > b.weight.value_or(0);
    });
    for (std::size_t r = 0; r < order.size(); ++r) h.moves[order[r]].rank = static_cast<int>(r) + 1;
    return h;
  }
  for (const Move& m : legal_moves(st)) {
    HintEntry e;
    e.move = m;
    std::vector<Letter> u(w.begin(), w.end());
    if (!m.is_pass()) u.push_back(*m.letter);
    if (st.mode() == GameMode::Erase) {
      u = erase_reduce(u).word;
    } else {
      e.creates_square = ends_with_square(u, scope);
    }
    if (weights && !e.creates_square) e.weight = weights->weight(u);
    e.safe = !e.creates_square;
    h.moves.push_back(e);
  }
  std::vector<std::size_t> order(h.moves.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = h.moves[x];
    const auto& b = h.moves[y];
    if (a.creates_square != b.creates_square) return a.creates_square;
    return a.weight.value_or(0) < b.weight.value_or(0);
  });
  for (std::size_t r = 0; r < order.size(); ++r) h.moves[order[r]].rank = static_cast<int>(r) + 1;
  return h;
}

void SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::unique_lock lock(map_lock_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'");
    s = it->second;
    sessions_.erase(it);
  }
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(map_lock_);
  return sessions_.size();
}

void SessionManager::persist(const Session& s) const {
  if (!transcript_dir_) return;
  std::filesystem::create_directories(*transcript_dir_);
  std::ofstream out(std::filesystem::path(*transcript_dir_) / (s.id + ".jsonl"), std::ios::trunc);
  out << transcript_jsonl(s.state);
}

std::string state_view_json(const StateView& v) { return view_json(v).dump(); }

std::string engine_move_json(const std::optional<Move>& move, const StateView& v) {
  json j;
  j["move"] = move ? move_json(*move) : json(nullptr);
  j["state"] = view_json(v);
  return j.dump();
}

std::string hint_json(const Hint& h) {
  json j;
  j["toMove"] = to_string(h.to_move);
  auto moves = json::array();
  for (const auto& e : h.moves) {
    json m;
    m["move"] = move_json(e.move);
    m["createsSquare"] = e.creates_square;
    m["twoMinusPower"] = e.two_minus_power;
    m["weight"] = e.weight ? json(*e.weight) : json(nullptr);
    m["safe"] = e.safe;
    m["survives"] = e.survives;
    m["rank"] = e.rank;
    moves.push_back(std::move(m));
  }
  j["moves"] = std::move(moves);
  return j.dump();
}

std::string error_json(ErrorCode code, const std::string& message) {
  json j;
  j["code"] = to_string(code);
  j["message"] = message;
  return j.dump();
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::FormatError:
    case ErrorCode::Unsupported: return 400;
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::NotYourTurn:
    case ErrorCode::NotEngineTurn:
    case ErrorCode::Busy: return 409;
    case ErrorCode::IllegalMove: return 422;
    case ErrorCode::ResourceLimit: return 503;
    default: return 500;
  }
}

SessionOptions session_options_from_json(const std::string& body) {
  json j;
  try {
    j = body.empty() ? json::object() : json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
  try {
    SessionOptions o;
    if (j.contains("mode")) o.mode = parse_game_mode(j.at("mode").get<std::string>());
    if (j.contains("k")) o.k = j.at("k").get<int>();
    if (j.contains("humanRole")) o.human = parse_player(j.at("humanRole").get<std::string>());
    if (j.contains("benEngine")) o.ben_engine = parse_ben_engine(j.at("benEngine").get<std::string>());
    if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lookahead")) o.lookahead = j.at("lookahead").get<int>();
    if (j.contains("lengthTarget")) o.length_target = j.at("lengthTarget").get<std::size_t>();
    return o;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad field: ") + e.what());
  }
}

Move move_from_json(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "move must be a JSON object");
  if (j.contains("pass")) {
    if (j.contains("letter") || !j.at("pass").is_boolean() || !j.at("pass").get<bool>()) {
      throw Error(ErrorCode::InvalidArgument, "a move is {\"letter\": n} or {\"pass\": true}");
    }
    return Move::pass();
  }
  if (!j.contains("letter") || !j.at("letter").is_number_integer()) {
    throw Error(ErrorCode::InvalidArgument, "a move is {\"letter\": n} or {\"pass\": true}");
  }
  const auto letter = j.at("letter").get<std::int64_t>();
  if (letter < 0 || letter >= kMaxAlphabet) throw Error(ErrorCode::IllegalMove, "out of alphabet");
  return Move::play(static_cast<Letter>(letter));
}

}  // namespace tg
