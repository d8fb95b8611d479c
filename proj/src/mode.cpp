#include "tg/mode.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "tg/error.hpp"

namespace tg {

std::string_view to_string(GameMode mode) {
  switch (mode) {
    case GameMode::Nonrepetitive: return "nonrep";
    case GameMode::Erase: return "erase";
    case GameMode::Hard: return "hard";
  }
  return "?";
}

GameMode parse_game_mode(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "nonrep" || s == "nonrepetitive") return GameMode::Nonrepetitive;
  if (s == "erase" || s == "erase-repetition") return GameMode::Erase;
  if (s == "hard") return GameMode::Hard;
  throw Error(ErrorCode::InvalidArgument, "unknown game mode '" + std::string(text) + "'");
}

int min_period(GameMode mode) { return mode == GameMode::Nonrepetitive ? 2 : 1; }

GameMode counting_mode(GameMode mode) {
  return mode == GameMode::Erase ? GameMode::Hard : mode;
}

}  // namespace tg
