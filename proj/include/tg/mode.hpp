#pragma once

#include <string_view>

#include "tg/word.hpp"

namespace tg {

// NONREPETITIVE: squares of period >= 2 lose for Ann, period 1 is allowed.
// ERASE: every square has its second half erased; the game never ends on a
// square. HARD: any square loses for Ann, Ben may pass but may not repeat
// Ann's last letter. Weights and certificates exist for NONREPETITIVE and
// HARD; ERASE reuses the HARD ones.
enum class GameMode { Nonrepetitive, Erase, Hard };

std::string_view to_string(GameMode mode);
// Accepts "nonrep", "nonrepetitive", "erase", "hard" (case-insensitive).
GameMode parse_game_mode(std::string_view text);

// Smallest forbidden period: 2 for NONREPETITIVE, 1 otherwise.
int min_period(GameMode mode);
// The mode whose certificate Ann uses.
GameMode counting_mode(GameMode mode);

}  // namespace tg
