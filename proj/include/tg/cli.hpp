#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitResource = 3;

// args excludes the program name. `in` feeds the interactive `play` loop.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in);

// "8G", "512M", "64K" or a plain byte count.
std::uint64_t parse_byte_size(const std::string& text);

}  // namespace tg::cli
