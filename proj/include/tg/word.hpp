#pragma once

#include <climits>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tg {

using Letter = std::uint8_t;

inline constexpr int kMinAlphabet = 2;
inline constexpr int kMaxAlphabet = 16;

// A finite word over {0, ..., k-1}. Letters are plain integers; named
// alphabets only exist at the command-line boundary.
class Word {
 public:
  Word() = default;
  explicit Word(int k);
  Word(std::vector<Letter> letters, int k);

  int alphabet_size() const noexcept { return k_; }
  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }
  std::span<const Letter> letters() const noexcept { return letters_; }
  operator std::span<const Letter>() const noexcept { return letters_; }

  void push_back(Letter a);
  void truncate(std::size_t n);

  bool operator==(const Word&) const = default;

 private:
  std::vector<Letter> letters_;
  int k_ = kMinAlphabet;
};

// Squares of period in [pmin, pmax] are the forbidden ones.
struct PeriodRange {
  int pmin = 2;
  int pmax = 2;

  static constexpr int kUnbounded = INT_MAX / 4;

  static PeriodRange unbounded(int pmin) { return {pmin, kUnbounded}; }
  bool contains(int q) const noexcept { return q >= pmin && q <= pmax; }
  bool operator==(const PeriodRange&) const = default;
};

// Letters are written as hexadecimal digits, so "0a1" is {0, 10, 1}.
Word parse_word(std::string_view text, int k);
std::string to_string(std::span<const Letter> w);

// First-occurrence relabelling; the least word in the permutation orbit.
std::vector<Letter> normalize(std::span<const Letter> w);
Word normalize(const Word& w);

std::optional<Letter> last_letter(std::span<const Letter> w);

std::vector<int> square_suffix_periods(std::span<const Letter> w,
                                       PeriodRange r);
bool ends_with_square(std::span<const Letter> w, PeriodRange r);
bool is_square_free(std::span<const Letter> w, PeriodRange r);

// True iff some suffix s with |s| >= 3 becomes a square in range after one
// more letter. With unbounded_periods the upper cap of r is ignored.
bool ends_with_two_minus_power(std::span<const Letter> w, PeriodRange r,
                               bool unbounded_periods);

// Normalized squares uu with |u| in range whose proper factors avoid every
// square in range, sorted by (length, lexicographic).
std::vector<Word> minimal_squares(int k, PeriodRange r);

// Order used for state enumeration: shorter first, then lexicographic.
bool canonical_less(std::span<const Letter> a, std::span<const Letter> b);

}  // namespace tg
