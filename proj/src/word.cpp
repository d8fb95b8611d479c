#include "tg/word.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include "tg/error.hpp"

namespace tg {

namespace {

void check_alphabet(int k) {
  if (k < kMinAlphabet || k > kMaxAlphabet) {
    throw Error(ErrorCode::InvalidArgument,
                "alphabet size must be in [2, 16], got " + std::to_string(k));
  }
}

// w[n-2q, n-q) == w[n-q, n)
bool suffix_is_square(std::span<const Letter> w, std::size_t q) {
  const std::size_t n = w.size();
  return std::equal(w.begin() + static_cast<std::ptrdiff_t>(n - 2 * q),
                    w.begin() + static_cast<std::ptrdiff_t>(n - q),
                    w.begin() + static_cast<std::ptrdiff_t>(n - q));
}

}  // namespace

Word::Word(int k) : k_(k) { check_alphabet(k); }

Word::Word(std::vector<Letter> letters, int k) : letters_(std::move(letters)), k_(k) {
  check_alphabet(k);
  for (Letter a : letters_) {
    if (a >= k) {
      throw Error(ErrorCode::InvalidArgument,
                  "letter " + std::to_string(a) + " outside alphabet of size " +
                      std::to_string(k));
    }
  }
}

void Word::push_back(Letter a) {
  if (a >= k_) {
    throw Error(ErrorCode::InvalidArgument, "letter outside alphabet");
  }
  letters_.push_back(a);
}

void Word::truncate(std::size_t n) {
  if (n < letters_.size()) letters_.resize(n);
}

Word parse_word(std::string_view text, int k) {
  std::vector<Letter> letters;
  letters.reserve(text.size());
  for (char c : text) {
    int v = -1;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    if (v < 0) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("bad letter '") + c + "' in word");
    }
    letters.push_back(static_cast<Letter>(v));
  }
  return Word(std::move(letters), k);
}

std::string to_string(std::span<const Letter> w) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(w.size());
  for (Letter a : w) s.push_back(kDigits[a & 0xF]);
  return s;
}

std::vector<Letter> normalize(std::span<const Letter> w) {
  std::array<int, 256> label;
  label.fill(-1);
  int next = 0;
  std::vector<Letter> out;
  out.reserve(w.size());
  for (Letter a : w) {
    if (label[a] < 0) label[a] = next++;
    out.push_back(static_cast<Letter>(label[a]));
  }
  return out;
}

Word normalize(const Word& w) { return Word(normalize(w.letters()), w.alphabet_size()); }

std::optional<Letter> last_letter(std::span<const Letter> w) {
  if (w.empty()) return std::nullopt;
  return w.back();
}

std::vector<int> square_suffix_periods(std::span<const Letter> w, PeriodRange r) {
  std::vector<int> out;
  const std::size_t half = w.size() / 2;
  const std::size_t hi = std::min<std::size_t>(half, static_cast<std::size_t>(std::max(r.pmax, 0)));
  for (std::size_t q = static_cast<std::size_t>(std::max(r.pmin, 1)); q <= hi; ++q) {
    if (suffix_is_square(w, q)) out.push_back(static_cast<int>(q));
  }
  return out;
}

bool ends_with_square(std::span<const Letter> w, PeriodRange r) {
  const std::size_t half = w.size() / 2;
  const std::size_t hi = std::min<std::size_t>(half, static_cast<std::size_t>(std::max(r.pmax, 0)));
  for (std::size_t q = static_cast<std::size_t>(std::max(r.pmin, 1)); q <= hi; ++q) {
    if (suffix_is_square(w, q)) return true;
  }
  return false;
}

bool is_square_free(std::span<const Letter> w, PeriodRange r) {
  for (std::size_t n = 2; n <= w.size(); ++n) {
    if (ends_with_square(w.first(n), r)) return false;
  }
  return true;
}

bool ends_with_two_minus_power(std::span<const Letter> w, PeriodRange r,
                               bool unbounded_periods) {
  const std::size_t n = w.size();
  // A suffix of length 2q-1 completes to a square of period q; |s| >= 3
  // means q >= 2.
  const std::size_t lo = static_cast<std::size_t>(std::max(r.pmin, 2));
  std::size_t hi = (n + 1) / 2;
  if (!unbounded_periods) hi = std::min<std::size_t>(hi, static_cast<std::size_t>(r.pmax));
  for (std::size_t q = lo; q <= hi; ++q) {
    const std::size_t start = n - (2 * q - 1);
    bool match = true;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      if (w[start + i] != w[start + q + i]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

std::vector<Word> minimal_squares(int k, PeriodRange r) {
  check_alphabet(k);
  if (r.pmin < 1 || r.pmax < r.pmin || r.pmax > 32) {
    throw Error(ErrorCode::InvalidArgument, "invalid period range");
  }
  std::vector<Word> out;
  std::vector<Letter> u;
  std::function<void(int)> extend = [&](int distinct) {
    const int q = static_cast<int>(u.size());
    if (q >= r.pmin) {
      std::vector<Letter> uu(u);
      uu.insert(uu.end(), u.begin(), u.end());
      std::span<const Letter> s(uu);
      if (is_square_free(s.first(uu.size() - 1), r) &&
          is_square_free(s.subspan(1), r)) {
        out.emplace_back(uu, k);
      }
    }
    if (q == r.pmax) return;
    const int limit = std::min(distinct + 1, k);
    for (int a = 0; a < limit; ++a) {
      u.push_back(static_cast<Letter>(a));
      if (!ends_with_square(u, r)) extend(std::max(distinct, a + 1));
      u.pop_back();
    }
  };
  extend(0);
  std::sort(out.begin(), out.end(), [](const Word& a, const Word& b) {
    return canonical_less(a, b);
  });
  return out;
}

bool canonical_less(std::span<const Letter> a, std::span<const Letter> b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace tg
