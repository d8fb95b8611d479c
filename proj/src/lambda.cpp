#include "tg/lambda.hpp"

#include <algorithm>
#include <array>

#include "tg/detail/binary_io.hpp"
#include "tg/detail/parallel.hpp"
#include "tg/error.hpp"

namespace tg {

namespace {

using Key = unsigned __int128;
constexpr int kKeyLetters = 32;

// Letter i occupies the nibble at bit 4*(31-i); equal-length words then
// compare numerically exactly as they compare lexicographically.
Letter key_letter(Key key, std::size_t i) {
  return static_cast<Letter>((key >> (4 * (kKeyLetters - 1 - i))) & 0xF);
}

Key with_letter(Key key, std::size_t i, Letter a) {
  return key | (static_cast<Key>(a) << (4 * (kKeyLetters - 1 - i)));
}

Key pack(std::span<const Letter> w) {
  Key key = 0;
  for (std::size_t i = 0; i < w.size(); ++i) key = with_letter(key, i, w[i]);
  return key;
}

Key clear_letter(Key key, std::size_t i) {
  return key & ~(static_cast<Key>(0xF) << (4 * (kKeyLetters - 1 - i)));
}

// Depth-first enumeration of the square-free words that can still grow into
// a minimal square. A word is kept iff some descendant closes a minimal square
// whose period is compatible with the whole path.
class Enumerator {
 public:
  Enumerator(int k, PeriodRange r, std::uint64_t budget)
      : k_(k), r_(r), max_len_(2 * r.pmax - 1), budget_(budget),
        buckets_(static_cast<std::size_t>(max_len_) + 1) {
    for (auto& row : run_) row.fill(0);
  }

  std::vector<std::vector<Key>> run() {
    dfs(0, 0);
    return std::move(buckets_);
  }

 private:
  // run_[n][q]: number of trailing positions i of x[0, n) with x[i] == x[i-q].
  std::uint32_t dfs(int n, int distinct) {
    bool compatible = false;
    for (int q = r_.pmin; q <= r_.pmax && !compatible; ++q) {
      if (n <= 2 * q - 1 && (n <= q || run_[n][q] == n - q)) compatible = true;
    }
    if (!compatible) return 0;

    std::uint32_t mask = 0;
    for (int q = std::max(r_.pmin, 1); q <= r_.pmax; ++q) {
      if (n != 2 * q - 1 || run_[n][q] != q - 1) continue;
      const Letter a = x_[n - q];
      bool minimal = true;
      for (int q2 = r_.pmin; q2 < q; ++q2) {
        const int run = (a == x_[n - q2]) ? run_[n][q2] + 1 : 0;
        if (run >= q2) {
          minimal = false;
          break;
        }
      }
      if (minimal) mask |= 1u << q;
    }

    if (n < max_len_) {
      const int limit = std::min(distinct + 1, k_);
      const int square_hi = std::min(r_.pmax, (n + 1) / 2);
      for (int a = 0; a < limit; ++a) {
        bool square = false;
        for (int q = 1; q <= r_.pmax; ++q) {
          const int run = (n >= q && a == x_[n - q]) ? run_[n][q] + 1 : 0;
          run_[n + 1][q] = static_cast<std::uint8_t>(run);
          if (q >= r_.pmin && q <= square_hi && run >= q) square = true;
        }
        if (square) continue;
        x_[n] = static_cast<Letter>(a);
        mask |= dfs(n + 1, std::max(distinct, a + 1));
      }
    }

    if (mask != 0) emit(n);
    return mask;
  }

  void emit(int n) {
    if (++count_ * LambdaSet::kBytesPerStateEstimate > budget_) {
      throw Error(ErrorCode::ResourceLimit,
                  "state enumeration exceeded the memory budget of " +
                      std::to_string(budget_) + " bytes after " +
                      std::to_string(count_) + " states");
    }
    buckets_[static_cast<std::size_t>(n)].push_back(pack(std::span<const Letter>(x_.data(), static_cast<std::size_t>(n))));
  }

  int k_;
  PeriodRange r_;
  int max_len_;
  std::uint64_t budget_;
  std::uint64_t count_ = 0;
  std::array<Letter, kKeyLetters> x_{};
  std::array<std::array<std::uint8_t, LambdaSet::kMaxPeriod + 1>, kKeyLetters + 1> run_{};
  std::vector<std::vector<Key>> buckets_;
};

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

}  // namespace

LambdaSet LambdaSet::build(int k, PeriodRange range, const LambdaBuildOptions& options) {
  if (k < kMinAlphabet || k > kMaxAlphabet) {
    throw Error(ErrorCode::InvalidArgument, "alphabet size must be in [2, 16]");
  }
  if (range.pmin < 1 || range.pmax < range.pmin || range.pmax > kMaxPeriod) {
    throw Error(ErrorCode::InvalidArgument,
                "period range must satisfy 1 <= pmin <= pmax <= 16");
  }
  LambdaSet out;
  out.k_ = k;
  out.range_ = range;

  auto buckets = Enumerator(k, range, options.memory_budget_bytes).run();
  while (!buckets.empty() && buckets.back().empty()) buckets.pop_back();
  if (buckets.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "no minimal squares in range");
  }
  std::size_t total = 0;
  for (const auto& b : buckets) total += b.size();
  if (total >= kDead) throw Error(ErrorCode::ResourceLimit, "too many states for 32-bit ids");

  out.keys_.reserve(total);
  out.bucket_base_.reserve(buckets.size() + 1);
  for (auto& b : buckets) {
    out.bucket_base_.push_back(static_cast<std::uint32_t>(out.keys_.size()));
    out.keys_.insert(out.keys_.end(), b.begin(), b.end());
    std::vector<Key>().swap(b);
  }
  out.bucket_base_.push_back(static_cast<std::uint32_t>(out.keys_.size()));
  out.finalize_layout();
  out.build_transitions(detail::resolve_threads(options.threads));
  out.fingerprint_ = out.compute_fingerprint();
  return out;
}

void LambdaSet::finalize_layout() {
  const std::size_t n = keys_.size();
  distinct_.assign(n, 0);
  class_offset_.assign(n + 1, 0);
  for (std::size_t b = 0; b + 1 < bucket_base_.size(); ++b) {
    for (std::uint32_t s = bucket_base_[b]; s < bucket_base_[b + 1]; ++s) {
      int d = 0;
      for (std::size_t i = 0; i < b; ++i) d = std::max(d, key_letter(keys_[s], i) + 1);
      distinct_[s] = static_cast<std::uint8_t>(d);
      class_offset_[s + 1] = class_offset_[s] + static_cast<std::uint64_t>(d < k_ ? d + 1 : d);
    }
  }
}

void LambdaSet::build_transitions(int threads) {
  const std::size_t n = keys_.size();
  targets_.assign(class_offset_[n], kDead);

  // Children of a state are contiguous in the next bucket, ordered by their
  // last letter, and parents appear in the same order as their children.
  std::vector<std::uint32_t> child_begin(n, 0);
  std::vector<std::uint8_t> child_count(n, 0);
  for (std::size_t len = 0; len + 2 < bucket_base_.size(); ++len) {
    std::uint32_t parent = bucket_base_[len];
    for (std::uint32_t c = bucket_base_[len + 1]; c < bucket_base_[len + 2]; ++c) {
      const Key pk = clear_letter(keys_[c], len);
      while (keys_[parent] != pk) ++parent;
      if (child_count[parent]++ == 0) child_begin[parent] = c;
    }
  }

  std::vector<std::uint32_t> fail(n, 0);
  for (std::size_t len = 0; len + 1 < bucket_base_.size(); ++len) {
    const std::uint32_t lo = bucket_base_[len];
    const std::uint32_t hi = bucket_base_[len + 1];
    detail::parallel_for(hi - lo, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
      for (std::uint32_t s = lo + static_cast<std::uint32_t>(begin); s < lo + end; ++s) {
        const Key key = keys_[s];
        const int d = distinct_[s];
        const std::uint32_t f = fail[s];
        const std::size_t flen = s == 0 ? 0 : bucket_of(f);

        // Relabelling of the suffix that fail(s) represents.
        std::array<std::uint8_t, kMaxAlphabet + 1> sigma;
        sigma.fill(0xFF);
        if (s != 0) {
          std::uint8_t next = 0;
          for (std::size_t i = len - flen; i < len; ++i) {
            const Letter a = key_letter(key, i);
            if (sigma[a] == 0xFF) sigma[a] = next++;
          }
        }

        std::uint32_t child = child_begin[s];
        const std::uint32_t child_end = child + child_count[s];
        const int classes = d < k_ ? d + 1 : d;
        const int q = static_cast<int>(len + 1) / 2;
        for (int c = 0; c < classes; ++c) {
          const Letter a = static_cast<Letter>(c);
          std::uint32_t fallback = 0;
          if (s != 0) {
            const int fd = distinct_[f];
            const int fc = sigma[a] == 0xFF ? fd : sigma[a];
            fallback = targets_[class_offset_[f] + static_cast<std::uint64_t>(fc)];
          }
          std::uint32_t& target = targets_[class_offset_[s] + static_cast<std::uint64_t>(c)];
          if (child < child_end && key_letter(keys_[child], len) == a) {
            target = child;
            fail[child] = fallback;
            ++child;
            continue;
          }
          bool closes_square = false;
          if ((len + 1) % 2 == 0 && range_.contains(q)) {
            closes_square = key_letter(key, static_cast<std::size_t>(q - 1)) == a;
            for (int i = 0; closes_square && i + 1 < q; ++i) {
              closes_square = key_letter(key, static_cast<std::size_t>(i)) ==
                              key_letter(key, static_cast<std::size_t>(i + q));
            }
          }
          target = closes_square ? kDead : fallback;
        }
      }
    });
  }
}

std::uint32_t LambdaSet::bucket_of(std::uint32_t s) const {
  auto it = std::upper_bound(bucket_base_.begin(), bucket_base_.end(), s);
  return static_cast<std::uint32_t>(it - bucket_base_.begin() - 1);
}

std::uint64_t LambdaSet::compute_fingerprint() const {
  std::uint64_t h = kFnvOffset;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= kFnvPrime;
  };
  for (std::size_t len = 0; len + 1 < bucket_base_.size(); ++len) {
    for (std::uint32_t s = bucket_base_[len]; s < bucket_base_[len + 1]; ++s) {
      mix(static_cast<std::uint8_t>(len));
      for (std::size_t i = 0; i < len; ++i) mix(key_letter(keys_[s], i));
    }
  }
  return h;
}

std::uint64_t LambdaSet::memory_bytes() const noexcept {
  return keys_.size() * sizeof(Key) + bucket_base_.size() * sizeof(std::uint32_t) +
         distinct_.size() + class_offset_.size() * sizeof(std::uint64_t) +
         targets_.size() * sizeof(std::uint32_t);
}

std::vector<Letter> LambdaSet::word(StateId s) const {
  const std::size_t len = length(s);
  std::vector<Letter> w(len);
  for (std::size_t i = 0; i < len; ++i) w[i] = key_letter(keys_[s.value], i);
  return w;
}

std::size_t LambdaSet::length(StateId s) const {
  if (s.value >= size()) throw Error(ErrorCode::InvalidArgument, "state id out of range");
  return bucket_of(s.value);
}

int LambdaSet::class_count(StateId s) const {
  return static_cast<int>(class_offset_[s.value + 1] - class_offset_[s.value]);
}

int LambdaSet::multiplicity(StateId s, LetterClass c) const {
  const int d = distinct_[s.value];
  if (c.index >= class_count(s)) throw Error(ErrorCode::InvalidArgument, "invalid letter class");
  return c.index < d ? 1 : k_ - d;
}

int LambdaSet::last_letter_raw(std::uint32_t s) const {
  if (s == 0) return -1;
  return key_letter(keys_[s], bucket_of(s) - 1);
}

std::optional<LetterClass> LambdaSet::last_class(StateId s) const {
  const int a = last_letter_raw(s.value);
  if (a < 0) return std::nullopt;
  return LetterClass{static_cast<std::uint8_t>(a)};
}

std::optional<StateId> LambdaSet::find(std::span<const Letter> w) const {
  if (w.size() + 1 >= bucket_base_.size()) return std::nullopt;
  for (Letter a : w) {
    if (a >= k_) return std::nullopt;
  }
  const Key key = pack(w);
  auto first = keys_.begin() + bucket_base_[w.size()];
  auto last = keys_.begin() + bucket_base_[w.size() + 1];
  auto it = std::lower_bound(first, last, key);
  if (it == last || *it != key) return std::nullopt;
  return StateId{static_cast<std::uint32_t>(it - keys_.begin())};
}

std::optional<StateId> LambdaSet::step(StateId s, LetterClass c) const {
  if (s.value >= size()) throw Error(ErrorCode::InvalidArgument, "state id out of range");
  if (c.index >= class_count(s)) throw Error(ErrorCode::InvalidArgument, "invalid letter class");
  const std::uint32_t t = targets_[class_offset_[s.value] + c.index];
  if (t == kDead) return std::nullopt;
  return StateId{t};
}

std::vector<ClassEdge> LambdaSet::out_profile(StateId s) const {
  std::vector<ClassEdge> out;
  const int classes = class_count(s);
  out.reserve(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    LetterClass cls{static_cast<std::uint8_t>(c)};
    out.push_back({cls, multiplicity(s, cls), step(s, cls)});
  }
  return out;
}

StateId LambdaSet::state_of(std::span<const Letter> w) const {
  if (!is_square_free(w, range_)) {
    throw Error(ErrorCode::InvalidArgument,
                "word " + to_string(w) + " contains a square with period in range");
  }
  const std::size_t longest = std::min(w.size(), max_length());
  for (std::size_t len = longest; len > 0; --len) {
    const auto suffix = normalize(w.last(len));
    if (auto s = find(suffix)) return *s;
  }
  return StateId{0};
}

LetterClass LambdaSet::class_of(std::span<const Letter> w, Letter a) const {
  const StateId s = state_of(w);
  const std::size_t len = length(s);
  std::array<int, 256> label;
  label.fill(-1);
  int next = 0;
  for (Letter b : w.last(len)) {
    if (label[b] < 0) label[b] = next++;
  }
  if (label[a] >= 0) return LetterClass{static_cast<std::uint8_t>(label[a])};
  return LetterClass{static_cast<std::uint8_t>(distinct_[s.value])};
}

std::vector<std::uint8_t> LambdaSet::dump() const {
  detail::ByteWriter out;
  out.raw(std::string_view("TGLAM1"));
  out.u8(static_cast<std::uint8_t>(k_));
  out.u8(static_cast<std::uint8_t>(range_.pmin));
  out.u8(static_cast<std::uint8_t>(range_.pmax));
  out.u64(size());
  out.u64(fingerprint_);
  for (std::size_t len = 0; len + 1 < bucket_base_.size(); ++len) {
    for (std::uint32_t s = bucket_base_[len]; s < bucket_base_[len + 1]; ++s) {
      out.u8(static_cast<std::uint8_t>(len));
      for (std::size_t i = 0; i < len; i += 2) {
        std::uint8_t byte = key_letter(keys_[s], i);
        if (i + 1 < len) byte |= static_cast<std::uint8_t>(key_letter(keys_[s], i + 1) << 4);
        out.u8(byte);
      }
    }
  }
  for (std::uint32_t s = 0; s < size(); ++s) {
    const auto succ = successors(s);
    out.u8(static_cast<std::uint8_t>(succ.size()));
    for (std::uint32_t t : succ) out.u32(t);
  }
  return out.take();
}

LambdaSet LambdaSet::load(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  if (in.str(6) != "TGLAM1") throw Error(ErrorCode::FormatError, "bad magic, expected TGLAM1");
  LambdaSet out;
  out.k_ = in.u8();
  out.range_.pmin = in.u8();
  out.range_.pmax = in.u8();
  if (out.k_ < kMinAlphabet || out.k_ > kMaxAlphabet || out.range_.pmin < 1 ||
      out.range_.pmax < out.range_.pmin || out.range_.pmax > kMaxPeriod) {
    throw Error(ErrorCode::FormatError, "invalid TGLAM1 header");
  }
  const std::uint64_t count = in.u64();
  const std::uint64_t fingerprint = in.u64();
  if (count == 0 || count >= kDead) throw Error(ErrorCode::FormatError, "invalid state count");
  out.keys_.reserve(count);
  std::size_t prev_len = 0;
  for (std::uint64_t s = 0; s < count; ++s) {
    const std::size_t len = in.u8();
    if (len < prev_len || len > static_cast<std::size_t>(2 * out.range_.pmax - 1)) {
      throw Error(ErrorCode::FormatError, "state words out of canonical order");
    }
    while (out.bucket_base_.size() <= len) out.bucket_base_.push_back(static_cast<std::uint32_t>(s));
    prev_len = len;
    Key key = 0;
    for (std::size_t i = 0; i < len; i += 2) {
      const std::uint8_t byte = in.u8();
      key = with_letter(key, i, byte & 0xF);
      if (i + 1 < len) key = with_letter(key, i + 1, byte >> 4);
    }
    out.keys_.push_back(key);
  }
  out.bucket_base_.push_back(static_cast<std::uint32_t>(count));
  out.finalize_layout();
  out.targets_.resize(out.class_offset_.back());
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::size_t classes = in.u8();
    if (classes != out.class_offset_[s + 1] - out.class_offset_[s]) {
      throw Error(ErrorCode::FormatError, "class table does not match state word");
    }
    for (std::size_t c = 0; c < classes; ++c) {
      const std::uint32_t t = in.u32();
      if (t != kDead && t >= count) throw Error(ErrorCode::FormatError, "transition out of range");
      out.targets_[out.class_offset_[s] + c] = t;
    }
  }
  out.fingerprint_ = out.compute_fingerprint();
  if (out.fingerprint_ != fingerprint) {
    throw Error(ErrorCode::FormatError, "fingerprint mismatch in TGLAM1 data");
  }
  return out;
}

std::string describe_state(const LambdaSet& lambda, StateId s) {
  const auto w = lambda.word(s);
  return w.empty() ? std::string("ε") : to_string(w);
}

}  // namespace tg
