#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tg/word.hpp"

namespace tg {

struct StateId {
  std::uint32_t value = 0;
  auto operator<=>(const StateId&) const = default;
};

// Letters absent from a state word are interchangeable, so transitions are
// stored per class: index j < distinct_count is the normalized letter j,
// index == distinct_count is the "fresh" class of the remaining letters.
struct LetterClass {
  std::uint8_t index = 0;
  auto operator<=>(const LetterClass&) const = default;
};

struct ClassEdge {
  LetterClass cls;
  int multiplicity = 0;
  std::optional<StateId> target;  // nullopt: the letter completes a square
};

struct LambdaBuildOptions {
  std::uint64_t memory_budget_bytes = 8ull << 30;
  int threads = 1;
};

// Normalized proper prefixes of the minimal squares with period in range,
// enumerated by (length, lexicographic) with the empty word as state 0, plus
// the suffix transition function on letter classes.
class LambdaSet {
 public:
  static constexpr std::uint32_t kDead = 0xFFFFFFFFu;
  static constexpr int kMaxPeriod = 16;
  // Rough footprint of one state, used to enforce the memory budget while
  // enumerating.
  static constexpr std::uint64_t kBytesPerStateEstimate = 56;

  static LambdaSet build(int k, PeriodRange range, const LambdaBuildOptions& options = {});

  int alphabet_size() const noexcept { return k_; }
  PeriodRange range() const noexcept { return range_; }
  std::size_t size() const noexcept { return keys_.size(); }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  std::size_t max_length() const noexcept { return bucket_base_.size() - 2; }
  std::uint64_t memory_bytes() const noexcept;

  std::vector<Letter> word(StateId s) const;
  std::size_t length(StateId s) const;
  int distinct_count(StateId s) const { return distinct_[s.value]; }
  int class_count(StateId s) const;
  int multiplicity(StateId s, LetterClass c) const;
  // Class of the final letter of the state word; nullopt for the empty word.
  std::optional<LetterClass> last_class(StateId s) const;

  std::optional<StateId> find(std::span<const Letter> normalized_word) const;
  // The single-letter state "0".
  StateId zero_state() const noexcept { return StateId{1}; }

  std::optional<StateId> step(StateId s, LetterClass c) const;
  std::vector<ClassEdge> out_profile(StateId s) const;

  // Longest suffix of w that is a state up to renaming. Throws when w
  // contains a square with period in range.
  StateId state_of(std::span<const Letter> w) const;
  // Class of concrete letter a relative to state_of(w).
  LetterClass class_of(std::span<const Letter> w, Letter a) const;

  // Raw successor slice for hot loops: entry c is the target of class c or
  // kDead.
  std::span<const std::uint32_t> successors(std::uint32_t s) const {
    return {targets_.data() + class_offset_[s], targets_.data() + class_offset_[s + 1]};
  }
  int distinct_raw(std::uint32_t s) const { return distinct_[s]; }
  int last_letter_raw(std::uint32_t s) const;

  std::vector<std::uint8_t> dump() const;
  static LambdaSet load(std::span<const std::uint8_t> bytes);

 private:
  using Key = unsigned __int128;

  LambdaSet() = default;
  std::uint32_t bucket_of(std::uint32_t s) const;
  std::uint64_t compute_fingerprint() const;
  void finalize_layout();
  void build_transitions(int threads);

  int k_ = 0;
  PeriodRange range_{};
  std::vector<Key> keys_;                  // canonical order
  std::vector<std::uint32_t> bucket_base_; // first state of each length, plus end
  std::vector<std::uint8_t> distinct_;
  std::vector<std::uint64_t> class_offset_;
  std::vector<std::uint32_t> targets_;
  std::uint64_t fingerprint_ = 0;
};

std::string describe_state(const LambdaSet& lambda, StateId s);

}  // namespace tg
