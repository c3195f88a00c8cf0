#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cadence {

/// Seeded generator whose outputs are identical on every platform.
/// std::shuffle and std::uniform_int_distribution are implementation-defined,
/// so both are replaced here by explicit algorithms over mt19937_64 words.
class StableRng {
 public:
  explicit StableRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cadence
