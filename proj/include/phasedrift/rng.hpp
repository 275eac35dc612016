#pragma once

#include <cstdint>
#include <limits>

namespace phasedrift {

// Purpose tags keep the streams of one path independent of each other.
enum class StreamTag : std::uint64_t {
  Field = 0x6669656c64ULL,
  LimitNoise = 0x6c696d6974ULL,
  QuenchedOffset = 0x7175656e63ULL,
};

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream key for (base_seed, path_index, purpose). Pure function, so the
// stream a path receives does not depend on which worker runs it.
inline constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index,
                                           StreamTag tag) {
  std::uint64_t h = mix64(base_seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (index + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ static_cast<std::uint64_t>(tag));
  return h;
}

// Counter-based generator: the i-th output is mix64(key + i * golden).
// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace phasedrift
