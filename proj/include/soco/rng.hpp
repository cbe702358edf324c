#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace soco::rng {

/// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the stream name, folded through mix64.
constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

/// Derives an independent key for the named sub-stream at coordinates (a, b),
/// e.g. (sample_id, step). Draws made under one key never depend on how many
/// draws another key consumed.
constexpr std::uint64_t stream_key(std::uint64_t master, std::string_view name, std::uint64_t a = 0,
                                   std::uint64_t b = 0) {
  std::uint64_t k = mix64(master ^ hash_name(name));
  k = mix64(k ^ mix64(a + 0x9E3779B97F4A7C15ULL));
  k = mix64(k ^ mix64(b + 0xD1B54A32D192ED03ULL));
  return k;
}

/// Counter-based engine: the i-th output is mix64(key + i * golden), the
/// SplitMix64 sequence. Satisfies UniformRandomBitGenerator.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterEngine(std::uint64_t key) : key_(key) {}
  CounterEngine(std::uint64_t master, std::string_view name, std::uint64_t a = 0, std::uint64_t b = 0)
      : key_(stream_key(master, name, a, b)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace soco::rng
