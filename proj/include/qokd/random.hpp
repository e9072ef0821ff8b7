#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace qokd {

// Seed scrambler; also used to derive independent substream seeds.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, for turning stream names into tags.
inline constexpr std::uint64_t hash_tag(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for the substream identified by (master seed, tag, index); used both
// for in-process stream derivation and for handing whole-session seeds to
// concurrent runs.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::uint64_t tag,
                                           std::uint64_t index = 0) noexcept {
  std::uint64_t s = splitmix64(master ^ splitmix64(tag));
  return s ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + tag);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::string_view name,
                                           std::uint64_t index = 0) noexcept {
  return derive_seed(master, hash_tag(name), index);
}

// Deterministic random stream. Streams for concurrent work are derived from
// (master seed, stream tag, index) so that results do not depend on scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  static RandomStream derive(std::uint64_t master, std::uint64_t tag,
                             std::uint64_t index = 0) {
    return RandomStream(derive_seed(master, tag, index));
  }

  static RandomStream derive(std::uint64_t master, std::string_view name,
                             std::uint64_t index = 0) {
    return RandomStream(derive_seed(master, hash_tag(name), index));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0,1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform in [0,n), unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below(0) is empty");
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return r % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace qokd
