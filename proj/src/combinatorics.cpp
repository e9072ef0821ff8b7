#include "qokd/combinatorics.hpp"

#include <limits>
#include <stdexcept>

namespace qokd {
namespace {

constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

}  // namespace

std::uint64_t binom_saturating(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  uint128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;  // exact: acc*(n-k+i) is divisible by i here
    if (acc > kU64Max) return kU64Max;
  }
  return static_cast<std::uint64_t>(acc);
}

uint128 binom_exact(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  uint128 acc = 1;
  for (unsigned i = 1; i <= k; ++i) {
    uint128 next = acc * (n - k + i);
    if (next / (n - k + i) != acc) {
      throw std::overflow_error("binom_exact: result exceeds 128 bits");
    }
    acc = next / i;
  }
  return acc;
}

double binom_double(unsigned n, unsigned k) {
  return static_cast<double>(static_cast<long double>(binom_exact(n, k)));
}

std::uint64_t colex_rank(const std::vector<std::uint32_t>& subset) {
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    rank += binom_saturating(subset[i], i + 1);
  }
  return rank;
}

std::vector<std::uint32_t> colex_unrank(std::uint64_t rank, std::uint32_t k) {
  std::vector<std::uint32_t> subset(k);
  for (std::uint32_t slot = k; slot > 0; --slot) {
    // Largest element e with C(e, slot) <= remaining rank.
    std::uint32_t e = slot - 1;
    while (binom_saturating(e + 1, slot) <= rank) ++e;
    subset[slot - 1] = e;
    rank -= binom_saturating(e, slot);
  }
  return subset;
}

void colex_successor(std::vector<std::uint32_t>& subset) {
  std::size_t k = subset.size();
  if (k == 0) {
    throw std::invalid_argument("empty subset has no successor");
  }
  // Find the lowest slot that can advance without colliding with the slot
  // above it; everything below resets to the minimal prefix {0,1,...}.
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (subset[i] + 1 < subset[i + 1]) {
      ++subset[i];
      for (std::size_t j = 0; j < i; ++j) subset[j] = static_cast<std::uint32_t>(j);
      return;
    }
  }
  ++subset[k - 1];
  for (std::size_t j = 0; j + 1 < k; ++j) subset[j] = static_cast<std::uint32_t>(j);
}

}  // namespace qokd
