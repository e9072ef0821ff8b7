#pragma once

#include <cstdint>
#include <vector>

namespace qokd {

using uint128 = unsigned __int128;

// C(n, k) saturating at UINT64_MAX instead of overflowing; suitable for
// threshold searches ("is C(M,k) >= N") where exact huge values don't matter.
std::uint64_t binom_saturating(std::uint64_t n, std::uint64_t k);

// Exact C(n, k); requires the result to fit in 128 bits (ample for n <= 128,
// which covers every pool size this toolkit evaluates).
uint128 binom_exact(unsigned n, unsigned k);

double binom_double(unsigned n, unsigned k);

// --- k-subsets in colexicographic order -----------------------------------
//
// A k-subset is a strictly increasing vector of element indices. Colex order
// compares the largest differing element, so enumeration never needs to know
// the pool size: the first C(m, k) subsets are exactly the subsets of
// {0..m-1} for every m.

// Rank of a subset in colex order: sum of C(s[i], i+1).
std::uint64_t colex_rank(const std::vector<std::uint32_t>& subset);

// Inverse of colex_rank for a given subset size.
std::vector<std::uint32_t> colex_unrank(std::uint64_t rank, std::uint32_t k);

// Advance `subset` to its colex successor in place.
void colex_successor(std::vector<std::uint32_t>& subset);

}  // namespace qokd
