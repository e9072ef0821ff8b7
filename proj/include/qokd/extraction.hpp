#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qokd/bits.hpp"
#include "qokd/exchange.hpp"

namespace qokd {

// How raw-key positions combine into oblivious-key bits. Every scheme
// defines key bit j as the XOR of k raw positions; they differ in which
// positions and in how much raw material a length-N key consumes.
struct ExtractionScheme {
  enum class Kind : std::uint8_t { Original, Modified, Generalized };
  Kind kind = Kind::Original;
  std::uint64_t n = 0;  // key length N
  std::uint32_t k = 0;  // raw positions per key bit
  std::uint64_t m = 0;  // Generalized only: raw pool size

  // Disjoint groups of k: raw length k*N.
  static ExtractionScheme original(std::uint64_t n, std::uint32_t k);
  // Circular windows of k over N raw positions: raw length N.
  static ExtractionScheme modified(std::uint64_t n, std::uint32_t k);
  // First N k-subsets of a pool of M in colex order: raw length M,
  // requires binom(M, k) >= N.
  static ExtractionScheme generalized(std::uint64_t n, std::uint32_t k,
                                      std::uint64_t m);

  std::uint64_t raw_length() const;
  std::string name() const;
};

struct KeyBitDefinition {
  std::uint64_t key_index = 0;
  std::vector<std::uint64_t> qubit_indices;  // ascending within meaning of scheme
};

// Raw positions whose XOR defines key bit j.
KeyBitDefinition key_bit_definition(const ExtractionScheme& scheme,
                                    std::uint64_t j);

struct AliceGuess {
  std::uint8_t bit = 0;
  double confidence = 0.0;  // probability the guess is correct
};

struct ObliviousKeyView {
  std::uint64_t n = 0;
  // False when the transcript carried no ground-truth bits (biased sender);
  // bob_key is then all zeros and must not be used.
  bool bob_defined = false;
  BitString bob_key;
  std::map<std::uint64_t, std::uint8_t> alice_known;
  std::optional<std::map<std::uint64_t, AliceGuess>> alice_guesses;
};

struct ExtractOptions {
  bool with_guesses = false;
};

// Derive the oblivious key. Alice knows key bit j exactly when she holds all
// its raw positions conclusively; with_guesses adds her best guess and its
// exact correctness probability for every other key bit.
ObliviousKeyView extract(const RawKeyTranscript& t,
                         const ExtractionScheme& scheme,
                         const ExtractOptions& opts = {});

// Alice's side alone, from what she actually holds (conclusive mask and her
// per-position bits). bob_defined is false in the result.
ObliviousKeyView extract_alice(const BitString& conclusive,
                               const BitString& alice_bits,
                               const ExtractionScheme& scheme,
                               const ExtractOptions& opts = {});

// Bob's side alone: the full key from his raw bits.
BitString extract_bob_key(const BitString& bob_bits,
                          const ExtractionScheme& scheme);

// |alice_known| without computing any values.
std::uint64_t count_known(const BitString& conclusive,
                          const ExtractionScheme& scheme);

// Number of fully-conclusive k-subsets over the WHOLE pool (all
// binom(M, k) combinations, not just the first N); equals binom(X, k) for
// X conclusive positions. Exhaustive — small pools only.
std::uint64_t count_known_full_space(const BitString& conclusive,
                                     std::uint32_t k);

// Modified scheme only: indices j where the parity of adjacent key bits
// OK_j xor OK_{j+1} = q_j xor q_{j+k} is computable from conclusive
// positions j and (j+k) mod N.
std::vector<std::uint64_t> knowable_adjacent_parities(
    const BitString& conclusive, std::uint32_t k);

// Generalized scheme: number of key-bit pairs (i < j) among the first N
// definitions whose XOR is computable because the symmetric difference of
// their defining subsets is fully conclusive. Exhaustive — small N only.
std::uint64_t count_knowable_pair_parities(const BitString& conclusive,
                                           const ExtractionScheme& scheme);

// Smallest pool size M with binom(M, k) >= N.
std::uint64_t min_m(std::uint64_t n, std::uint32_t k);

// Combine r same-length keys with cyclic shifts:
// final[j] = XOR over m of keys[m][(j + shifts[m]) mod N]. Alice keeps a
// final bit only where she knows every contributing bit.
ObliviousKeyView dilute(const std::vector<ObliviousKeyView>& keys,
                        const std::vector<std::uint64_t>& shifts);

// Shift s maximizing |{ j in known_a : (j+s) mod N in known_b }|, ties
// broken toward the smallest s. Returns {shift, surviving_count}.
std::pair<std::uint64_t, std::uint64_t> optimal_shift(
    const std::vector<std::uint64_t>& known_a,
    const std::vector<std::uint64_t>& known_b, std::uint64_t n);

// Survivors of aligning known_a against known_b at one given shift.
std::uint64_t overlap_count(const std::vector<std::uint64_t>& known_a,
                            const std::vector<std::uint64_t>& known_b,
                            std::uint64_t shift, std::uint64_t n);

// Compact binary form: scheme tag, N, k, M, bob-defined flag, packed Bob
// key, then the sorted known set as (index, bit) pairs. Big-endian fields.
std::vector<std::uint8_t> serialize_key(const ObliviousKeyView& key,
                                        const ExtractionScheme& scheme);
std::pair<ObliviousKeyView, ExtractionScheme> deserialize_key(
    const std::vector<std::uint8_t>& bytes);

}  // namespace qokd
