#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qokd/bits.hpp"
#include "qokd/qubit.hpp"
#include "qokd/random.hpp"

namespace qokd {

// Bob's sending strategy. Honest sends a uniformly random key state and
// announces it with a random decoy from the other basis. Bias sends diagonal
// states chosen so that Alice's conclusiveness probability is p+ at the
// marked positions and p- elsewhere; Bob then has no ground-truth bit.
struct BobStrategy {
  enum class Kind : std::uint8_t { Honest, Bias };
  Kind kind = Kind::Honest;
  BitString plus_mask;  // Bias only: raw positions boosted to p+

  static BobStrategy honest() { return {}; }
  static BobStrategy bias(BitString plus_positions);
};

// Alice's receiving strategy. HonestImmediate measures each qubit in a
// uniformly random basis. UsdIndividual models per-qubit unambiguous state
// discrimination of the announced pair: success reveals the sent state with
// probability 1 - 1/sqrt(2); failure yields no usable guess.
struct AliceStrategy {
  enum class Kind : std::uint8_t { HonestImmediate, UsdIndividual };
  Kind kind = Kind::HonestImmediate;

  static AliceStrategy honest() { return {Kind::HonestImmediate}; }
  static AliceStrategy usd() { return {Kind::UsdIndividual}; }
};

struct RawKeyRecord {
  std::uint64_t index = 0;
  std::optional<std::uint8_t> bob_bit;  // absent under Bias
  QubitState sent = kUp;
  Announcement announcement{kUp, kRight};
  std::optional<QubitState> outcome;  // absent under UsdIndividual
  Conclusiveness alice_verdict{false, 0};
};

struct RawKeyTranscript {
  AliceStrategy alice;
  BobStrategy bob;
  std::vector<RawKeyRecord> records;

  std::uint64_t length() const { return records.size(); }
  // Mask of positions Alice holds conclusively.
  BitString conclusive_mask() const;
  // Alice's bit per position (deduced when conclusive, guess otherwise).
  BitString alice_bits() const;
  // Bob's bit per position; throws if any record has no bob_bit.
  BitString bob_bits() const;
  bool bob_defined() const;
};

RawKeyTranscript run_exchange(std::uint64_t n, AliceStrategy alice,
                              BobStrategy bob, RandomStream& rng);

// One honest sender round: random bit, random state of that basis, random
// decoy from the other basis. The session machinery shares this draw so the
// monolithic and message-driven paths stay statistically identical.
RawKeyRecord draw_honest_bob_round(std::uint64_t index, RandomStream& rng);

// Exact probability that an honest measurement of a diagonal `sent` state
// yields a conclusive verdict under `ann`, by summing the Born rule over
// both basis choices. Rejects non-diagonal sent states.
double bias_conclusive_probability(QubitState sent, const Announcement& ann);

// The (state, announcement) combination realizing conclusiveness p+ or p-,
// drawing uniformly between the two equivalent combinations for each level.
struct BiasedRound {
  QubitState sent;
  Announcement announcement;
};
BiasedRound biased_round(bool plus, RandomStream& rng);

struct GuessAccuracyStats {
  std::uint64_t conclusive = 0;
  std::uint64_t inconclusive = 0;
  std::uint64_t conclusive_correct = 0;
  std::uint64_t inconclusive_correct = 0;
  double conclusive_fraction = 0.0;
  std::optional<double> inconclusive_guess_accuracy;  // absent when no denominator
};

// Conclusive fraction and inconclusive-guess accuracy against Bob's encoded
// bits. Requires an honest transcript: Bias leaves no ground truth and the
// UsdIndividual failure branch carries no usable guess.
GuessAccuracyStats guess_accuracy_stats(const RawKeyTranscript& t);

// One-record-per-line text form: "index bob_bit sent pair outcome verdict"
// with '-' for absent fields; round-trips through parse_raw_key_lines.
std::string format_raw_key_lines(const RawKeyTranscript& t);
RawKeyTranscript parse_raw_key_lines(const std::string& text);

}  // namespace qokd
