#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "qokd/random.hpp"

namespace qokd {

// The six planar states, identified by the angle 45*octant on the great
// circle of real-amplitude states. Octants 3 and 7 are unused.
//
//   0 = up, 2 = right, 4 = down, 6 = left   (the four key states)
//   1 = north-east, 5 = south-west          (the two bias states)
//
// Two states separated by d octants (planar angle 45*d degrees) have squared
// overlap cos^2(22.5*d degrees): antipodal states (d=4) are orthogonal, the
// key states of different bases (d=2) overlap with 1/2.
class QubitState {
 public:
  constexpr explicit QubitState(std::uint8_t octant) : octant_(octant) {}

  constexpr std::uint8_t octant() const { return octant_; }
  constexpr bool is_key_state() const { return octant_ % 2 == 0; }
  constexpr bool is_diagonal() const { return octant_ % 2 == 1; }

  constexpr bool operator==(const QubitState&) const = default;

  std::string name() const;

 private:
  std::uint8_t octant_;
};

inline constexpr QubitState kUp{0};
inline constexpr QubitState kNorthEast{1};
inline constexpr QubitState kRight{2};
inline constexpr QubitState kDown{4};
inline constexpr QubitState kSouthWest{5};
inline constexpr QubitState kLeft{6};

// Preparation basis; the basis, not the state, encodes the bit.
enum class Basis : std::uint8_t {
  UpDown = 0,     // states {up, down}, encodes bit 0
  LeftRight = 1,  // states {right, left}, encodes bit 1
};

constexpr std::uint8_t basis_bit(Basis b) { return static_cast<std::uint8_t>(b); }

constexpr std::array<QubitState, 2> basis_states(Basis b) {
  return b == Basis::UpDown ? std::array<QubitState, 2>{kUp, kDown}
                            : std::array<QubitState, 2>{kRight, kLeft};
}

// Basis of a key state.
Basis basis_of(QubitState s);

// Bit encoded by a key state (the bit of its basis).
std::uint8_t bit_of(QubitState s);

double overlap_sq(QubitState a, QubitState b);

// A sent-state announcement: one state from each basis, non-orthogonal,
// stored in ascending octant order so the encoding leaks nothing about
// which of the two was actually sent.
class Announcement {
 public:
  Announcement(QubitState a, QubitState b);

  QubitState first() const { return first_; }
  QubitState second() const { return second_; }

  bool contains(QubitState s) const { return s == first_ || s == second_; }

  bool operator==(const Announcement&) const = default;

  std::string name() const;

 private:
  QubitState first_;
  QubitState second_;
};

struct Conclusiveness {
  bool conclusive;
  std::uint8_t bit;  // deduced bit when conclusive, best guess otherwise

  static Conclusiveness conclusive_bit(std::uint8_t b) { return {true, b}; }
  static Conclusiveness inconclusive_guess(std::uint8_t b) { return {false, b}; }

  bool operator==(const Conclusiveness&) const = default;
};

// Projective measurement in `basis`; outcome probabilities follow the
// squared overlaps and sum to one exactly.
QubitState measure(QubitState state, Basis basis, RandomStream& rng);

// Alice's verdict for a measured outcome given the announced pair. The
// outcome is conclusive exactly when it is orthogonal to one announced
// state; the sent state must then have been the other one. Otherwise the
// best guess is the announced state equal to the outcome (or, if neither
// matches, the nearer one; ties resolve to bit 0).
Conclusiveness evaluate_conclusiveness(QubitState outcome,
                                       const Announcement& ann);

// Success probability of unambiguous discrimination of the announced pair:
// 1 - sqrt(overlap) = 1 - 1/sqrt(2) for every valid announcement.
double usd_success_prob(const Announcement& ann);

// Same formula on a raw squared overlap; exists so the orthogonal-pair
// limit can be exercised even though Announcement forbids such pairs.
double usd_success_from_overlap(double overlap);

// 1 - 1/sqrt(2), written so the constant is bit-identical to the runtime
// computation 1.0 - std::sqrt(0.5).
inline constexpr double kUsdSuccessProb = 1.0 - 0.70710678118654752440;
inline constexpr double kBiasPlus = 0.85355339059327373;  // 1/2 + 1/(2*sqrt(2))
inline constexpr double kBiasMinus = 1.0 - kBiasPlus;

}  // namespace qokd
