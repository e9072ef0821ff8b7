#include "qokd/qubit.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace qokd {
namespace {

// Squared overlap by octant distance d in 0..4: cos^2(22.5 * d degrees).
// Stored so that entries d and 4-d sum to one exactly, which keeps the two
// outcome probabilities of every measurement summing to one exactly.
constexpr double kOverlapByDistance[5] = {
    1.0,
    0.85355339059327373,
    0.5,
    1.0 - 0.85355339059327373,
    0.0,
};

void check_state(QubitState s) {
  std::uint8_t o = s.octant();
  if (o > 7 || o == 3 || o == 7) {
    throw std::invalid_argument("invalid qubit state octant " +
                                std::to_string(o));
  }
}

int octant_distance(QubitState a, QubitState b) {
  int d = std::abs(int(a.octant()) - int(b.octant()));
  return d > 4 ? 8 - d : d;
}

}  // namespace

std::string QubitState::name() const {
  switch (octant_) {
    case 0: return "up";
    case 1: return "ne";
    case 2: return "right";
    case 4: return "down";
    case 5: return "sw";
    case 6: return "left";
    default: return "invalid(" + std::to_string(octant_) + ")";
  }
}

Basis basis_of(QubitState s) {
  check_state(s);
  if (s.is_diagonal()) {
    throw std::invalid_argument("diagonal state " + s.name() +
                                " belongs to no key basis");
  }
  return s.octant() % 4 == 0 ? Basis::UpDown : Basis::LeftRight;
}

std::uint8_t bit_of(QubitState s) { return basis_bit(basis_of(s)); }

double overlap_sq(QubitState a, QubitState b) {
  check_state(a);
  check_state(b);
  return kOverlapByDistance[octant_distance(a, b)];
}

Announcement::Announcement(QubitState a, QubitState b)
    : first_(a.octant() <= b.octant() ? a : b),
      second_(a.octant() <= b.octant() ? b : a) {
  basis_of(first_);  // also validates against diagonals
  basis_of(second_);
  if (basis_of(first_) == basis_of(second_)) {
    throw std::invalid_argument("announcement needs one state per basis");
  }
  if (overlap_sq(first_, second_) == 0.0) {
    throw std::invalid_argument("announced states must be non-orthogonal");
  }
}

std::string Announcement::name() const {
  return "{" + first_.name() + "," + second_.name() + "}";
}

QubitState measure(QubitState state, Basis basis, RandomStream& rng) {
  check_state(state);
  auto [s0, s1] = basis_states(basis);
  double p0 = overlap_sq(state, s0);
  return rng.bernoulli(p0) ? s0 : s1;
}

Conclusiveness evaluate_conclusiveness(QubitState outcome,
                                       const Announcement& ann) {
  basis_of(outcome);  // outcomes are key states by construction
  QubitState a = ann.first();
  QubitState b = ann.second();
  bool orth_a = overlap_sq(outcome, a) == 0.0;
  bool orth_b = overlap_sq(outcome, b) == 0.0;
  // Both announced states non-orthogonal by contract, so at most one of the
  // two exclusions can fire.
  if (orth_a) return Conclusiveness::conclusive_bit(bit_of(b));
  if (orth_b) return Conclusiveness::conclusive_bit(bit_of(a));
  if (outcome == a) return Conclusiveness::inconclusive_guess(bit_of(a));
  if (outcome == b) return Conclusiveness::inconclusive_guess(bit_of(b));
  // Outcome matches neither announced state: guess the nearer one, and on a
  // tie fall back to bit 0.
  double oa = overlap_sq(outcome, a);
  double ob = overlap_sq(outcome, b);
  if (oa > ob) return Conclusiveness::inconclusive_guess(bit_of(a));
  if (ob > oa) return Conclusiveness::inconclusive_guess(bit_of(b));
  return Conclusiveness::inconclusive_guess(0);
}

double usd_success_from_overlap(double overlap) {
  if (overlap < 0.0 || overlap > 1.0) {
    throw std::invalid_argument("overlap outside [0,1]");
  }
  return 1.0 - std::sqrt(overlap);
}

double usd_success_prob(const Announcement& ann) {
  return usd_success_from_overlap(overlap_sq(ann.first(), ann.second()));
}

}  // namespace qokd
