#pragma once

#include <cstdint>

#include "qokd/bits.hpp"
#include "qokd/exchange.hpp"

namespace qokd {

// --- window / streak counting ----------------------------------------------
//
// A "survivor" is a window of k consecutive ones; the circular convention
// wraps across the end (matching the Modified key definition, where the
// windows ARE the key bits), the linear one does not.

struct WindowCounts {
  std::uint64_t n = 0;
  std::uint64_t ones = 0;
  std::uint64_t circular = 0;
  std::uint64_t linear = 0;
};

// One-pass run-length counter usable on streams that are never materialized.
class StreamingWindowCounter {
 public:
  explicit StreamingWindowCounter(std::uint32_t k);

  void push(bool bit);
  // Merges the boundary runs and returns the totals; call exactly once.
  WindowCounts finish();

 private:
  std::uint32_t k_;
  std::uint64_t n_ = 0;
  std::uint64_t ones_ = 0;
  std::uint64_t run_ = 0;        // current trailing run of ones
  std::uint64_t head_run_ = 0;   // run touching position 0
  bool saw_zero_ = false;
  std::uint64_t circular_ = 0;   // interior-run windows accumulated so far
  std::uint64_t linear_ = 0;
  bool finished_ = false;
};

WindowCounts count_windows(const BitString& bits, std::uint32_t k);

// --- closed-form oracles ----------------------------------------------------

// Expected number of length-l all-ones circular windows in a Bernoulli(p)
// string of length n: n * p^l.
double expected_streaks(std::uint64_t n, double p, std::uint32_t l);

// Markov bound: P(count >= t) <= min(1, expected / t).
double markov_streak_bound(double expected, double t);

struct KForTarget {
  double exact = 0.0;          // log4(n / c)
  std::uint32_t recommended = 0;  // rounded up (tiny epsilon for exact powers)
};

// Group size leaving Alice an expected c known key bits: k = log4(n/c).
KForTarget k_for_target(double n, double c);

// Probability that a first exchange leaves Alice without any known key bit
// when parameters target c expected known bits.
double abort_prob_original(double c);

// Probability that Alice's XOR guess of a group with x inconclusive
// positions is correct: (3^x + 1) / (2 * 3^x). Rejects x = 0 (fully known).
double guess_prob_group(std::uint32_t x);

// --- generalized-scheme statistics ------------------------------------------

struct GeneralizedStats {
  std::uint32_t m = 0;
  std::uint32_t k = 0;
  double p = 0.0;
  double nobit_prob = 0.0;          // P(Binomial(m, p) < k), exact
  double conditional_average = 0.0;  // binom(m,k) p^k / (1 - nobit_prob)
};

GeneralizedStats generalized_stats(std::uint32_t m, std::uint32_t k, double p);

// --- bias-attack quantities --------------------------------------------------

inline constexpr std::uint64_t kStreakNullSeed = 271828182845;

struct BiasStats {
  std::uint64_t n = 0;
  std::uint32_t k = 0;
  double p_plus = 0.0;
  double p_minus = 0.0;
  // Length of the raw segment boosted to p_plus: round(p_minus * n), the
  // unique choice keeping the overall conclusive fraction at 2*p+*p- = 1/4.
  std::uint64_t plus_segment = 0;
  double e_plus = 0.0;   // expected survivors inside the boosted segment
  double e_minus = 0.0;  // expected survivors in the rest
  double ratio = 0.0;    // e_plus / e_minus = (p+/p-)^(k-1)
  double localization = 0.0;  // e_plus / (e_plus + e_minus)
};

BiasStats bias_attack_stats(std::uint64_t n, std::uint32_t k);

// Null distribution of the circular window count over honest Bernoulli(p)
// strings, calibrated by Monte Carlo at a pinned seed (no closed form:
// windows overlap).
struct StreakCalibration {
  std::uint64_t n = 0;
  std::uint32_t k = 0;
  double p = 0.0;
  std::uint32_t runs = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::uint64_t max_count = 0;
};

StreakCalibration calibrate_streak_null(std::uint64_t n, std::uint32_t k,
                                        double p = 0.25,
                                        std::uint32_t runs = 512,
                                        std::uint64_t seed = kStreakNullSeed);

struct BiasDetection {
  double z_conclusive = 0.0;  // conclusive count vs Binomial(n, 1/4)
  double z_streaks = 0.0;     // window count vs mean n/4^k, calibrated sd
  std::uint64_t window_count = 0;
  bool flagged = false;
};

// Flags a transcript when its window count exceeds the calibrated null
// maximum or its conclusive rate deviates past |z| = 3.29 (each tail alone
// keeps the honest false-positive rate well under 1%). Calibrations are
// cached per (n, k).
BiasDetection bias_detection_statistic(const RawKeyTranscript& t,
                                       std::uint32_t k);

}  // namespace qokd
