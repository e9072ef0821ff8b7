#include "qokd/analytics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "qokd/combinatorics.hpp"
#include "qokd/random.hpp"

namespace qokd {

StreamingWindowCounter::StreamingWindowCounter(std::uint32_t k) : k_(k) {
  if (k < 1) throw std::invalid_argument("window length must be >= 1");
}

void StreamingWindowCounter::push(bool bit) {
  ++n_;
  if (bit) {
    ++ones_;
    ++run_;
    return;
  }
  if (!saw_zero_) {
    saw_zero_ = true;
    head_run_ = run_;  // counted at finish, merged with the tail run
  } else if (run_ >= k_) {
    circular_ += run_ - k_ + 1;
  }
  if (run_ >= k_) linear_ += run_ - k_ + 1;
  run_ = 0;
}

WindowCounts StreamingWindowCounter::finish() {
  if (finished_) throw std::logic_error("finish() called twice");
  finished_ = true;
  WindowCounts counts;
  counts.n = n_;
  counts.ones = ones_;
  if (!saw_zero_) {
    // All ones: every rotation is a window.
    counts.circular = n_ >= k_ ? n_ : 0;
    counts.linear = n_ >= k_ ? n_ - k_ + 1 : 0;
    return counts;
  }
  if (run_ >= k_) linear_ += run_ - k_ + 1;
  std::uint64_t wrapped = head_run_ + run_;  // tail run continues into head
  if (wrapped >= k_) circular_ += wrapped - k_ + 1;
  counts.circular = circular_;
  counts.linear = linear_;
  return counts;
}

WindowCounts count_windows(const BitString& bits, std::uint32_t k) {
  StreamingWindowCounter counter(k);
  for (std::uint64_t i = 0; i < bits.size(); ++i) counter.push(bits.get(i));
  return counter.finish();
}

double expected_streaks(std::uint64_t n, double p, std::uint32_t l) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p outside [0,1]");
  if (n < 1 || l < 1) throw std::invalid_argument("need n >= 1 and l >= 1");
  return double(n) * std::pow(p, double(l));
}

double markov_streak_bound(double expected, double t) {
  if (expected < 0.0 || t <= 0.0) {
    throw std::invalid_argument("need expected >= 0 and t > 0");
  }
  return std::min(1.0, expected / t);
}

KForTarget k_for_target(double n, double c) {
  if (!(n > c) || c <= 0.0) throw std::invalid_argument("need n > c > 0");
  KForTarget result;
  result.exact = std::log(n / c) / std::log(4.0);
  // The epsilon keeps exact powers of four (c = n/4^k) from rounding up an
  // extra step through floating-point noise.
  result.recommended =
      static_cast<std::uint32_t>(std::ceil(result.exact - 1e-9));
  if (result.recommended < 1) result.recommended = 1;
  return result;
}

double abort_prob_original(double c) {
  if (c < 0.0) throw std::invalid_argument("need c >= 0");
  return std::exp(-c);
}

double guess_prob_group(std::uint32_t x) {
  if (x < 1) {
    throw std::invalid_argument("a fully known group leaves nothing to guess");
  }
  double pow3 = std::pow(3.0, double(x));
  return (pow3 + 1.0) / (2.0 * pow3);
}

GeneralizedStats generalized_stats(std::uint32_t m, std::uint32_t k, double p) {
  if (k < 1 || k > m) throw std::invalid_argument("need 1 <= k <= m");
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("need 0 < p < 1");
  GeneralizedStats stats;
  stats.m = m;
  stats.k = k;
  stats.p = p;
  long double q = 1.0L - static_cast<long double>(p);
  long double nobit = 0.0L;
  for (std::uint32_t x = 0; x < k; ++x) {
    nobit += static_cast<long double>(binom_exact(m, x)) *
             std::pow(static_cast<long double>(p), static_cast<long double>(x)) *
             std::pow(q, static_cast<long double>(m - x));
  }
  stats.nobit_prob = static_cast<double>(nobit);
  long double survivors = static_cast<long double>(binom_exact(m, k)) *
                          std::pow(static_cast<long double>(p),
                                   static_cast<long double>(k));
  stats.conditional_average = static_cast<double>(survivors / (1.0L - nobit));
  return stats;
}

BiasStats bias_attack_stats(std::uint64_t n, std::uint32_t k) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  BiasStats stats;
  stats.n = n;
  stats.k = k;
  stats.p_plus = kBiasPlus;
  stats.p_minus = kBiasMinus;
  stats.plus_segment =
      static_cast<std::uint64_t>(std::llround(kBiasMinus * double(n)));
  stats.e_plus = kBiasMinus * double(n) * std::pow(kBiasPlus, double(k));
  stats.e_minus = kBiasPlus * double(n) * std::pow(kBiasMinus, double(k));
  stats.ratio = std::pow(kBiasPlus / kBiasMinus, double(k - 1));
  stats.localization = stats.e_plus / (stats.e_plus + stats.e_minus);
  return stats;
}

StreakCalibration calibrate_streak_null(std::uint64_t n, std::uint32_t k,
                                        double p, std::uint32_t runs,
                                        std::uint64_t seed) {
  if (runs < 2) throw std::invalid_argument("need at least 2 calibration runs");
  StreakCalibration cal;
  cal.n = n;
  cal.k = k;
  cal.p = p;
  cal.runs = runs;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint32_t r = 0; r < runs; ++r) {
    RandomStream rng = RandomStream::derive(seed, "streak-null", r);
    StreamingWindowCounter counter(k);
    for (std::uint64_t i = 0; i < n; ++i) counter.push(rng.bernoulli(p));
    std::uint64_t count = counter.finish().circular;
    sum += double(count);
    sum_sq += double(count) * double(count);
    cal.max_count = std::max(cal.max_count, count);
  }
  cal.mean = sum / runs;
  cal.sd = std::sqrt((sum_sq - sum * sum / runs) / (runs - 1));
  return cal;
}

namespace {

const StreakCalibration& cached_calibration(std::uint64_t n, std::uint32_t k) {
  static std::mutex mutex;
  static std::map<std::pair<std::uint64_t, std::uint32_t>, StreakCalibration>
      cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto [it, inserted] = cache.try_emplace({n, k});
  if (inserted) it->second = calibrate_streak_null(n, k);
  return it->second;
}

}  // namespace

BiasDetection bias_detection_statistic(const RawKeyTranscript& t,
                                       std::uint32_t k) {
  std::uint64_t n = t.length();
  if (n < 100) {
    throw std::invalid_argument("detection needs at least 100 positions");
  }
  const StreakCalibration& cal = cached_calibration(n, k);
  WindowCounts counts = count_windows(t.conclusive_mask(), k);
  BiasDetection det;
  det.window_count = counts.circular;
  det.z_conclusive = (double(counts.ones) - double(n) * 0.25) /
                     std::sqrt(double(n) * 0.25 * 0.75);
  det.z_streaks = (double(counts.circular) - expected_streaks(n, 0.25, k)) /
                  cal.sd;
  det.flagged = counts.circular > cal.max_count ||
                std::abs(det.z_conclusive) > 3.29;
  return det;
}

}  // namespace qokd
