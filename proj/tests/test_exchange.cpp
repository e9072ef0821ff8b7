#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "qokd/exchange.hpp"

using namespace qokd;

TEST_CASE("identical seeds produce identical transcripts") {
  RandomStream r1(31), r2(31), r3(32);
  auto t1 = run_exchange(500, AliceStrategy::honest(), BobStrategy::honest(), r1);
  auto t2 = run_exchange(500, AliceStrategy::honest(), BobStrategy::honest(), r2);
  auto t3 = run_exchange(500, AliceStrategy::honest(), BobStrategy::honest(), r3);
  CHECK(format_raw_key_lines(t1) == format_raw_key_lines(t2));
  CHECK(format_raw_key_lines(t1) != format_raw_key_lines(t3));
}

TEST_CASE("honest statistics: conclusive quarter, guesses two thirds, no false certainty") {
  RandomStream rng(7);
  const std::uint64_t n = 400000;
  auto t = run_exchange(n, AliceStrategy::honest(), BobStrategy::honest(), rng);
  CHECK(t.bob_defined());
  GuessAccuracyStats s = guess_accuracy_stats(t);
  // Conclusive verdicts are never wrong — exact, not statistical.
  CHECK(s.conclusive_correct == s.conclusive);
  // 4.5 sigma bands.
  double sigma_frac = std::sqrt(0.25 * 0.75 / double(n));
  CHECK(s.conclusive_fraction > 0.25 - 4.5 * sigma_frac);
  CHECK(s.conclusive_fraction < 0.25 + 4.5 * sigma_frac);
  REQUIRE(s.inconclusive_guess_accuracy.has_value());
  double acc = *s.inconclusive_guess_accuracy;
  double sigma_acc = std::sqrt(2.0 / 9.0 / double(s.inconclusive));
  CHECK(acc > 2.0 / 3.0 - 4.5 * sigma_acc);
  CHECK(acc < 2.0 / 3.0 + 4.5 * sigma_acc);
}

TEST_CASE("conclusive mask and bit views are consistent with records") {
  RandomStream rng(12);
  auto t = run_exchange(300, AliceStrategy::honest(), BobStrategy::honest(), rng);
  BitString mask = t.conclusive_mask();
  BitString alice = t.alice_bits();
  BitString bob = t.bob_bits();
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& r = t.records[i];
    CHECK(mask.get(i) == r.alice_verdict.conclusive);
    CHECK(alice.get(i) == (r.alice_verdict.bit != 0));
    CHECK(bob.get(i) == (*r.bob_bit != 0));
    if (r.alice_verdict.conclusive) CHECK(alice.get(i) == bob.get(i));
    // The announcement always contains the sent state.
    CHECK(r.announcement.contains(r.sent));
  }
}

TEST_CASE("discrimination succeeds at the 1 - 1/sqrt(2) rate and never errs") {
  RandomStream rng(21);
  const std::uint64_t n = 400000;
  auto t = run_exchange(n, AliceStrategy::usd(), BobStrategy::honest(), rng);
  std::uint64_t conclusive = 0;
  for (const auto& r : t.records) {
    CHECK_FALSE(r.outcome.has_value());  // no projective outcome under USD
    if (r.alice_verdict.conclusive) {
      ++conclusive;
      CHECK(r.alice_verdict.bit == *r.bob_bit);
    }
  }
  double fraction = double(conclusive) / double(n);
  double sigma = std::sqrt(kUsdSuccessProb * (1 - kUsdSuccessProb) / double(n));
  CHECK(fraction > kUsdSuccessProb - 4.5 * sigma);
  CHECK(fraction < kUsdSuccessProb + 4.5 * sigma);
  CHECK_THROWS_AS(guess_accuracy_stats(t), std::invalid_argument);
}

TEST_CASE("bias levels have the exact Born conclusiveness probabilities") {
  Announcement low(kUp, kRight);
  Announcement high(kDown, kLeft);
  CHECK(bias_conclusive_probability(kSouthWest, low) == kBiasPlus);
  CHECK(bias_conclusive_probability(kNorthEast, low) == kBiasMinus);
  CHECK(bias_conclusive_probability(kNorthEast, high) == kBiasPlus);
  CHECK(bias_conclusive_probability(kSouthWest, high) == kBiasMinus);
  CHECK_THROWS_AS(bias_conclusive_probability(kUp, low), std::invalid_argument);
}

TEST_CASE("biased rounds realize the requested level in both variants") {
  RandomStream rng(5);
  bool saw_ne = false, saw_sw = false;
  for (int i = 0; i < 64; ++i) {
    BiasedRound plus = biased_round(true, rng);
    CHECK(bias_conclusive_probability(plus.sent, plus.announcement) == kBiasPlus);
    BiasedRound minus = biased_round(false, rng);
    CHECK(bias_conclusive_probability(minus.sent, minus.announcement) ==
          kBiasMinus);
    saw_ne = saw_ne || plus.sent == kNorthEast;
    saw_sw = saw_sw || plus.sent == kSouthWest;
  }
  // Both mirror realizations occur.
  CHECK(saw_ne);
  CHECK(saw_sw);
}

TEST_CASE("biased exchange hits p+ and p- empirically") {
  const std::uint64_t n = 200000;
  RandomStream rng(3);

  BitString all_plus(n, true);
  auto tp = run_exchange(n, AliceStrategy::honest(), BobStrategy::bias(all_plus),
                         rng);
  CHECK_FALSE(tp.bob_defined());
  CHECK_THROWS_AS(tp.bob_bits(), std::invalid_argument);
  CHECK_THROWS_AS(guess_accuracy_stats(tp), std::invalid_argument);
  double frac_plus = double(tp.conclusive_mask().popcount()) / double(n);
  double sigma_plus = std::sqrt(kBiasPlus * kBiasMinus / double(n));
  CHECK(frac_plus > kBiasPlus - 4.5 * sigma_plus);
  CHECK(frac_plus < kBiasPlus + 4.5 * sigma_plus);

  BitString all_minus(n);
  auto tm = run_exchange(n, AliceStrategy::honest(),
                         BobStrategy::bias(all_minus), rng);
  double frac_minus = double(tm.conclusive_mask().popcount()) / double(n);
  CHECK(frac_minus > kBiasMinus - 4.5 * sigma_plus);
  CHECK(frac_minus < kBiasMinus + 4.5 * sigma_plus);
}

TEST_CASE("invalid strategy combinations are rejected") {
  RandomStream rng(1);
  CHECK_THROWS_AS(
      run_exchange(0, AliceStrategy::honest(), BobStrategy::honest(), rng),
      std::invalid_argument);
  BitString wrong_len(5);
  CHECK_THROWS_AS(run_exchange(10, AliceStrategy::honest(),
                               BobStrategy::bias(wrong_len), rng),
                  std::invalid_argument);
  BitString mask(10);
  CHECK_THROWS_AS(
      run_exchange(10, AliceStrategy::usd(), BobStrategy::bias(mask), rng),
      std::invalid_argument);
}

TEST_CASE("transcript text form round-trips") {
  RandomStream rng(17);
  auto honest =
      run_exchange(64, AliceStrategy::honest(), BobStrategy::honest(), rng);
  auto usd = run_exchange(64, AliceStrategy::usd(), BobStrategy::honest(), rng);
  BitString mask(64);
  for (std::uint64_t i = 0; i < 32; ++i) mask.set(i, true);
  auto biased =
      run_exchange(64, AliceStrategy::honest(), BobStrategy::bias(mask), rng);
  for (const auto* t : {&honest, &usd, &biased}) {
    std::string text = format_raw_key_lines(*t);
    RawKeyTranscript parsed = parse_raw_key_lines(text);
    REQUIRE(parsed.records.size() == t->records.size());
    CHECK(format_raw_key_lines(parsed) == text);
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
      CHECK(parsed.records[i].index == t->records[i].index);
      CHECK(parsed.records[i].bob_bit == t->records[i].bob_bit);
      CHECK(parsed.records[i].sent == t->records[i].sent);
      CHECK(parsed.records[i].announcement == t->records[i].announcement);
      CHECK(parsed.records[i].outcome == t->records[i].outcome);
      CHECK(parsed.records[i].alice_verdict == t->records[i].alice_verdict);
    }
  }
  CHECK_THROWS_AS(parse_raw_key_lines("0 2 up {up,right} up C0"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_raw_key_lines("0 1 up wrong up C0"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_raw_key_lines("0 1 up {up,right} up X0"),
                  std::invalid_argument);
}

TEST_CASE("a single line formats exactly as documented") {
  RawKeyTranscript t;
  RawKeyRecord rec;
  rec.index = 3;
  rec.bob_bit = 1;
  rec.sent = kRight;
  rec.announcement = Announcement(kRight, kUp);
  rec.outcome = kDown;
  rec.alice_verdict = Conclusiveness::conclusive_bit(1);
  t.records.push_back(rec);
  CHECK(format_raw_key_lines(t) == "3 1 right {up,right} down C1\n");
}
