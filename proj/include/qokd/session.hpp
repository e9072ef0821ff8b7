#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qokd/bits.hpp"
#include "qokd/exchange.hpp"
#include "qokd/extraction.hpp"
#include "qokd/transport.hpp"
#include "qokd/wire.hpp"

namespace qokd {

enum class Role : std::uint8_t { Alice = 0, Bob = 1, Referee = 2 };

const char* role_name(Role role);

struct SessionConfig {
  ExtractionScheme scheme;
  std::uint32_t r = 1;  // keys combined by dilution per attempt
  AliceStrategy alice{};
  std::uint64_t seed = 0;
  std::uint32_t restart_cap = 16;
  std::optional<std::uint64_t> target_index;  // b; drawn at random if absent
};

struct TranscriptEntry {
  std::uint32_t attempt = 0;
  std::uint32_t part = 0;  // attempt-level messages carry the last part index
  Role from = Role::Alice;
  Role to = Role::Bob;
  WireMessage message;
};

enum class SessionStatus : std::uint8_t {
  Completed,  // Alice retrieved her bit
  Restarted,  // an attempt found no known bit and the restart cap was spent
  Aborted,    // protocol violation or transport failure
};

const char* session_status_name(SessionStatus status);

struct SessionOutcome {
  SessionStatus status = SessionStatus::Aborted;
  std::uint32_t restarts = 0;
  std::string abort_reason;
  std::optional<std::uint8_t> retrieved_bit;
  std::optional<std::uint64_t> chosen_index;  // Alice's database index b
  std::optional<std::uint8_t> expected_bit;   // Bob's plaintext at b (oracle)
  std::uint64_t alice_known_count = 0;        // in the final (diluted) key
};

struct SessionTranscript {
  std::vector<TranscriptEntry> entries;  // canonical order
  SessionOutcome outcome;
};

// Runs Alice, Bob, and the channel referee as concurrent state machines over
// the chosen transport and returns the merged transcript. Identical configs
// produce identical transcripts on both transports.
SessionTranscript run_session(const SessionConfig& config, TransportKind kind,
                              std::uint16_t port = 0);

// One line per message plus a final outcome line; deterministic, so equal
// sessions serialize to equal bytes.
std::string transcript_to_jsonl(const SessionTranscript& transcript);

// Structural privacy audit: sent-state identities never flow toward Alice's
// machine except through measurement results, and basis choices or verdicts
// never flow toward Bob's. Throws std::logic_error on violation.
void check_information_boundary(const SessionTranscript& transcript);

// --- phase III primitives ----------------------------------------------------

// s = (j - b) mod n: reveals neither Alice's known key index j nor her
// database index b.
std::uint64_t announce_shift(std::uint64_t j, std::uint64_t b, std::uint64_t n);

// out[a] = db[a] xor ok[(a+s) mod n].
BitString encrypt_db(const BitString& db, const BitString& ok, std::uint64_t s);

// db[b] = enc[b] xor ok_j.
std::uint8_t decrypt_bit(const BitString& enc, std::uint64_t b,
                         std::uint8_t ok_j);

// --- role state machines (exposed for fault-injection tests) -----------------

struct AliceRunResult {
  SessionStatus status = SessionStatus::Aborted;
  std::uint32_t restarts = 0;
  std::string abort_reason;
  std::optional<std::uint8_t> retrieved_bit;
  std::optional<std::uint64_t> chosen_index;
  std::uint64_t known_count = 0;
};

struct BobRunResult {
  BitString db;
  bool aborted = false;
  std::string abort_reason;
};

struct RefereeRunResult {
  bool aborted = false;
  std::string abort_reason;
};

AliceRunResult run_alice(const SessionConfig& config, Channel& to_referee,
                         Channel& to_bob, std::vector<TranscriptEntry>& sent);
BobRunResult run_bob(const SessionConfig& config, Channel& to_referee,
                     Channel& to_alice, std::vector<TranscriptEntry>& sent);
RefereeRunResult run_referee(const SessionConfig& config, Channel& to_alice,
                             Channel& to_bob,
                             std::vector<TranscriptEntry>& sent);

// Merge per-role send logs into the canonical transcript order.
std::vector<TranscriptEntry> merge_transcripts(
    std::vector<std::vector<TranscriptEntry>> logs);

}  // namespace qokd
