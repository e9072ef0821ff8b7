#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qokd/exchange.hpp"
#include "qokd/extraction.hpp"
#include "qokd/session.hpp"
#include "qokd/transport.hpp"
#include "qokd/wire.hpp"

namespace qokd {

inline constexpr const char* kToolVersion = "0.1.0";

// Sessions materialize a few byte-wide arrays of raw-key length; cap the
// per-session raw length so a mistyped scheme fails before any run starts.
inline constexpr std::uint64_t kMaxSessionRawBits = 1ull << 24;

// Every experiment is fully determined by its config struct plus the master
// seed; reports embed the config echo so they can be replayed bit-exactly.

struct RunConfig {
  ExtractionScheme scheme = ExtractionScheme::modified(1024, 4);
  std::uint32_t r = 1;
  AliceStrategy alice{};
  std::uint64_t runs = 100;
  std::uint64_t seed = 1;
  TransportKind transport = TransportKind::InProc;
  std::uint16_t port = 0;
  std::uint32_t restart_cap = 16;
};

struct Table1Config {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> cells = {
      {10000, 6}, {100000, 7}, {1000000, 9}, {10000000, 11}, {100000000, 13}};
  std::vector<double> ps;  // defaults to {1/4, 1 - 1/sqrt(2)} when empty
  std::uint64_t runs = 100;
  std::uint64_t seed = 1;
};

struct Table2Config {
  // One block per database size, each with its own window sizes.
  std::vector<std::pair<std::uint64_t, std::vector<std::uint32_t>>> blocks = {
      {100000, {4, 5, 6, 7, 8}}, {10000000000ull, {8, 9, 10, 11, 12}}};
  double p = 0.25;
};

struct DilutionConfig {
  std::uint64_t n = 100000;
  std::uint64_t known = 400;  // known bits per constituent key
  std::uint32_t r = 2;
  std::uint64_t trials = 400;
  std::uint64_t seed = 1;
};

struct AttackConfig {
  std::string model = "alice-usd";  // or "bob-bias"
  std::uint64_t n = 100000;
  std::uint32_t k = 7;
  std::uint64_t runs = 20;
  std::uint64_t seed = 1;
};

Json cmd_run(const RunConfig& config);
Json cmd_table1(const Table1Config& config);
Json cmd_table2(const Table2Config& config);
Json cmd_dilution(const DilutionConfig& config);
Json cmd_attack(const AttackConfig& config);

// Reports carry {command, config, records, aggregates, tool_version, wall_ms};
// wall_ms is the only field that varies between replays of the same config.
Json strip_volatile(Json report);

// CSV view: one row per record, columns from the first record's keys.
std::string report_to_csv(const Json& report);

// Serializes to json (pretty) or csv and writes to out_path ("" = stdout).
void write_report(const Json& report, const std::string& format,
                  const std::string& out_path);

}  // namespace qokd
