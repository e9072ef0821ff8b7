#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "qokd/experiments.hpp"

namespace {

// One option set shared by every subcommand so any flag from the documented
// union parses everywhere; fields irrelevant to a command are ignored.
struct CliOptions {
  std::string scheme = "modified";
  std::uint64_t n = 1024;
  std::uint32_t k = 4;
  std::uint64_t m = 0;  // 0 = derive the smallest valid pool
  std::uint32_t r = 1;
  double p = 0.25;
  std::string alice = "honest";
  std::string transport = "inproc";
  std::uint16_t port = 0;
  std::uint32_t restart_cap = 16;
  std::uint64_t seed = 1;
  std::uint64_t runs = 100;
  std::uint64_t known = 400;
  std::string model = "alice-usd";
  std::string out;
  std::string format = "json";

  CLI::Option* n_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* p_opt = nullptr;
};

void add_options(CLI::App* sub, CliOptions& o) {
  sub->set_config("--config", "",
                  "load options from a key=value file (flags override)");
  sub->add_option("--seed", o.seed, "master seed; all randomness derives from it")
      ->capture_default_str();
  sub->add_option("--runs", o.runs, "runs / trials to execute")
      ->capture_default_str();
  sub->add_option("--out", o.out, "output path (default: stdout)");
  sub->add_option("--format", o.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  sub->add_option("--scheme", o.scheme, "key-extraction scheme")
      ->check(CLI::IsMember({"original", "modified", "generalized"}))
      ->capture_default_str();
  o.n_opt = sub->add_option("--n", o.n, "oblivious key / database size")
                ->capture_default_str();
  o.k_opt = sub->add_option("--k", o.k, "raw bits per key bit (window size)")
                ->capture_default_str();
  sub->add_option("--m", o.m, "generalized raw pool size (0 = smallest valid)")
      ->capture_default_str();
  sub->add_option("--r", o.r, "keys combined by dilution")
      ->capture_default_str();
  o.p_opt = sub->add_option("--p", o.p, "per-position conclusive probability")
                ->capture_default_str();
  sub->add_option("--transport", o.transport, "session transport")
      ->check(CLI::IsMember({"inproc", "tcp"}))
      ->capture_default_str();
  sub->add_option("--port", o.port, "TCP base port (0 = ephemeral)")
      ->capture_default_str();
  sub->add_option("--alice", o.alice, "Alice measurement strategy")
      ->check(CLI::IsMember({"honest", "usd"}))
      ->capture_default_str();
  sub->add_option("--restart-cap", o.restart_cap,
                  "restarts before a session gives up")
      ->capture_default_str();
  sub->add_option("--known", o.known, "known bits per key (dilution)")
      ->capture_default_str();
  sub->add_option("--model", o.model, "attack model")
      ->check(CLI::IsMember({"alice-usd", "bob-bias"}))
      ->capture_default_str();
}

qokd::ExtractionScheme make_scheme(const CliOptions& o) {
  if (o.scheme == "original") {
    return qokd::ExtractionScheme::original(o.n, o.k);
  }
  if (o.scheme == "modified") {
    return qokd::ExtractionScheme::modified(o.n, o.k);
  }
  std::uint64_t m = o.m ? o.m : qokd::min_m(o.n, o.k);
  return qokd::ExtractionScheme::generalized(o.n, o.k, m);
}

int handle_run(const CliOptions& o) {
  qokd::RunConfig config;
  config.scheme = make_scheme(o);
  config.r = o.r;
  config.alice = o.alice == "usd" ? qokd::AliceStrategy::usd()
                                  : qokd::AliceStrategy::honest();
  config.runs = o.runs;
  config.seed = o.seed;
  config.transport = o.transport == "tcp" ? qokd::TransportKind::Tcp
                                          : qokd::TransportKind::InProc;
  config.port = o.port;
  config.restart_cap = o.restart_cap;
  qokd::Json report = qokd::cmd_run(config);
  qokd::write_report(report, o.format, o.out);
  bool any_abort = report["aggregates"]["aborted"].get<std::uint64_t>() > 0;
  return any_abort ? 3 : 0;
}

int handle_table1(const CliOptions& o) {
  qokd::Table1Config config;
  config.runs = o.runs;
  config.seed = o.seed;
  if (o.n_opt->count() || o.k_opt->count()) {
    if (!o.n_opt->count() || !o.k_opt->count()) {
      throw std::invalid_argument("--n and --k must be given together");
    }
    config.cells = {{o.n, o.k}};
  }
  if (o.p_opt->count()) config.ps = {o.p};
  qokd::write_report(qokd::cmd_table1(config), o.format, o.out);
  return 0;
}

int handle_table2(const CliOptions& o) {
  qokd::Table2Config config;
  config.p = o.p;
  if (o.n_opt->count() || o.k_opt->count()) {
    if (!o.n_opt->count() || !o.k_opt->count()) {
      throw std::invalid_argument("--n and --k must be given together");
    }
    config.blocks = {{o.n, {o.k}}};
  }
  qokd::write_report(qokd::cmd_table2(config), o.format, o.out);
  return 0;
}

int handle_dilution(const CliOptions& o) {
  qokd::DilutionConfig config;
  config.n = o.n;
  config.known = o.known;
  config.r = o.r;
  config.trials = o.runs;
  config.seed = o.seed;
  qokd::write_report(qokd::cmd_dilution(config), o.format, o.out);
  return 0;
}

int handle_attack(const CliOptions& o) {
  qokd::AttackConfig config;
  config.model = o.model;
  config.n = o.n;
  config.k = o.k;
  config.runs = o.runs;
  config.seed = o.seed;
  qokd::write_report(qokd::cmd_attack(config), o.format, o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oblivious-key distribution simulator and analytics toolkit"};
  app.set_version_flag("--version", std::string("qokd ") + qokd::kToolVersion);
  app.require_subcommand(1);

  CliOptions run_opts;
  CLI::App* run_cmd =
      app.add_subcommand("run", "execute full oblivious-transfer sessions");
  add_options(run_cmd, run_opts);

  CliOptions table1_opts;
  CLI::App* table1_cmd = app.add_subcommand(
      "table1", "survivor-count statistics over seeded raw keys");
  add_options(table1_cmd, table1_opts);

  CliOptions table2_opts;
  CLI::App* table2_cmd = app.add_subcommand(
      "table2", "closed-form generalized-scheme grid (deterministic)");
  add_options(table2_cmd, table2_opts);

  CliOptions dilution_opts;
  dilution_opts.n = 100000;
  dilution_opts.r = 2;
  dilution_opts.runs = 400;
  CLI::App* dilution_cmd = app.add_subcommand(
      "dilution", "shift-combining survivor experiment");
  add_options(dilution_cmd, dilution_opts);

  CliOptions attack_opts;
  attack_opts.n = 100000;
  attack_opts.k = 7;
  attack_opts.runs = 20;
  CLI::App* attack_cmd = app.add_subcommand(
      "attack", "adversarial strategies and their statistics");
  add_options(attack_cmd, attack_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return handle_run(run_opts);
    if (table1_cmd->parsed()) return handle_table1(table1_opts);
    if (table2_cmd->parsed()) return handle_table2(table2_opts);
    if (dilution_cmd->parsed()) return handle_dilution(dilution_opts);
    if (attack_cmd->parsed()) return handle_attack(attack_opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
