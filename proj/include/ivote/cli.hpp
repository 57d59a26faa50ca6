#pragma once

// ivote-sim command line.
//
//   run <scenario> [--out DIR] [--seed N]
//   allocate <tallies-file> --type riigikogu|ep|municipal
//   audit <log-dir>
//   verify <qr-payload> --state <run-dir> [--at T]
//
// Exit codes: 0 success or audit PASS, 1 audit FAIL or a failed
// verification (integrity alarm, window, attempts), 2 usage or parse errors.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ivote/audit_logs.hpp"
#include "ivote/outputs.hpp"
#include "ivote/scenario.hpp"
#include "ivote/simulator.hpp"
#include "ivote/tally_alloc.hpp"

namespace ivote::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("IVOTE_SIM_OUT"); env && *env) return env;
  return "ivote-run";
}

inline int cmd_run(const std::string& path, std::optional<std::filesystem::path> out,
                   std::optional<std::uint64_t> seed, std::ostream& os) {
  auto sc = load_scenario(std::filesystem::path(path));
  if (seed) sc.seed = *seed;
  const auto report = run(sc);
  const auto dir = out.value_or(default_out_dir());
  write_run_outputs(report, sc, dir);
  os << "audit " << (report.audit.pass() ? "PASS" : "FAIL") << '\n';
  os << "allocation " << render_seat_summary(report.allocation, sc.config) << '\n';
  for (const auto& v : report.verdicts) {
    os << "attack " << to_string(v.attack.kind) << ' ' << v.attack.target.value << ' '
       << to_string(v.verdict) << '\n';
  }
  if (report.integrity_alarm) os << "integrity alarm raised during verification\n";
  os << "outputs written to " << dir.string() << '\n';
  return report.audit.pass() && !report.integrity_alarm ? kExitOk : kExitFail;
}

inline int cmd_allocate(const std::string& path, const std::string& type, std::ostream& os) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  auto sc = parse_scenario(in, path);
  auto t = parse_election_type(type);
  if (!t) throw Error(ErrorCode::parse, "unknown election type '" + type + "'");
  sc.config.type = *t;
  if (!sc.tallies) throw Error(ErrorCode::parse, path + ": missing [tallies] section");
  validate_scenario(sc);
  sc.config = synthesize_independent_parties(std::move(sc.config));
  const auto result = allocate(sc.config, *sc.tallies);
  os << render_allocation(result, sc.config);
  os << "SEATS\t" << render_seat_summary(result, sc.config) << '\n';
  for (const auto& note : result.notes) os << "NOTE\t" << note << '\n';
  return kExitOk;
}

inline int cmd_audit(const std::string& dir, std::ostream& os) {
  const auto logs = read_logs(dir);
  const auto report = check_consistency(logs);
  os << render_audit_report(report);
  return report.pass() ? kExitOk : kExitFail;
}

inline int cmd_verify(const std::string& payload, const std::string& state_dir,
                      std::optional<SimTime> at, std::ostream& os, std::ostream& err) {
  const auto qr = QRPayload::parse(payload);
  const auto path = std::filesystem::path(state_dir) / "verification_state.tsv";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  const auto state = parse_verification_state(in);
  try {
    const auto c = replay_verification(state, qr, at);
    os << "candidate\t" << c.id << '\t' << c.name << '\n';
    return kExitOk;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::integrity_alarm) err << "INTEGRITY ALARM: ";
    err << e.what() << '\n';
    return kExitFail;
  }
}

inline int main(int argc, const char* const* argv, std::ostream& os = std::cout,
                std::ostream& err = std::cerr) {
  CLI::App app{"Deterministic internet-voting pipeline simulator", "ivote-sim"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario end to end");
  run_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  auto* out_opt = run_cmd->add_option("--out", out_dir, "Output directory (default $IVOTE_SIM_OUT)");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the scenario seed");

  std::string tallies_path;
  std::string type;
  auto* alloc_cmd = app.add_subcommand("allocate", "Allocate seats from a tallies file");
  alloc_cmd->add_option("tallies", tallies_path, "Tallies file")->required();
  alloc_cmd->add_option("--type", type, "Election type")
      ->required()
      ->check(CLI::IsMember({"riigikogu", "ep", "municipal"}));

  std::string log_dir;
  auto* audit_cmd = app.add_subcommand("audit", "Check audit log consistency");
  audit_cmd->add_option("log-dir", log_dir, "Directory holding log1.tsv .. log5.tsv")->required();

  std::string payload;
  std::string state_dir;
  SimTime at = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Replay a verification against a run");
  verify_cmd->add_option("qr-payload", payload, "session=<hex>;r=<hex>")->required();
  verify_cmd->add_option("--state", state_dir, "Run output directory")->required();
  auto* at_opt = verify_cmd->add_option("--at", at, "Request time (default: issue time)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    os << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*run_cmd) {
      return cmd_run(scenario_path,
                     *out_opt ? std::optional<std::filesystem::path>(out_dir) : std::nullopt,
                     *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt, os);
    }
    if (*alloc_cmd) return cmd_allocate(tallies_path, type, os);
    if (*audit_cmd) return cmd_audit(log_dir, os);
    if (*verify_cmd) {
      return cmd_verify(payload, state_dir,
                        *at_opt ? std::optional<SimTime>(at) : std::nullopt, os, err);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace ivote::cli
