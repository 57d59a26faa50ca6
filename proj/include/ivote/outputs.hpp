#pragma once

// Run output directory:
//   log1.tsv .. log5.tsv      audit logs
//   audit_report.txt          PASS/FAIL and discrepancies
//   tallies.tsv               election sections + [tallies]; valid allocate input
//   allocation.tsv            one line per seat
//   run_report.txt            event outcomes, cancellations, verdicts
//   verification_state.tsv    storage-side session view for verification replay

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ivote/audit_logs.hpp"
#include "ivote/protocol.hpp"
#include "ivote/scenario.hpp"
#include "ivote/simulator.hpp"
#include "ivote/tally_alloc.hpp"

namespace ivote {

inline std::string render_run_report(const RunReport& r, const Scenario& sc) {
  std::ostringstream os;
  os << "RUN\tseed=" << sc.seed << "\ttype=" << to_string(sc.config.type)
     << "\tvoters=" << sc.config.voters.size() << "\tevents=" << sc.events.size()
     << "\tattacks=" << sc.attacks.size() << '\n';
  os << "\n[events]\n";
  for (const auto& o : r.outcomes) {
    os << o.time << '\t' << o.sequence << '\t' << o.subject << '\t' << o.kind << '\t'
       << (o.ok ? "ok" : "error") << '\t' << o.detail << '\n';
  }
  os << "\n[cancellations]\n";
  for (const auto& line : r.cancellation_lines) os << line << '\n';
  os << "\n[rejected_votes]\n";
  for (const auto& rv : r.rejected_votes) {
    os << rv.event.timestamp << '\t' << rv.event.voter.value << '\t' << to_string(rv.event.channel)
       << '\t' << rv.reason << '\n';
  }
  os << "\n[counting]\n";
  os << "exported\t" << r.exported << '\n';
  os << "valid\t" << r.evote_tally.valid << '\n';
  os << "invalid\t" << r.evote_tally.invalid << '\n';
  if (r.counting_error) os << "error\t" << *r.counting_error << '\n';
  os << "paper\t" << [&] {
    std::uint64_t n = 0;
    for (const auto& [_, v] : r.paper_tally) n += v;
    return n;
  }() << '\n';
  os << "\n[audit]\n" << (r.audit.pass() ? "PASS" : "FAIL") << '\n';
  os << "\n[verdicts]\n";
  for (const auto& v : r.verdicts) {
    os << to_string(v.attack.kind) << '\t' << v.attack.target.value << '\t' << v.attack.at << '\t'
       << to_string(v.verdict) << '\t' << v.note << '\n';
  }
  os << "\n[allocation]\n" << render_seat_summary(r.allocation, sc.config) << '\n';
  if (r.allocation.unfilled > 0) os << "unfilled\t" << r.allocation.unfilled << '\n';
  os << "\n[summary]\n";
  os << "integrity_alarm\t" << (r.integrity_alarm ? "yes" : "no") << '\n';
  os << "messages\t" << r.messages << '\n';
  return os.str();
}

inline std::string render_receipts(const RunReport& r) {
  std::ostringstream os;
  for (const auto& c : r.receipts) {
    os << c.time << '\t' << c.voter.value << '\t' << c.ballot_hash << '\t' << c.qr.serialize()
       << '\n';
  }
  return os.str();
}

inline std::string render_verification_state(const VerificationState& vs) {
  std::ostringstream os;
  os << "public_key\t" << to_hex(vs.public_key.bytes) << '\n';
  for (const auto& c : vs.candidates) {
    os << "candidate\t" << c.id << '\t' << c.district << '\t' << c.name << '\n';
  }
  for (const auto& s : vs.sessions) {
    os << "session\t" << s.code << '\t' << s.district << '\t' << s.issue_time << '\t'
       << s.attempts << '\t' << (s.ciphertext ? to_hex(s.ciphertext->bytes) : "-") << '\n';
  }
  return os.str();
}

inline VerificationState parse_verification_state(std::istream& in) {
  VerificationState vs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = detail::split(line, '\t');
    detail::LineParser p("verification_state.tsv", lineno, f);
    if (f[0] == "public_key") {
      p.require(2, 2, "public_key");
      vs.public_key.bytes = from_hex(f[1]);
    } else if (f[0] == "candidate") {
      p.require(4, 4, "candidate");
      vs.candidates.push_back({CandidateId{p.integer<std::uint64_t>(1, "id")}, f[3], std::nullopt,
                               DistrictId{p.integer<std::int64_t>(2, "district")}});
    } else if (f[0] == "session") {
      p.require(6, 6, "session");
      VerificationState::Session s{f[1], DistrictId{p.integer<std::int64_t>(2, "district")},
                                   p.integer<SimTime>(3, "issue_time"),
                                   p.integer<int>(4, "attempts"), std::nullopt};
      if (f[5] != "-") s.ciphertext = Ciphertext{from_hex(f[5])};
      vs.sessions.push_back(std::move(s));
    } else {
      throw p.fail("record", "unknown record type '" + f[0] + "'");
    }
  }
  return vs;
}

// Re-runs the storage-side checks and the app-side brute force against a
// saved state. `at` defaults to the session's issue time. Does not persist
// the attempt it spends.
inline Candidate replay_verification(const VerificationState& vs, const QRPayload& qr,
                                     std::optional<SimTime> at,
                                     const BallotCipher& cipher = HybridBallotCipher{}) {
  const VerificationState::Session* session = nullptr;
  for (const auto& s : vs.sessions) {
    if (s.code == qr.session_code) session = &s;
  }
  if (!session) throw Error(ErrorCode::unknown_session, "no session " + qr.session_code);
  const auto now = at.value_or(session->issue_time);
  if (session->attempts + 1 > kVerificationAttempts) {
    throw Error(ErrorCode::attempts_exhausted, "session already verified " +
                                                   std::to_string(kVerificationAttempts) + " times");
  }
  if (now >= session->issue_time + kVerificationWindow) {
    throw Error(ErrorCode::window_expired, "verification window closed");
  }
  if (!session->ciphertext) throw Error(ErrorCode::vote_absent, "ballot no longer stored");
  VerificationData data{*session->ciphertext, {}};
  for (const auto& c : vs.candidates) {
    if (c.district == session->district) data.candidates.push_back(c);
  }
  if (auto match = match_candidate(cipher, vs.public_key, data, qr.r)) return *match;
  throw Error(ErrorCode::integrity_alarm,
              "stored ballot matches no candidate under the disclosed randomness");
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << content;
}

}  // namespace detail

inline void write_run_outputs(const RunReport& r, const Scenario& sc,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_logs(r.logs, dir);
  detail::write_file(dir / "audit_report.txt", render_audit_report(r.audit));
  detail::write_file(dir / "tallies.tsv", render_tallies_file(sc.config, r.tallies));
  detail::write_file(dir / "allocation.tsv", render_allocation(r.allocation, sc.config));
  detail::write_file(dir / "run_report.txt", render_run_report(r, sc));
  detail::write_file(dir / "verification_state.tsv", render_verification_state(r.verification));
  detail::write_file(dir / "receipts.tsv", render_receipts(r));
}

}  // namespace ivote
