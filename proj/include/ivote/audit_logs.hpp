#pragma once

// The five append-only audit logs and their multiset consistency check:
//
//   LOG1  ballots accepted by the vote storage server
//   LOG2  ballots revoked (revote, polling-station vote, paper advance vote)
//   LOG3  ballots sent for counting
//   LOG4  ballots found invalid during counting
//   LOG5  ballots counted
//
// Honest runs satisfy LOG1 = LOG2 + LOG3 and LOG3 = LOG4 + LOG5 as multisets
// of ballot hashes. Logs are plain; an intruder who rewrites them coherently
// passes the check.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ivote/types.hpp"

namespace ivote {

enum class LogId { log1 = 1, log2, log3, log4, log5 };

enum class RevocationReason { revote, polling_station, advance_paper };

inline const char* to_string(RevocationReason r) {
  switch (r) {
    case RevocationReason::revote: return "revote";
    case RevocationReason::polling_station: return "polling_station";
    case RevocationReason::advance_paper: return "advance_paper";
  }
  return "unknown";
}

inline std::optional<RevocationReason> parse_revocation_reason(const std::string& s) {
  if (s == "revote") return RevocationReason::revote;
  if (s == "polling_station") return RevocationReason::polling_station;
  if (s == "advance_paper") return RevocationReason::advance_paper;
  return std::nullopt;
}

struct LogEntry {
  std::uint64_t sequence = 0;  // assigned on append
  SimTime timestamp = 0;
  std::string ballot_hash;
  std::optional<VoterId> voter_id;          // LOG1 and LOG2 only
  std::optional<RevocationReason> reason;   // LOG2 only

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

inline bool is_ballot_hash(const std::string& h) {
  return h.size() == 64 && std::all_of(h.begin(), h.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

class AuditLog {
 public:
  explicit AuditLog(LogId id = LogId::log1) : id_(id) {}

  [[nodiscard]] LogId id() const { return id_; }
  [[nodiscard]] const std::vector<LogEntry>& entries() const { return entries_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

  const LogEntry& append(LogEntry entry) {
    check_schema(entry);
    entry.sequence = next_sequence_++;
    entries_.push_back(std::move(entry));
    return entries_.back();
  }

  // Tamper hooks for attack scenarios: an intruder with write access to the
  // log file. Neither keeps any trace.
  bool tamper_erase(const std::string& ballot_hash) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const LogEntry& e) { return e.ballot_hash == ballot_hash; });
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
  }

  bool tamper_rewrite(const std::string& from_hash, const std::string& to_hash) {
    bool any = false;
    for (auto& e : entries_) {
      if (e.ballot_hash == from_hash) {
        e.ballot_hash = to_hash;
        any = true;
      }
    }
    return any;
  }

  // Restores a log read back from disk; sequence numbers must increase.
  void restore(LogEntry entry) {
    check_schema(entry);
    if (!entries_.empty() && entry.sequence <= entries_.back().sequence) {
      throw Error(ErrorCode::schema, "sequence numbers must strictly increase");
    }
    next_sequence_ = entry.sequence + 1;
    entries_.push_back(std::move(entry));
  }

 private:
  void check_schema(const LogEntry& e) const {
    const int n = static_cast<int>(id_);
    const auto where = "LOG" + std::to_string(n) + ": ";
    if (!is_ballot_hash(e.ballot_hash)) {
      throw Error(ErrorCode::schema, where + "ballot hash must be 64 lowercase hex chars");
    }
    const bool identified = id_ == LogId::log1 || id_ == LogId::log2;
    if (identified && (!e.voter_id || e.voter_id->value.empty())) {
      throw Error(ErrorCode::schema, where + "voter id required");
    }
    if (!identified && e.voter_id) {
      throw Error(ErrorCode::schema, where + "entries are anonymized; voter id forbidden");
    }
    if (id_ == LogId::log2 && !e.reason) throw Error(ErrorCode::schema, where + "reason required");
    if (id_ != LogId::log2 && e.reason) throw Error(ErrorCode::schema, where + "reason forbidden");
  }

  LogId id_;
  std::uint64_t next_sequence_ = 1;
  std::vector<LogEntry> entries_;
};

struct AuditLogs {
  std::array<AuditLog, 5> logs{AuditLog{LogId::log1}, AuditLog{LogId::log2},
                               AuditLog{LogId::log3}, AuditLog{LogId::log4},
                               AuditLog{LogId::log5}};

  AuditLog& operator[](LogId id) { return logs[static_cast<std::size_t>(id) - 1]; }
  const AuditLog& operator[](LogId id) const { return logs[static_cast<std::size_t>(id) - 1]; }
};

inline AuditLogs& append(AuditLogs& logs, LogId id, LogEntry entry) {
  logs[id].append(std::move(entry));
  return logs;
}

// ---- consistency check ------------------------------------------------------

enum class Equation { accepted_is_revoked_plus_counted, counted_is_invalid_plus_valid };

inline const char* to_string(Equation e) {
  return e == Equation::accepted_is_revoked_plus_counted ? "LOG1=LOG2+LOG3" : "LOG3=LOG4+LOG5";
}

struct Discrepancy {
  Equation equation;
  std::string ballot_hash;
  // Positive: the left-hand log holds this many more copies than the
  // right-hand union. Negative: fewer.
  long long surplus = 0;

  friend bool operator==(const Discrepancy&, const Discrepancy&) = default;
};

struct AuditReport {
  bool accepted_equation_holds = true;
  bool counted_equation_holds = true;
  std::vector<Discrepancy> discrepancies;

  [[nodiscard]] bool pass() const { return accepted_equation_holds && counted_equation_holds; }

  [[nodiscard]] bool names(const std::string& hash) const {
    return std::any_of(discrepancies.begin(), discrepancies.end(),
                       [&](const Discrepancy& d) { return d.ballot_hash == hash; });
  }

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

namespace detail {

inline void compare_multisets(const AuditLog& lhs, const AuditLog& a, const AuditLog& b,
                              Equation eq, AuditReport& report) {
  std::map<std::string, long long> balance;
  for (const auto& e : lhs.entries()) ++balance[e.ballot_hash];
  for (const auto& e : a.entries()) --balance[e.ballot_hash];
  for (const auto& e : b.entries()) --balance[e.ballot_hash];
  for (const auto& [hash, count] : balance) {
    if (count != 0) report.discrepancies.push_back({eq, hash, count});
  }
}

}  // namespace detail

inline AuditReport check_consistency(const AuditLogs& logs) {
  AuditReport report;
  detail::compare_multisets(logs[LogId::log1], logs[LogId::log2], logs[LogId::log3],
                            Equation::accepted_is_revoked_plus_counted, report);
  const auto first = report.discrepancies.size();
  report.accepted_equation_holds = first == 0;
  detail::compare_multisets(logs[LogId::log3], logs[LogId::log4], logs[LogId::log5],
                            Equation::counted_is_invalid_plus_valid, report);
  report.counted_equation_holds = report.discrepancies.size() == first;
  return report;
}

inline std::string render_audit_report(const AuditReport& report) {
  std::ostringstream os;
  os << "AUDIT " << (report.pass() ? "PASS" : "FAIL") << '\n';
  os << "EQUATION\tLOG1=LOG2+LOG3\t" << (report.accepted_equation_holds ? "holds" : "violated")
     << '\n';
  os << "EQUATION\tLOG3=LOG4+LOG5\t" << (report.counted_equation_holds ? "holds" : "violated")
     << '\n';
  for (const auto& d : report.discrepancies) {
    os << "DISCREPANCY\t" << to_string(d.equation) << '\t' << d.ballot_hash << '\t'
       << (d.surplus > 0 ? "surplus" : "deficit") << '\t' << (d.surplus > 0 ? d.surplus : -d.surplus)
       << '\n';
  }
  return os.str();
}

// ---- text serialization -----------------------------------------------------
// <seq>\t<timestamp>\t<hash>[\t<voter_id>][\t<reason>]

inline std::string serialize_log(const AuditLog& log) {
  std::ostringstream os;
  for (const auto& e : log.entries()) {
    os << e.sequence << '\t' << e.timestamp << '\t' << e.ballot_hash;
    if (e.voter_id) os << '\t' << e.voter_id->value;
    if (e.reason) os << '\t' << to_string(*e.reason);
    os << '\n';
  }
  return os.str();
}

inline AuditLog parse_log(LogId id, std::istream& in) {
  AuditLog log(id);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    const auto where = "log" + std::to_string(static_cast<int>(id)) + " line " +
                       std::to_string(lineno) + ": ";
    const std::size_t expected = id == LogId::log1 ? 4 : id == LogId::log2 ? 5 : 3;
    if (fields.size() != expected) {
      throw Error(ErrorCode::parse, where + "expected " + std::to_string(expected) + " fields");
    }
    LogEntry e;
    try {
      e.sequence = std::stoull(fields[0]);
      e.timestamp = std::stoll(fields[1]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse, where + "bad sequence or timestamp");
    }
    e.ballot_hash = fields[2];
    if (expected >= 4) e.voter_id = VoterId{fields[3]};
    if (expected == 5) {
      e.reason = parse_revocation_reason(fields[4]);
      if (!e.reason) throw Error(ErrorCode::parse, where + "unknown reason '" + fields[4] + "'");
    }
    try {
      log.restore(std::move(e));
    } catch (const Error& err) {
      throw Error(ErrorCode::parse, where + err.what());
    }
  }
  return log;
}

inline void write_logs(const AuditLogs& logs, const std::filesystem::path& dir) {
  for (int i = 1; i <= 5; ++i) {
    std::ofstream out(dir / ("log" + std::to_string(i) + ".tsv"), std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write log" + std::to_string(i) + ".tsv");
    out << serialize_log(logs[static_cast<LogId>(i)]);
  }
}

inline AuditLogs read_logs(const std::filesystem::path& dir) {
  AuditLogs logs;
  for (int i = 1; i <= 5; ++i) {
    const auto path = dir / ("log" + std::to_string(i) + ".tsv");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
    logs[static_cast<LogId>(i)] = parse_log(static_cast<LogId>(i), in);
  }
  return logs;
}

}  // namespace ivote
