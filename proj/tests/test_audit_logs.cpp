#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "ivote/audit_logs.hpp"
#include "ivote/bytes.hpp"

using namespace ivote;

namespace {

std::string h(int i) { return sha256_hex(as_bytes(std::to_string(i))); }

LogEntry identified(const std::string& hash, const std::string& voter) {
  return {0, 0, hash, VoterId{voter}, std::nullopt};
}
LogEntry revoked(const std::string& hash, const std::string& voter) {
  return {0, 0, hash, VoterId{voter}, RevocationReason::revote};
}
LogEntry anonymous(const std::string& hash) { return {0, 0, hash, std::nullopt, std::nullopt}; }

// Oracle: sorted multiset equality of lhs against the concatenation of a and b.
bool multiset_equal(const AuditLog& lhs, const AuditLog& a, const AuditLog& b) {
  std::vector<std::string> l;
  std::vector<std::string> r;
  for (const auto& e : lhs.entries()) l.push_back(e.ballot_hash);
  for (const auto& e : a.entries()) r.push_back(e.ballot_hash);
  for (const auto& e : b.entries()) r.push_back(e.ballot_hash);
  std::sort(l.begin(), l.end());
  std::sort(r.begin(), r.end());
  return l == r;
}

// 1..n accepted; every third revoked by a revote, the rest exported; of the
// exported every fifth invalid.
AuditLogs honest_logs(int n) {
  AuditLogs logs;
  for (int i = 1; i <= n; ++i) {
    const auto voter = "v" + std::to_string(i);
    append(logs, LogId::log1, identified(h(i), voter));
    if (i % 3 == 0) {
      append(logs, LogId::log2, revoked(h(i), voter));
    } else {
      append(logs, LogId::log3, anonymous(h(i)));
      append(logs, i % 5 == 0 ? LogId::log4 : LogId::log5, anonymous(h(i)));
    }
  }
  return logs;
}

ErrorCode schema_code(AuditLog& log, LogEntry e) {
  try {
    log.append(std::move(e));
  } catch (const Error& err) {
    return err.code();
  }
  return ErrorCode::io;
}

}  // namespace

TEST(AuditLogSchema, AnonymityAndReasons) {
  AuditLog log1(LogId::log1);
  EXPECT_EQ(log1.append(identified(h(1), "v1")).sequence, 1u);
  EXPECT_EQ(log1.append(identified(h(2), "v1")).sequence, 2u);
  EXPECT_EQ(schema_code(log1, anonymous(h(3))), ErrorCode::schema);
  EXPECT_EQ(schema_code(log1, revoked(h(3), "v1")), ErrorCode::schema);

  AuditLog log3(LogId::log3);
  EXPECT_EQ(schema_code(log3, identified(h(1), "v1")), ErrorCode::schema);
  EXPECT_EQ(schema_code(log3, anonymous("ABC")), ErrorCode::schema);
  std::string upper = h(1);
  std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
  EXPECT_EQ(schema_code(log3, anonymous(upper)), ErrorCode::schema);
  EXPECT_EQ(log3.size(), 0u);

  AuditLog log2(LogId::log2);
  EXPECT_EQ(schema_code(log2, identified(h(1), "v1")), ErrorCode::schema);
  EXPECT_EQ(log2.append(revoked(h(1), "v1")).sequence, 1u);
}

TEST(AuditConsistency, HonestLogsPass) {
  const auto logs = honest_logs(40);
  const auto report = check_consistency(logs);
  EXPECT_TRUE(report.pass());
  EXPECT_TRUE(report.discrepancies.empty());
  EXPECT_EQ(render_audit_report(report),
            "AUDIT PASS\nEQUATION\tLOG1=LOG2+LOG3\tholds\nEQUATION\tLOG3=LOG4+LOG5\tholds\n");
}

TEST(AuditConsistency, SilentDeletionIsNamed) {
  auto logs = honest_logs(10);
  // Ballot 4 vanishes from storage: never exported, never counted.
  logs[LogId::log3].tamper_erase(h(4));
  logs[LogId::log5].tamper_erase(h(4));
  const auto report = check_consistency(logs);
  EXPECT_FALSE(report.pass());
  EXPECT_FALSE(report.accepted_equation_holds);
  EXPECT_TRUE(report.counted_equation_holds);
  ASSERT_EQ(report.discrepancies.size(), 1u);
  EXPECT_EQ(report.discrepancies[0].ballot_hash, h(4));
  EXPECT_EQ(report.discrepancies[0].surplus, 1);
  EXPECT_TRUE(report.names(h(4)));
  EXPECT_NE(render_audit_report(report).find("DISCREPANCY\tLOG1=LOG2+LOG3\t" + h(4) +
                                              "\tsurplus\t1"),
            std::string::npos);
}

TEST(AuditConsistency, DeletionWithLogErasureIsABlindSpot) {
  auto logs = honest_logs(10);
  logs[LogId::log3].tamper_erase(h(4));
  logs[LogId::log5].tamper_erase(h(4));
  logs[LogId::log1].tamper_erase(h(4));
  EXPECT_TRUE(check_consistency(logs).pass());
}

TEST(AuditConsistency, CountingSideDiscrepancy) {
  auto logs = honest_logs(10);
  append(logs, LogId::log5, anonymous(h(99)));
  const auto report = check_consistency(logs);
  EXPECT_TRUE(report.accepted_equation_holds);
  EXPECT_FALSE(report.counted_equation_holds);
  ASSERT_EQ(report.discrepancies.size(), 1u);
  EXPECT_EQ(report.discrepancies[0].surplus, -1);
}

TEST(AuditConsistency, MatchesSortedMultisetOracleUnderRandomEdits) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 300; ++round) {
    auto logs = honest_logs(1 + static_cast<int>(rng() % 30));
    const int edits = static_cast<int>(rng() % 3);
    for (int e = 0; e < edits; ++e) {
      const auto target = static_cast<LogId>(1 + rng() % 5);
      const auto hash = h(static_cast<int>(1 + rng() % 30));
      if (rng() % 2) {
        logs[target].tamper_erase(hash);
      } else if (target == LogId::log1) {
        append(logs, target, identified(hash, "x"));
      } else if (target == LogId::log2) {
        append(logs, target, revoked(hash, "x"));
      } else {
        append(logs, target, anonymous(hash));
      }
    }
    const auto report = check_consistency(logs);
    EXPECT_EQ(report.accepted_equation_holds,
              multiset_equal(logs[LogId::log1], logs[LogId::log2], logs[LogId::log3]));
    EXPECT_EQ(report.counted_equation_holds,
              multiset_equal(logs[LogId::log3], logs[LogId::log4], logs[LogId::log5]));
  }
}

TEST(AuditConsistency, InvariantUnderEntryOrder) {
  std::mt19937_64 rng(5);
  const auto logs = honest_logs(25);
  auto shuffled = [&](const AuditLog& src) {
    auto entries = src.entries();
    std::shuffle(entries.begin(), entries.end(), rng);
    AuditLog out(src.id());
    for (auto e : entries) out.append(e);
    return out;
  };
  AuditLogs permuted;
  for (int i = 1; i <= 5; ++i) {
    permuted[static_cast<LogId>(i)] = shuffled(logs[static_cast<LogId>(i)]);
  }
  EXPECT_EQ(check_consistency(permuted), check_consistency(logs));
  auto broken = logs;
  broken[LogId::log2].tamper_erase(h(3));
  auto broken_permuted = permuted;
  broken_permuted[LogId::log2].tamper_erase(h(3));
  EXPECT_EQ(check_consistency(broken), check_consistency(broken_permuted));
}

TEST(AuditSerialization, RoundTripAndParseErrors) {
  const auto logs = honest_logs(12);
  for (int i = 1; i <= 5; ++i) {
    const auto id = static_cast<LogId>(i);
    std::istringstream in(serialize_log(logs[id]));
    EXPECT_EQ(parse_log(id, in).entries(), logs[id].entries());
  }
  auto parse_code = [](LogId id, const std::string& text) {
    std::istringstream in(text);
    try {
      (void)parse_log(id, in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  EXPECT_EQ(parse_code(LogId::log3, "1\t0\t" + h(1) + "\tv1\n"), ErrorCode::parse);
  EXPECT_EQ(parse_code(LogId::log2, "1\t0\t" + h(1) + "\tv1\tbogus\n"), ErrorCode::parse);
  EXPECT_EQ(parse_code(LogId::log3, "2\t0\t" + h(1) + "\n1\t0\t" + h(2) + "\n"), ErrorCode::parse);
  EXPECT_EQ(parse_code(LogId::log4, "x\t0\t" + h(1) + "\n"), ErrorCode::parse);
}
