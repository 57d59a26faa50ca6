// One line per acceptance criterion; exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "ivote/cli.hpp"
#include "ivote/ivote.hpp"
#include "oracles.hpp"

using namespace ivote;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string why;

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      why = msg;
    }
  }
};

fs::path scenario_path(const std::string& name) {
  return fs::path(IVOTE_SCENARIO_DIR) / name;
}

std::size_t size(const RunReport& r, LogId id) { return r.logs[id].entries().size(); }

std::multiset<std::string> hashes(const RunReport& r, LogId id) {
  std::multiset<std::string> out;
  for (const auto& e : r.logs[id].entries()) out.insert(e.ballot_hash);
  return out;
}

std::multiset<std::string> sum(std::multiset<std::string> a, const std::multiset<std::string>& b) {
  a.insert(b.begin(), b.end());
  return a;
}

// ---- 1 ----------------------------------------------------------------------

Check table1_config() {
  Check c;
  const auto sc = load_scenario(scenario_path("riigikogu_2011.scn"));
  c.require(validate_config(sc.config).empty(), "configuration does not validate");
  c.require(sc.config.districts.size() == 12, "expected 12 districts");
  c.require(sc.config.total_seats() == 101, "seats sum to " + std::to_string(sc.config.total_seats()));
  const auto builtin = riigikogu_2011_districts();
  int seats = 0;
  for (const auto& d : builtin) seats += d.seats;
  c.require(seats == 101, "built-in district table sums to " + std::to_string(seats));
  return c;
}

// ---- 2 ----------------------------------------------------------------------

Check audit_equations() {
  Check c;
  std::mt19937_64 rng(20110306);
  std::uniform_real_distribution<double> logv(0.0, std::log(1000.0));
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t total_voters = 0;
  for (int i = 0; i < 500 && c.ok; ++i) {
    const int voters = std::clamp(static_cast<int>(std::exp(logv(rng))), 1, 1000);
    total_voters += voters;
    gen::Shape shape = gen::shape_for(voters);
    shape.districts = 1 + static_cast<int>(rng() % 4);
    gen::Behaviour b;
    b.internet = u(rng);
    b.revote = 0.5 * u(rng);
    b.paper_cancel = 0.3 * u(rng);
    b.verify = 0.3 * u(rng);
    b.polling_admit = rng() % 3 == 0 ? 0.2 : 0;
    const auto sc = gen::honest_scenario(rng(), shape, b);
    const auto r = run(sc);
    const auto where = "scenario " + std::to_string(i) + " (" + std::to_string(voters) + " voters)";
    c.require(hashes(r, LogId::log1) == sum(hashes(r, LogId::log2), hashes(r, LogId::log3)),
              where + ": LOG1 != LOG2 + LOG3");
    c.require(hashes(r, LogId::log3) == sum(hashes(r, LogId::log4), hashes(r, LogId::log5)),
              where + ": LOG3 != LOG4 + LOG5");
    c.require(r.evote_tally_sum() == size(r, LogId::log5), where + ": tally sum != |LOG5|");
    c.require(r.audit.pass(), where + ": audit reported FAIL");
  }
  if (c.ok) c.why = "500 scenarios, " + std::to_string(total_voters) + " voters";
  return c;
}

// ---- 3 ----------------------------------------------------------------------

Check tamper_matrix() {
  Check c;
  auto verdict_of = [](const RunReport& r) {
    return r.verdicts.size() == 1 ? r.verdicts[0].verdict : Verdict::detected;
  };
  {
    const auto r = run(load_scenario(scenario_path("tamper_delete_ballot.scn")));
    c.require(!r.audit.pass(), "vss_delete_ballot: audit passed");
    c.require(verdict_of(r) == Verdict::detected, "vss_delete_ballot: not detected");
  }
  {
    const auto r = run(load_scenario(scenario_path("tamper_delete_ballot_and_log.scn")));
    c.require(r.audit.pass(), "vss_delete_ballot_and_log: audit failed");
    c.require(verdict_of(r) == Verdict::undetected, "vss_delete_ballot_and_log: verdict not undetected");
  }
  {
    const auto r = run(load_scenario(scenario_path("tamper_substitute_on_verify.scn")));
    c.require(r.integrity_alarm, "vss_substitute_ciphertext_on_verify: no integrity alarm");
    c.require(verdict_of(r) == Verdict::detected_by_verification,
              "vss_substitute_ciphertext_on_verify: verdict not detected_by_verification");
  }
  return c;
}

// ---- 4 ----------------------------------------------------------------------

Check verification() {
  Check c;
  std::size_t verified = 0;
  for (std::uint64_t seed = 1; seed <= 20 && c.ok; ++seed) {
    gen::Behaviour b;
    b.internet = 0.8;
    b.revote = 0.4;
    b.verify = 1.0;
    const auto sc = gen::honest_scenario(seed, gen::shape_for(50), b);
    std::map<VoterId, std::vector<CandidateId>> cast;
    std::map<std::uint64_t, const ScenarioEvent*> by_seq;
    for (const auto& e : sc.events) {
      by_seq[e.sequence] = &e;
      if (e.kind == EventKind::vote && e.channel == VoteChannel::internet) {
        cast[e.voter].push_back(e.candidate);
      }
    }
    const auto r = run(sc);
    for (const auto& o : r.outcomes) {
      if (o.kind == "internet") c.require(o.ok, "honest cast refused: " + o.detail);
      if (o.kind != "verify") continue;
      const auto& e = *by_seq.at(o.sequence);
      const auto want = cast.at(e.voter).at(*e.cast_index - 1);
      const auto prefix = "candidate " + std::to_string(want.value) + " ";
      c.require(o.ok && o.detail.rfind(prefix, 0) == 0,
                "verification of " + e.voter.value + " returned: " + o.detail);
      ++verified;
    }
  }
  c.require(verified > 0, "no verifications ran");

  const auto r = run(load_scenario(scenario_path("verification.scn")));
  std::vector<const EventOutcome*> v1;
  std::vector<const EventOutcome*> v2;
  for (const auto& o : r.outcomes) {
    if (o.kind != "verify") continue;
    if (o.subject == "38501010001") v1.push_back(&o);
    if (o.subject == "38501010002") v2.push_back(&o);
  }
  c.require(v1.size() == 3 && v1[0]->ok && v1[1]->ok, "requests at +0 and +1799 should succeed");
  c.require(v1.size() == 3 && !v1[2]->ok && v1[2]->detail.rfind("window_expired", 0) == 0,
            "request at +1800 should fail with window_expired");
  c.require(v2.size() == 4 && v2[0]->ok && v2[1]->ok && v2[2]->ok,
            "first three requests should succeed");
  c.require(v2.size() == 4 && !v2[3]->ok && v2[3]->detail.rfind("attempts_exhausted", 0) == 0,
            "fourth request should fail with attempts_exhausted");
  if (c.ok) c.why = std::to_string(verified) + " honest verifications";
  return c;
}

// ---- 5 ----------------------------------------------------------------------

Check dhondt_oracle() {
  Check c;
  constexpr std::uint64_t kMaxVotes = 30;
  constexpr int kMaxSeats = 6;
  std::size_t cases = 0;
  std::vector<std::uint64_t> votes;
  for (int parties = 1; parties <= 4 && c.ok; ++parties) {
    votes.assign(parties, 0);
    std::vector<PartyStanding> ps(parties);
    std::vector<oracle::Party> ops(parties);
    std::uint64_t next = 1;
    for (int i = 0; i < parties; ++i) {
      ps[i].id = PartyId{i + 1};
      ops[i].id = i + 1;
      for (int k = 0; k < kMaxSeats; ++k) {
        ps[i].list.push_back(CandidateId{next});
        ops[i].list.push_back(next++);
      }
    }
    while (c.ok) {
      for (int i = 0; i < parties; ++i) ps[i].votes = ops[i].votes = votes[i];
      for (bool modified : {false, true}) {
        for (std::int64_t t : {0, 5}) {
          // The oracle awards seats one by one, so its k-seat result is the
          // first k entries of its full result.
          const auto want = oracle::dhondt(ops, kMaxSeats, modified, t, 100);
          DHondtParams params;
          params.exponent = modified ? DivisorExponent::modified : DivisorExponent::linear;
          params.threshold = {t, 100};
          for (int seats = 0; seats <= kMaxSeats; ++seats) {
            const auto got = dhondt_allocate(ps, seats, params, {});
            bool same = got.awards.size() == std::min<std::size_t>(seats, want.size());
            for (std::size_t k = 0; same && k < got.awards.size(); ++k) {
              same = got.awards[k].party->value == want[k].party &&
                     got.awards[k].candidate.value == want[k].candidate;
            }
            ++cases;
            if (!same) {
              std::ostringstream os;
              os << "mismatch votes=";
              for (auto v : votes) os << v << ',';
              os << " seats=" << seats << " modified=" << modified << " threshold=" << t << '%';
              c.require(false, os.str());
              break;
            }
          }
        }
      }
      int i = 0;
      while (i < parties && votes[i] == kMaxVotes) votes[i++] = 0;
      if (i == parties) break;
      ++votes[i];
    }
  }
  if (c.ok) c.why = std::to_string(cases) + " allocations";
  return c;
}

// ---- 6 ----------------------------------------------------------------------

Check invalid_candidate() {
  Check c;
  const auto sc = load_scenario(scenario_path("malicious_client.scn"));
  const auto r = run(sc);
  c.require(r.verdicts.size() == 1 && r.verdicts[0].hashes.size() == 1, "no malicious ballot recorded");
  if (!c.ok) return c;
  const auto hash = r.verdicts[0].hashes[0];
  const auto target = r.verdicts[0].attack.target;
  bool accepted = false;
  for (const auto& o : r.outcomes) {
    if (o.subject == target.value && o.kind == "internet") accepted = o.ok;
  }
  c.require(accepted, "storage refused the malicious ballot");
  c.require(hashes(r, LogId::log1).count(hash) == 1, "ballot missing from LOG1");
  c.require(hashes(r, LogId::log4).count(hash) == 1, "ballot missing from LOG4");
  c.require(hashes(r, LogId::log5).count(hash) == 0, "ballot reached LOG5");
  c.require(r.audit.pass(), "audit failed");

  // Candidate 11 belongs to district 1; only the honest voter's ballot may count.
  const Register reg(sc.config);
  const auto voter_district = reg.voter(target).district;
  const auto& by = r.evote_tally.by_district;
  if (auto it = by.find(voter_district); it != by.end()) {
    for (const auto& [cand, n] : it->second) {
      c.require(n == 0 || reg.find_candidate(cand)->district == voter_district,
                "out-of-district candidate tallied in the voter's district");
    }
  }
  std::uint64_t honest_for_11 = 0;
  for (const auto& [v, ev] : r.effective_votes) {
    if (v != target) honest_for_11 += ev.candidate == CandidateId{11};
  }
  const auto tallied = r.tallies.contains(CandidateId{11}) ? r.tallies.at(CandidateId{11}) : 0;
  c.require(tallied == honest_for_11, "malicious choice reached the tally");
  c.require(r.evote_tally_sum() + 1 == size(r, LogId::log3), "tally does not exclude the ballot");
  return c;
}

// ---- 7 ----------------------------------------------------------------------

Check precedence() {
  Check c;
  std::size_t voters = 0;
  for (std::uint64_t seed = 1000; seed < 1200 && c.ok; ++seed) {
    std::mt19937_64 rng(seed);
    gen::Behaviour b;
    b.internet = 0.9;
    b.revote = 0.6;
    b.paper_cancel = 0.3;
    b.polling_admit = seed % 2 ? 0.3 : 0;
    const auto sc = gen::honest_scenario(seed, gen::shape_for(5 + rng() % 80), b);
    const auto r = run(sc);
    const auto where = "seed " + std::to_string(seed);

    std::map<VoterId, std::string> last;
    std::map<VoterId, int> casts;
    for (const auto& rc : r.receipts) {
      last[rc.voter] = rc.ballot_hash;
      ++casts[rc.voter];
    }
    std::map<VoterId, std::set<RevocationReason>> revoked;
    for (const auto& e : r.logs[LogId::log2].entries()) revoked[*e.voter_id].insert(*e.reason);
    const auto log3 = hashes(r, LogId::log3);

    // at most one effective vote per voter: one per map key, and counted
    // e-votes match internet-effective voters one to one
    std::size_t internet_effective = 0;
    for (const auto& [v, ev] : r.effective_votes) {
      ++voters;
      if (ev.channel == VoteChannel::internet) {
        ++internet_effective;
        c.require(last.contains(v) && log3.count(last.at(v)) == 1,
                  where + ": latest revote of " + v.value + " not counted");
        if (casts[v] > 1) {
          c.require(revoked[v].contains(RevocationReason::revote),
                    where + ": earlier e-votes of " + v.value + " not revoked");
        }
      } else if (last.contains(v)) {
        c.require(log3.count(last.at(v)) == 0, where + ": cancelled e-vote of " + v.value + " counted");
        if (is_advance(ev.channel)) {
          c.require(revoked[v].contains(RevocationReason::advance_paper),
                    where + ": advance vote of " + v.value + " left no LOG2 entry");
        }
      }
    }
    c.require(log3.size() == internet_effective, where + ": counted e-votes != internet voters");
    std::set<std::string> distinct(log3.begin(), log3.end());
    c.require(distinct.size() == log3.size(), where + ": duplicate ballot counted");
  }
  if (c.ok) c.why = "200 timelines, " + std::to_string(voters) + " effective votes";
  return c;
}

// ---- 8 ----------------------------------------------------------------------

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& f : fs::directory_iterator(dir)) {
    std::ifstream in(f.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[f.path().filename().string()] = ss.str();
  }
  return out;
}

Check reproducibility() {
  Check c;
  const auto base = fs::temp_directory_path() / "ivote_acceptance_repro";
  fs::remove_all(base);
  for (const auto* name : {"riigikogu_2011.scn", "tamper_substitute_on_verify.scn",
                           "malicious_client.scn", "verification.scn"}) {
    std::vector<std::map<std::string, std::string>> runs;
    for (const auto* tag : {"a", "b"}) {
      const auto out = base / (std::string(name) + "." + tag);
      const auto path = scenario_path(name).string();
      const auto out_s = out.string();
      const char* argv[] = {"ivote-sim", "run", path.c_str(), "--out", out_s.c_str()};
      std::ostringstream os;
      std::ostringstream err;
      cli::main(5, argv, os, err);
      runs.push_back(read_dir(out));
    }
    c.require(!runs[0].empty() && runs[0] == runs[1], std::string(name) + ": outputs differ");
  }
  fs::remove_all(base);
  return c;
}

// ---- 9 ----------------------------------------------------------------------

Check performance() {
  Check c;
  gen::Shape shape = gen::shape_for(10000);
  shape.districts = 12;
  shape.parties = 6;
  shape.candidates_per_list = 5;
  shape.seats_per_district = 8;
  const auto sc = gen::honest_scenario(9, shape);
  const auto r = run(sc);
  const auto out = fs::temp_directory_path() / "ivote_acceptance_perf";
  write_run_outputs(r, sc, out);
  fs::remove_all(out);
  c.require(r.audit.pass(), "audit failed");
  c.why = std::to_string(sc.events.size()) + " events";
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Check()> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "riigikogu 2011 configuration loads with 101 seats", 1, table1_config},
      {2, "audit equations hold over 500 honest scenarios", 60, audit_equations},
      {3, "tamper matrix verdicts", 0, tamper_matrix},
      {4, "verification returns the cast candidate; window and attempt limits", 0, verification},
      {5, "d'Hondt matches exhaustive oracle", 300, dhondt_oracle},
      {6, "out-of-district ballot accepted, lands in LOG4, never tallied", 0, invalid_candidate},
      {7, "revote and paper-vote precedence", 0, precedence},
      {8, "same scenario and seed give byte-identical outputs", 0, reproducibility},
      {9, "10k-voter honest run end to end", 60, performance},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check res;
    try {
      res = cr.fn();
    } catch (const std::exception& e) {
      res.ok = false;
      res.why = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (res.ok && cr.budget_s > 0 && secs >= cr.budget_s) {
      res.ok = false;
      res.why = "over the " + std::to_string(static_cast<int>(cr.budget_s)) + " s budget";
    }
    failed += !res.ok;
    std::cout << (res.ok ? "PASS" : "FAIL") << "  [" << cr.id << "] " << cr.name << "  ("
              << std::fixed << std::setprecision(2) << secs << " s"
              << (res.why.empty() ? "" : "; " + res.why) << ")" << std::endl;
  }
  return failed ? 1 : 0;
}
