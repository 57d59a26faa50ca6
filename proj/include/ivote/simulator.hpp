#pragma once

// Deterministic end-to-end run of a scenario: the voting period as a single
// event loop ordered by (timestamp, sequence), then the polling-station list
// comparison, export, counting, seat allocation and audit.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ivote/audit_logs.hpp"
#include "ivote/crypto_suite.hpp"
#include "ivote/electoral_core.hpp"
#include "ivote/network.hpp"
#include "ivote/protocol.hpp"
#include "ivote/scenario.hpp"
#include "ivote/tally_alloc.hpp"

namespace ivote {

enum class Verdict { detected, undetected, detected_by_verification };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::detected: return "detected";
    case Verdict::undetected: return "undetected";
    case Verdict::detected_by_verification: return "detected_by_verification";
  }
  return "unknown";
}

struct EventOutcome {
  SimTime time = 0;
  std::uint64_t sequence = 0;
  std::string subject;  // voter id or attack target
  std::string kind;
  bool ok = true;
  std::string detail;
};

struct AttackVerdict {
  AttackInjection attack;
  Verdict verdict = Verdict::undetected;
  std::vector<std::string> hashes;  // ballot hashes the attack touched
  std::string note;
};

// What a later verification replay needs: the storage server's view of each
// session at the close of the period.
struct VerificationState {
  struct Session {
    std::string code;
    DistrictId district;
    SimTime issue_time = 0;
    int attempts = 0;
    std::optional<Ciphertext> ciphertext;  // what storage would serve; empty if gone
  };
  ElectionPublicKey public_key;
  std::vector<Session> sessions;
  std::vector<Candidate> candidates;
};

// Voter-side record of an accepted cast: what the QR code carried.
struct CastReceipt {
  SimTime time = 0;
  VoterId voter;
  std::string ballot_hash;
  QRPayload qr;
};

struct RunReport {
  std::vector<EventOutcome> outcomes;
  std::vector<CastReceipt> receipts;
  std::vector<std::string> cancellation_lines;
  std::vector<RejectedVote> rejected_votes;
  std::map<VoterId, VoteEvent> effective_votes;
  std::size_t exported = 0;
  std::optional<std::string> counting_error;
  VcaTally evote_tally;
  CandidateTallies paper_tally;
  CandidateTallies tallies;  // internet + paper, input to allocation
  AllocationResult allocation;
  AuditLogs logs;
  AuditReport audit;
  std::vector<AttackVerdict> verdicts;
  bool integrity_alarm = false;
  VerificationState verification;
  std::size_t messages = 0;

  [[nodiscard]] std::size_t evote_tally_sum() const {
    std::size_t n = 0;
    for (const auto& [_, t] : evote_tally.by_district) {
      for (const auto& [c, v] : t) n += v;
    }
    return n;
  }
};

namespace detail {

class Simulation {
 public:
  Simulation(const Scenario& sc, const BallotCipher& cipher)
      : sc_(sc),
        cipher_(cipher),
        register_(sc.config),
        rng_(sc.seed),
        keys_(cipher.generate_keypair(rng_)),
        shares_(split_key(keys_.private_key, sc.shares_n, sc.shares_k, rng_)),
        network_(Network::standard()) {
    for (const auto& [a, b] : sc.extra_edges) network_.connect(a, b);

    auto vcs_state = VcsState::create(rng_);
    std::vector<const Voter*> voters;
    for (const auto& v : sc.config.voters) voters.push_back(&v);
    std::sort(voters.begin(), voters.end(),
              [](const Voter* a, const Voter* b) { return a->id < b->id; });
    std::uint64_t serial = 0;
    for (const auto* v : voters) {
      const auto key = generate_signing_key(rng_);
      const auto window = sc.cert_window_for(v->id);
      directory_.add({++serial, v->id, verify_key_of(key), window.from, window.until, false});
      cards_.emplace(v->id, IdCard(key, serial));
    }

    vcs_ = std::make_unique<ValidityConfirmationServer>(std::move(vcs_state), directory_);
    vss_ = std::make_unique<VoteStorageServer>(register_, directory_, network_, *vcs_, ls_,
                                               report_.logs, rng_, sc.period_end);
    vfs_ = std::make_unique<VoteForwardingServer>(register_, network_, *vss_, ls_);
    client_ = std::make_unique<Client>(network_, *vfs_, cipher_, keys_.public_key, rng_);
    va_ = std::make_unique<VerificationApp>(network_, *vfs_, cipher_, keys_.public_key);
  }

  RunReport run() {
    run_period();
    close_period();
    count();
    allocate_seats();
    report_.audit = check_consistency(report_.logs);
    judge_attacks();
    report_.messages = network_.trace().size();
    return std::move(report_);
  }

 private:
  struct Scheduled {
    SimTime time;
    std::uint64_t sequence;
    const ScenarioEvent* event;
    const AttackInjection* attack;
  };

  struct ActiveAttack {
    const AttackInjection* attack;
    std::vector<std::string> hashes;
    std::string note;
    bool active = false;
    bool alarm = false;
  };

  void advance(SimTime t) {
    clock_.observe(t, "harness");
  }

  void outcome(const Scheduled& s, std::string subject, std::string kind, bool ok,
               std::string detail) {
    report_.outcomes.push_back(
        {s.time, s.sequence, std::move(subject), std::move(kind), ok, std::move(detail)});
  }

  void run_period() {
    std::vector<Scheduled> agenda;
    for (const auto& e : sc_.events) agenda.push_back({e.time, e.sequence, &e, nullptr});
    for (const auto& a : sc_.attacks) agenda.push_back({a.at, a.sequence, nullptr, &a});
    std::stable_sort(agenda.begin(), agenda.end(), [](const Scheduled& a, const Scheduled& b) {
      return std::pair(a.time, a.sequence) < std::pair(b.time, b.sequence);
    });
    for (const auto& a : sc_.attacks) attacks_.push_back({&a, {}, {}, false, false});

    for (const auto& s : agenda) {
      advance(s.time);
      if (s.attack) {
        activate(s, *s.attack);
      } else if (s.event->kind == EventKind::vote) {
        s.event->channel == VoteChannel::internet ? cast(s, *s.event) : paper_vote(s, *s.event);
      } else if (s.event->kind == EventKind::verify) {
        verify(s, *s.event);
      } else {
        const auto* cert = directory_.for_voter(s.event->voter);
        vcs_->revoke(cert->serial, s.time);
        outcome(s, s.event->voter.value, "revoke", true, "certificate revoked");
      }
    }
    advance(sc_.period_end);
  }

  ActiveAttack* attack_state(const AttackInjection* a) {
    for (auto& st : attacks_) {
      if (st.attack == a) return &st;
    }
    return nullptr;
  }

  const AttackInjection* malicious_client_for(const VoterId& voter) const {
    for (const auto& st : attacks_) {
      if (st.active && st.attack->kind == AttackKind::malicious_client_invalid_candidate &&
          st.attack->target == voter) {
        return st.attack;
      }
    }
    return nullptr;
  }

  CandidateId out_of_district_candidate(const AttackInjection& a) const {
    if (a.candidate) return *a.candidate;
    const auto home = register_.voter(a.target).district;
    for (const auto& c : sc_.config.candidates) {
      if (c.district != home) return c.id;
    }
    // No foreign candidate exists: an id nobody stands under.
    std::uint64_t max_id = 0;
    for (const auto& c : sc_.config.candidates) max_id = std::max(max_id, c.id.value);
    return CandidateId{max_id + 1};
  }

  CandidateId forged_choice(const AttackInjection& a) const {
    if (a.candidate) return *a.candidate;
    const auto list = register_.candidates_in(register_.voter(a.target).district);
    return list.empty() ? CandidateId{0} : list.front()->id;
  }

  void cast(const Scheduled& s, const ScenarioEvent& e) {
    CastRequest req{e.voter, e.candidate, e.pin1, e.pin2, false};
    const auto* malicious = malicious_client_for(e.voter);
    if (malicious) {
      req.malicious = true;
      req.choice = out_of_district_candidate(*malicious);
    }
    try {
      auto result = client_->cast(cards_.at(e.voter), req, s.time);
      std::string detail = "stored " + result.receipt.ballot_hash;
      if (malicious) {
        auto* st = attack_state(malicious);
        st->hashes.push_back(result.receipt.ballot_hash);
        detail += " (malicious client chose " + std::to_string(req.choice.value) + ")";
      }
      report_.receipts.push_back({s.time, e.voter, result.receipt.ballot_hash, result.qr});
      casts_[e.voter].push_back(std::move(result.qr));
      accepted_.push_back({e.voter, VoteChannel::internet, req.choice, s.time});
      outcome(s, e.voter.value, "internet", true, detail);
    } catch (const Error& err) {
      outcome(s, e.voter.value, "internet", false, err.what());
    }
  }

  void paper_vote(const Scheduled& s, const ScenarioEvent& e) {
    const VoteEvent vote{e.voter, e.channel, e.candidate, s.time};
    accepted_.push_back(vote);
    std::string detail = "recorded";
    if (is_advance(e.channel)) {
      // A paper advance vote cancels any stored e-vote at once.
      auto res = vss_->cancel(e.voter, RevocationReason::advance_paper, s.time);
      if (res.cancelled) {
        detail += "; e-vote " + *res.ballot_hash + " cancelled";
        report_.cancellation_lines.push_back(std::to_string(s.time) + "\t" + e.voter.value +
                                             "\tadvance_paper\t" + *res.ballot_hash);
      }
    }
    outcome(s, e.voter.value, to_string(e.channel), true, detail);
  }

  void verify(const Scheduled& s, const ScenarioEvent& e) {
    const auto& qrs = casts_[e.voter];
    if (qrs.empty()) {
      outcome(s, e.voter.value, "verify", false, "no accepted cast to verify");
      return;
    }
    const auto idx = e.cast_index.value_or(qrs.size());
    if (idx > qrs.size()) {
      outcome(s, e.voter.value, "verify", false, "cast #" + std::to_string(idx) + " was not accepted");
      return;
    }
    try {
      const auto c = va_->verify(qrs[idx - 1], s.time);
      outcome(s, e.voter.value, "verify", true,
              "candidate " + std::to_string(c.id.value) + " " + c.name);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::integrity_alarm) {
        report_.integrity_alarm = true;
        for (auto& st : attacks_) {
          if (st.active && st.attack->target == e.voter) st.alarm = true;
        }
      }
      outcome(s, e.voter.value, "verify", false, err.what());
    }
  }

  void activate(const Scheduled& s, const AttackInjection& a) {
    auto* st = attack_state(&a);
    st->active = true;
    const auto subject = a.target.value;
    const auto kind = std::string("attack:") + to_string(a.kind);
    switch (a.kind) {
      case AttackKind::malicious_client_invalid_candidate:
        outcome(s, subject, kind, true, "client compromised");
        return;
      case AttackKind::vss_delete_ballot:
      case AttackKind::vss_delete_ballot_and_log: {
        auto hash = vss_->tamper_delete(a.target);
        if (!hash) {
          st->note = "no stored ballot at activation";
          outcome(s, subject, kind, false, st->note);
          return;
        }
        st->hashes.push_back(*hash);
        if (a.kind == AttackKind::vss_delete_ballot_and_log) {
          report_.logs[LogId::log1].tamper_erase(*hash);
        }
        outcome(s, subject, kind, true, "deleted " + *hash);
        return;
      }
      case AttackKind::vss_substitute_ciphertext_on_verify: {
        auto forged = cipher_.encrypt(keys_.public_key, forged_choice(a), rng_.array<32>());
        st->hashes.push_back(ballot_hash(forged));
        substitutes_[a.target] = forged;
        vss_->tamper_substitute_on_verify(a.target, std::move(forged));
        outcome(s, subject, kind, true, "verification requests will be served a forgery");
        return;
      }
      case AttackKind::log_rewrite_coherent: {
        auto forged = cipher_.encrypt(keys_.public_key, forged_choice(a), rng_.array<32>());
        auto swapped = vss_->tamper_replace(a.target, std::move(forged));
        if (!swapped) {
          st->note = "no stored ballot at activation";
          outcome(s, subject, kind, false, st->note);
          return;
        }
        report_.logs[LogId::log1].tamper_rewrite(swapped->first, swapped->second);
        st->hashes.push_back(swapped->first);
        st->hashes.push_back(swapped->second);
        outcome(s, subject, kind, true, "replaced " + swapped->first + " with " + swapped->second);
        return;
      }
    }
  }

  void close_period() {
    const auto t = sc_.period_end;
    auto resolved = resolve_effective_votes(accepted_, sc_.polling_roll);
    for (const auto& c : resolved.cancellations) {
      auto res = vss_->cancel(c.voter, c.reason, t);
      report_.cancellation_lines.push_back(
          std::to_string(t) + "\t" + c.voter.value + "\t" + to_string(c.reason) + "\t" +
          (res.cancelled ? *res.ballot_hash : std::string("no-op: no stored ballot")));
    }
    report_.rejected_votes = std::move(resolved.rejected);
    report_.effective_votes = std::move(resolved.effective);

    capture_verification_state();
  }

  void capture_verification_state() {
    auto& vs = report_.verification;
    vs.public_key = keys_.public_key;
    vs.candidates = sc_.config.candidates;
    std::sort(vs.candidates.begin(), vs.candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
    for (const auto& [code, session] : vss_->sessions()) {
      VerificationState::Session out{code, register_.voter(session.voter).district,
                                     session.issue_time, session.attempts, std::nullopt};
      const auto* stored = vss_->stored(session.voter);
      if (stored && stored->ballot_hash == session.ballot_hash) {
        auto sub = substitutes_.find(session.voter);
        out.ciphertext = sub == substitutes_.end() ? stored->ballot.ciphertext : sub->second;
      }
      vs.sessions.push_back(std::move(out));
    }
  }

  void count() {
    const auto t = sc_.period_end;
    const auto media = vss_->export_ballots(t);
    report_.exported = media.size();

    std::vector<KeyShare> presented;
    for (int idx : sc_.presented_shares()) presented.push_back(shares_.at(idx - 1));
    VoteCountingApplication vca(register_, cipher_, keys_.public_key, report_.logs);
    try {
      report_.evote_tally = vca.count(media, presented, t);
    } catch (const Error& err) {
      report_.counting_error = err.what();
    }

    for (const auto& [voter, vote] : report_.effective_votes) {
      if (vote.channel == VoteChannel::internet) continue;
      ++report_.paper_tally[vote.candidate];
    }
    report_.tallies = report_.evote_tally.combined();
    for (const auto& [c, n] : report_.paper_tally) report_.tallies[c] += n;
  }

  void allocate_seats() { report_.allocation = allocate(sc_.config, report_.tallies); }

  void judge_attacks() {
    std::set<std::string> invalid;
    for (const auto& e : report_.logs[LogId::log4].entries()) invalid.insert(e.ballot_hash);
    for (auto& st : attacks_) {
      AttackVerdict v{*st.attack, Verdict::undetected, st.hashes, st.note};
      const bool audited = std::any_of(st.hashes.begin(), st.hashes.end(),
                                       [&](const std::string& h) { return report_.audit.names(h); });
      const bool flagged = std::any_of(st.hashes.begin(), st.hashes.end(),
                                       [&](const std::string& h) { return invalid.contains(h); });
      if (st.alarm) {
        v.verdict = Verdict::detected_by_verification;
      } else if (audited || flagged) {
        v.verdict = Verdict::detected;
      }
      if (v.note.empty()) {
        v.note = st.alarm     ? "verification raised an integrity alarm"
                 : audited    ? "audit discrepancy names the ballot"
                 : flagged    ? "counting routed the ballot to LOG4"
                 : st.hashes.empty() ? "attack had no effect"
                                     : "audit passes; logs are consistent";
      }
      report_.verdicts.push_back(std::move(v));
    }
  }

  const Scenario& sc_;
  const BallotCipher& cipher_;
  Register register_;
  DeterministicRng rng_;
  ElectionKeyPair keys_;
  std::vector<KeyShare> shares_;
  Network network_;
  CertificateDirectory directory_;
  std::map<VoterId, IdCard> cards_;
  LogServer ls_;
  RunReport report_;
  std::unique_ptr<ValidityConfirmationServer> vcs_;
  std::unique_ptr<VoteStorageServer> vss_;
  std::unique_ptr<VoteForwardingServer> vfs_;
  std::unique_ptr<Client> client_;
  std::unique_ptr<VerificationApp> va_;
  ClockObserver clock_;

  std::vector<ActiveAttack> attacks_;
  std::map<VoterId, Ciphertext> substitutes_;
  std::map<VoterId, std::vector<QRPayload>> casts_;
  std::vector<VoteEvent> accepted_;
};

}  // namespace detail

inline RunReport run(const Scenario& scenario, const BallotCipher& cipher) {
  validate_scenario(scenario);
  detail::Simulation sim(scenario, cipher);
  return sim.run();
}

inline RunReport run(const Scenario& scenario) {
  static const HybridBallotCipher cipher;
  return run(scenario, cipher);
}

}  // namespace ivote
