#pragma once

// The seven components of the internet voting system as state machines:
//
//   Client                  authenticates, encrypts, signs and submits
//   VerificationApp         re-encrypts candidates with disclosed randomness
//   VoteForwardingServer    public entry point; relays to storage
//   LogServer               operational log sink for VFS and VSS
//   VoteStorageServer       stores ballots, revotes, cancellations, export
//   ValidityConfirmationServer  certificate status with signed answers
//   VoteCountingApplication air-gapped decryption and tallying
//
// Components talk only through Channels over the simulated Network. The
// counting application receives the export as a plain value.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ivote/audit_logs.hpp"
#include "ivote/bytes.hpp"
#include "ivote/crypto_suite.hpp"
#include "ivote/electoral_core.hpp"
#include "ivote/network.hpp"
#include "ivote/tally_alloc.hpp"
#include "ivote/types.hpp"

namespace ivote {

// ---- messages and records ---------------------------------------------------

struct SignedEncryptedBallot {
  VoterId voter_id;
  Ciphertext ciphertext;
  Signature signature;
  std::uint64_t certificate_serial = 0;
  SimTime cast_time = 0;
};

struct StoredBallotRecord {
  SignedEncryptedBallot ballot;
  std::string ballot_hash;
  ValidityConfirmation confirmation;
  DistrictId district;
};

struct Receipt {
  std::string session_code;  // hex
  SimTime issue_time = 0;
  std::string ballot_hash;
};

// What the client shows as a QR code: `session=<hex>;r=<hex>`.
struct QRPayload {
  std::string session_code;
  BallotRandomness r{};

  [[nodiscard]] std::string serialize() const { return "session=" + session_code + ";r=" + to_hex(r); }

  static QRPayload parse(std::string_view text) {
    constexpr std::string_view kSession = "session=";
    constexpr std::string_view kR = ";r=";
    const auto sep = text.find(kR);
    if (!text.starts_with(kSession) || sep == std::string_view::npos) {
      throw Error(ErrorCode::parse, "QR payload must read session=<hex>;r=<hex>");
    }
    QRPayload p;
    p.session_code = std::string(text.substr(kSession.size(), sep - kSession.size()));
    if (p.session_code.empty()) throw Error(ErrorCode::parse, "empty session code");
    from_hex(p.session_code);  // validates
    const auto r = from_hex(text.substr(sep + kR.size()));
    if (r.size() != p.r.size()) throw Error(ErrorCode::parse, "randomness must be 32 bytes");
    std::copy(r.begin(), r.end(), p.r.begin());
    return p;
  }

  friend bool operator==(const QRPayload&, const QRPayload&) = default;
};

struct ConstituencyBatch {
  DistrictId district;
  std::vector<Ciphertext> ciphertexts;  // ascending ballot hash
};

// Anonymized ballots for counting. Carries no voter identity.
struct AnonymizedBallotExport {
  std::vector<ConstituencyBatch> batches;  // ascending district id

  [[nodiscard]] std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : batches) n += b.ciphertexts.size();
    return n;
  }
};

struct DetachedSignature {
  VoterId voter_id;
  Signature signature;
};

// Registry of issued voter certificates (the simulated PKI).
class CertificateDirectory {
 public:
  void add(VoterCertificate cert) {
    by_voter_[cert.voter_id] = cert.serial;
    certs_[cert.serial] = std::move(cert);
  }

  [[nodiscard]] const VoterCertificate* find(std::uint64_t serial) const {
    auto it = certs_.find(serial);
    return it == certs_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] const VoterCertificate* for_voter(const VoterId& voter) const {
    auto it = by_voter_.find(voter);
    return it == by_voter_.end() ? nullptr : find(it->second);
  }

 private:
  std::map<std::uint64_t, VoterCertificate> certs_;
  std::map<VoterId, std::uint64_t> by_voter_;
};

// ---- log server -------------------------------------------------------------

struct OperationalEntry {
  SimTime time = 0;
  Node source = Node::vfs;
  std::string text;
};

class LogServer {
 public:
  void store(Node source, SimTime now, std::string text) {
    entries_.push_back({now, source, std::move(text)});
  }
  [[nodiscard]] const std::vector<OperationalEntry>& entries() const { return entries_; }

 private:
  std::vector<OperationalEntry> entries_;
};

// ---- validity confirmation server -------------------------------------------

class ValidityConfirmationServer {
 public:
  ValidityConfirmationServer(VcsState state, const CertificateDirectory& directory)
      : state_(std::move(state)), directory_(&directory) {}

  ValidityResult confirm(std::uint64_t serial, SimTime now) {
    clock_.observe(now, "vcs");
    const auto* cert = directory_->find(serial);
    if (!cert) return ValidityRejection{RejectionReason::unknown};
    return confirm_validity(state_, *cert, now);
  }

  void revoke(std::uint64_t serial, SimTime at) { state_.revoke(serial, at); }

  [[nodiscard]] const VerifyKey& verify_key() const { return state_.verify_key; }

 private:
  VcsState state_;
  const CertificateDirectory* directory_;
  ClockObserver clock_;
};

// ---- vote storage server ----------------------------------------------------

struct VerificationSession {
  VoterId voter;
  std::string ballot_hash;
  SimTime issue_time = 0;
  int attempts = 0;
};

struct FetchedBallot {
  Ciphertext ciphertext;
  DistrictId district;
};

struct CancellationResult {
  bool cancelled = false;
  std::optional<std::string> ballot_hash;
};

class VoteStorageServer {
 public:
  VoteStorageServer(const Register& reg, const CertificateDirectory& directory, Network& net,
                    ValidityConfirmationServer& vcs, LogServer& ls, AuditLogs& logs,
                    DeterministicRng& rng, SimTime period_end)
      : register_(&reg),
        directory_(&directory),
        vcs_(net, Node::vss, Node::vcs, vcs),
        ls_(net, Node::vss, Node::log_server, ls),
        logs_(&logs),
        rng_(&rng),
        period_end_(period_end) {}

  Receipt receive(const SignedEncryptedBallot& ballot, SimTime now) {
    clock_.observe(now, "vss");
    const auto& voter = register_->voter(ballot.voter_id);
    const auto* cert = directory_->find(ballot.certificate_serial);
    if (!cert || cert->voter_id != ballot.voter_id) {
      reject(ballot, now, "unknown certificate");
      throw Error(ErrorCode::certificate_unknown, "no certificate for voter " + ballot.voter_id.value);
    }
    if (!verify(*cert, ballot.ciphertext.bytes, ballot.signature)) {
      reject(ballot, now, "bad signature");
      throw Error(ErrorCode::invalid_signature, "signature does not verify");
    }
    auto status = vcs_.request("validity_query", now, [&](ValidityConfirmationServer& vcs) {
      return vcs.confirm(cert->serial, now);
    });
    if (auto* no = std::get_if<ValidityRejection>(&status)) {
      reject(ballot, now, std::string("certificate ") + to_string(no->reason));
      throw Error(no->reason == RejectionReason::revoked ? ErrorCode::certificate_revoked
                  : no->reason == RejectionReason::unknown ? ErrorCode::certificate_unknown
                                                           : ErrorCode::certificate_expired,
                  std::string("certificate ") + to_string(no->reason));
    }

    StoredBallotRecord record{ballot, ballot_hash(ballot.ciphertext),
                              std::get<ValidityConfirmation>(std::move(status)), voter.district};
    logs_->logs[0].append({0, now, record.ballot_hash, ballot.voter_id, std::nullopt});
    if (auto prior = stored_.find(ballot.voter_id); prior != stored_.end()) {
      logs_->logs[1].append(
          {0, now, prior->second.ballot_hash, ballot.voter_id, RevocationReason::revote});
      stored_.erase(prior);
    }
    const auto hash = record.ballot_hash;
    stored_.emplace(ballot.voter_id, std::move(record));

    std::string code;
    do {
      code = to_hex(rng_->array<16>());
    } while (sessions_.contains(code));
    sessions_.emplace(code, VerificationSession{ballot.voter_id, hash, now, 0});
    log(now, "stored ballot " + hash + " for " + ballot.voter_id.value);
    return Receipt{code, now, hash};
  }

  CancellationResult cancel(const VoterId& voter, RevocationReason reason, SimTime now) {
    clock_.observe(now, "vss");
    auto it = stored_.find(voter);
    if (it == stored_.end()) return {};
    const auto hash = it->second.ballot_hash;
    logs_->logs[1].append({0, now, hash, voter, reason});
    stored_.erase(it);
    log(now, "cancelled ballot " + hash + " (" + to_string(reason) + ")");
    return {true, hash};
  }

  // Every request that reaches storage spends one of the session's attempts.
  FetchedBallot fetch_for_verification(const std::string& session_code, SimTime now) {
    clock_.observe(now, "vss");
    auto it = sessions_.find(session_code);
    if (it == sessions_.end()) throw Error(ErrorCode::unknown_session, "no session " + session_code);
    auto& session = it->second;
    ++session.attempts;
    if (session.attempts > kVerificationAttempts) {
      throw Error(ErrorCode::attempts_exhausted, "session already verified " +
                                                     std::to_string(kVerificationAttempts) +
                                                     " times");
    }
    if (now >= session.issue_time + kVerificationWindow) {
      throw Error(ErrorCode::window_expired, "verification window closed");
    }
    auto stored = stored_.find(session.voter);
    if (stored == stored_.end() || stored->second.ballot_hash != session.ballot_hash) {
      throw Error(ErrorCode::vote_absent, "ballot for session no longer stored");
    }
    log(now, "verification fetch for session " + session_code);
    if (auto sub = substitutes_.find(session.voter); sub != substitutes_.end()) {
      return {sub->second, stored->second.district};
    }
    return {stored->second.ballot.ciphertext, stored->second.district};
  }

  // Sorts by constituency, strips signatures, logs every exported ballot.
  AnonymizedBallotExport export_ballots(SimTime now) {
    clock_.observe(now, "vss");
    if (now < period_end_) throw Error(ErrorCode::sequencing, "voting period has not ended");
    if (exported_) throw Error(ErrorCode::sequencing, "ballots already exported");
    exported_ = true;

    std::map<DistrictId, std::vector<std::pair<std::string, Ciphertext>>> grouped;
    for (const auto& [voter, record] : stored_) {
      grouped[record.district].emplace_back(record.ballot_hash, record.ballot.ciphertext);
      proofs_.push_back({voter, record.ballot.signature});
    }
    AnonymizedBallotExport out;
    for (auto& [district, entries] : grouped) {
      std::sort(entries.begin(), entries.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      ConstituencyBatch batch{district, {}};
      for (auto& [hash, ct] : entries) {
        logs_->logs[2].append({0, now, hash, std::nullopt, std::nullopt});
        batch.ciphertexts.push_back(std::move(ct));
      }
      out.batches.push_back(std::move(batch));
    }
    log(now, "exported " + std::to_string(out.size()) + " ballots");
    return out;
  }

  [[nodiscard]] const StoredBallotRecord* stored(const VoterId& voter) const {
    auto it = stored_.find(voter);
    return it == stored_.end() ? nullptr : &it->second;
  }
  [[nodiscard]] std::size_t stored_count() const { return stored_.size(); }
  [[nodiscard]] const std::map<VoterId, StoredBallotRecord>& records() const { return stored_; }
  [[nodiscard]] const std::map<std::string, VerificationSession>& sessions() const {
    return sessions_;
  }
  [[nodiscard]] const std::vector<DetachedSignature>& participation_proofs() const {
    return proofs_;
  }

  // ---- tamper hooks (attack injection) ----

  // Silently drops the voter's stored ballot. Returns its hash.
  std::optional<std::string> tamper_delete(const VoterId& voter) {
    auto it = stored_.find(voter);
    if (it == stored_.end()) return std::nullopt;
    auto hash = it->second.ballot_hash;
    stored_.erase(it);
    return hash;
  }

  // Replaces the stored ciphertext in place. Returns (old hash, new hash).
  std::optional<std::pair<std::string, std::string>> tamper_replace(const VoterId& voter,
                                                                    Ciphertext forged) {
    auto it = stored_.find(voter);
    if (it == stored_.end()) return std::nullopt;
    auto old_hash = it->second.ballot_hash;
    it->second.ballot.ciphertext = std::move(forged);
    it->second.ballot_hash = ballot_hash(it->second.ballot.ciphertext);
    for (auto& [_, s] : sessions_) {
      if (s.voter == voter && s.ballot_hash == old_hash) s.ballot_hash = it->second.ballot_hash;
    }
    return std::pair{old_hash, it->second.ballot_hash};
  }

  // Verification requests for this voter receive `forged` instead.
  void tamper_substitute_on_verify(const VoterId& voter, Ciphertext forged) {
    substitutes_[voter] = std::move(forged);
  }

 private:
  void reject(const SignedEncryptedBallot& ballot, SimTime now, const std::string& why) {
    log(now, "rejected ballot from " + ballot.voter_id.value + ": " + why);
  }

  void log(SimTime now, std::string text) {
    ls_.request("log", now, [&](LogServer& ls) { ls.store(Node::vss, now, std::move(text)); });
  }

  const Register* register_;
  const CertificateDirectory* directory_;
  Channel<ValidityConfirmationServer> vcs_;
  Channel<LogServer> ls_;
  AuditLogs* logs_;
  DeterministicRng* rng_;
  SimTime period_end_;
  bool exported_ = false;
  ClockObserver clock_;

  std::map<VoterId, StoredBallotRecord> stored_;
  std::map<std::string, VerificationSession> sessions_;
  std::map<VoterId, Ciphertext> substitutes_;
  std::vector<DetachedSignature> proofs_;
};

// ---- vote forwarding server -------------------------------------------------

struct VerificationData {
  Ciphertext ciphertext;
  std::vector<Candidate> candidates;
};

// Public entry point. Writes operational entries to the log server only;
// it never touches the audit logs.
class VoteForwardingServer {
 public:
  VoteForwardingServer(const Register& reg, Network& net, VoteStorageServer& vss, LogServer& ls)
      : register_(&reg), vss_(net, Node::vfs, Node::vss, vss), ls_(net, Node::vfs, Node::log_server, ls) {}

  void authenticate(const VoterId& voter, SimTime now) {
    clock_.observe(now, "vfs");
    if (!register_->find_voter(voter)) {
      log(now, "authentication refused for " + voter.value);
      throw Error(ErrorCode::ineligible_voter, "voter " + voter.value + " not in register");
    }
    log(now, "authenticated " + voter.value);
  }

  std::vector<Candidate> candidate_list(const VoterId& voter, SimTime now) {
    clock_.observe(now, "vfs");
    return district_candidate_list(*register_, voter);
  }

  Receipt submit(const SignedEncryptedBallot& ballot, SimTime now) {
    clock_.observe(now, "vfs");
    log(now, "forwarding ballot from " + ballot.voter_id.value);
    return vss_.request("store_ballot", now, [&](VoteStorageServer& vss) {
      return vss.receive(ballot, now);
    });
  }

  VerificationData fetch_vote(const std::string& session_code, SimTime now) {
    clock_.observe(now, "vfs");
    auto fetched = vss_.request("fetch_ballot", now, [&](VoteStorageServer& vss) {
      return vss.fetch_for_verification(session_code, now);
    });
    VerificationData out{std::move(fetched.ciphertext), {}};
    for (const auto* c : register_->candidates_in(fetched.district)) out.candidates.push_back(*c);
    return out;
  }

 private:
  void log(SimTime now, std::string text) {
    ls_.request("log", now, [&](LogServer& ls) { ls.store(Node::vfs, now, std::move(text)); });
  }

  const Register* register_;
  Channel<VoteStorageServer> vss_;
  Channel<LogServer> ls_;
  ClockObserver clock_;
};

// ---- ID card and client -----------------------------------------------------

enum class PinSlot { authentication, signing };

// Card-side PIN state. Three consecutive wrong entries lock the slot for the
// rest of the run (PUK recovery is not modelled).
class IdCard {
 public:
  IdCard() = default;
  IdCard(SigningKey key, std::uint64_t serial) : key_(key), serial_(serial) {}

  // Processes entries in order until one is correct. Throws when the slot
  // locks or the entries run out.
  void enter_pin(PinSlot slot, const std::vector<bool>& entries) {
    auto& state = slot == PinSlot::authentication ? auth_ : sign_;
    for (bool ok : entries) {
      if (state.locked) break;
      if (ok) {
        state.failures = 0;
        return;
      }
      if (++state.failures >= kPinAttempts) state.locked = true;
    }
    if (state.locked) throw Error(ErrorCode::pin_locked, slot == PinSlot::authentication
                                                             ? "PIN1 locked"
                                                             : "PIN2 locked");
    throw Error(ErrorCode::authentication_failed, "PIN not accepted");
  }

  [[nodiscard]] bool locked(PinSlot slot) const {
    return (slot == PinSlot::authentication ? auth_ : sign_).locked;
  }
  [[nodiscard]] const SigningKey& key() const { return key_; }
  [[nodiscard]] std::uint64_t serial() const { return serial_; }

 private:
  struct Slot {
    int failures = 0;
    bool locked = false;
  };
  SigningKey key_{};
  std::uint64_t serial_ = 0;
  Slot auth_;
  Slot sign_;
};

struct CastRequest {
  VoterId voter;
  CandidateId choice;
  std::vector<bool> pin1{true};
  std::vector<bool> pin2{true};
  // A malicious client skips the check that the choice is on the list.
  bool malicious = false;
};

struct CastResult {
  SignedEncryptedBallot ballot;
  Receipt receipt;
  QRPayload qr;
};

class Client {
 public:
  Client(Network& net, VoteForwardingServer& vfs, const BallotCipher& cipher,
         ElectionPublicKey election_key, DeterministicRng& rng)
      : vfs_(net, Node::client, Node::vfs, vfs),
        cipher_(&cipher),
        election_key_(std::move(election_key)),
        rng_(&rng) {}

  CastResult cast(IdCard& card, const CastRequest& req, SimTime now) {
    card.enter_pin(PinSlot::authentication, req.pin1);
    vfs_.request("authenticate", now,
                 [&](VoteForwardingServer& vfs) { vfs.authenticate(req.voter, now); });
    const auto list = vfs_.request("candidate_list", now, [&](VoteForwardingServer& vfs) {
      return vfs.candidate_list(req.voter, now);
    });
    const bool listed = std::any_of(list.begin(), list.end(),
                                    [&](const Candidate& c) { return c.id == req.choice; });
    if (!listed && !req.malicious) {
      throw Error(ErrorCode::invalid_choice, "candidate " + std::to_string(req.choice.value) +
                                                 " is not on the voter's list");
    }
    const auto r = rng_->array<32>();
    auto ct = cipher_->encrypt(election_key_, req.choice, r);
    card.enter_pin(PinSlot::signing, req.pin2);
    SignedEncryptedBallot ballot{req.voter, ct, sign(card.key(), ct.bytes), card.serial(), now};
    auto receipt = vfs_.request("submit_ballot", now, [&](VoteForwardingServer& vfs) {
      return vfs.submit(ballot, now);
    });
    QRPayload qr{receipt.session_code, r};
    return {std::move(ballot), std::move(receipt), std::move(qr)};
  }

 private:
  Channel<VoteForwardingServer> vfs_;
  const BallotCipher* cipher_;
  ElectionPublicKey election_key_;
  DeterministicRng* rng_;
};

// ---- verification application -----------------------------------------------

// Brute-force re-encryption over the district list: the app never learns
// which candidate the voter expects.
inline std::optional<Candidate> match_candidate(const BallotCipher& cipher,
                                                const ElectionPublicKey& pk,
                                                const VerificationData& data,
                                                const BallotRandomness& r) {
  for (const auto& c : data.candidates) {
    if (cipher.encrypt(pk, c.id, r) == data.ciphertext) return c;
  }
  return std::nullopt;
}

class VerificationApp {
 public:
  VerificationApp(Network& net, VoteForwardingServer& vfs, const BallotCipher& cipher,
                  ElectionPublicKey election_key)
      : vfs_(net, Node::verification_app, Node::vfs, vfs),
        cipher_(&cipher),
        election_key_(std::move(election_key)) {}

  Candidate verify(const QRPayload& payload, SimTime now) {
    const auto data = vfs_.request("fetch_vote", now, [&](VoteForwardingServer& vfs) {
      return vfs.fetch_vote(payload.session_code, now);
    });
    if (auto match = match_candidate(*cipher_, election_key_, data, payload.r)) return *match;
    throw Error(ErrorCode::integrity_alarm,
                "stored ballot matches no candidate under the disclosed randomness");
  }

 private:
  Channel<VoteForwardingServer> vfs_;
  const BallotCipher* cipher_;
  ElectionPublicKey election_key_;
};

// ---- vote counting application ----------------------------------------------

struct VcaTally {
  std::map<DistrictId, CandidateTallies> by_district;
  std::size_t valid = 0;
  std::size_t invalid = 0;

  [[nodiscard]] CandidateTallies combined() const {
    CandidateTallies out;
    for (const auto& [_, t] : by_district) {
      for (const auto& [c, n] : t) out[c] += n;
    }
    return out;
  }
};

// Air-gapped: no Channel exists to or from this class. It receives the export
// by value and the officials' shares in person.
class VoteCountingApplication {
 public:
  VoteCountingApplication(const Register& reg, const BallotCipher& cipher,
                          ElectionPublicKey election_key, AuditLogs& logs)
      : register_(&reg), cipher_(&cipher), election_key_(std::move(election_key)), logs_(&logs) {}

  VcaTally count(const AnonymizedBallotExport& media, std::span<const KeyShare> shares,
                 SimTime now) {
    // Nothing is decrypted or logged unless the key reconstructs.
    const auto key = combine_shares(shares);
    if (cipher_->public_key_of(key) != election_key_) {
      throw Error(ErrorCode::key_mismatch, "reconstructed key does not match the election key");
    }
    VcaTally tally;
    for (const auto& batch : media.batches) {
      auto& district_tally = tally.by_district[batch.district];
      for (const auto& ct : batch.ciphertexts) {
        const auto hash = ballot_hash(ct);
        std::optional<CandidateId> choice;
        try {
          choice = cipher_->decrypt(key, ct);
        } catch (const Error&) {
        }
        if (choice && register_->stands_in(*choice, batch.district)) {
          ++district_tally[*choice];
          ++tally.valid;
          logs_->logs[4].append({0, now, hash, std::nullopt, std::nullopt});
        } else {
          ++tally.invalid;
          logs_->logs[3].append({0, now, hash, std::nullopt, std::nullopt});
        }
      }
    }
    return tally;
  }

 private:
  const Register* register_;
  const BallotCipher* cipher_;
  ElectionPublicKey election_key_;
  AuditLogs* logs_;
};

}  // namespace ivote
