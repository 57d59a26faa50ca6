#pragma once

// Abstract cryptographic primitives for the simulator: ballot encryption that
// is deterministic in its randomness, voter signatures, certificates with a
// validity confirmation service, and k-of-n splitting of the election key.
//
// Fidelity is simulation-grade. X25519 and Ed25519 come from libsodium; nothing
// here is hardened against side channels.

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ivote/bytes.hpp"
#include "ivote/types.hpp"

namespace ivote {

using BallotRandomness = std::array<std::uint8_t, 32>;

struct ElectionPublicKey {
  Bytes bytes;
  friend bool operator==(const ElectionPublicKey&, const ElectionPublicKey&) = default;
};

struct ElectionPrivateKey {
  Bytes bytes;
  friend bool operator==(const ElectionPrivateKey&, const ElectionPrivateKey&) = default;
};

struct ElectionKeyPair {
  ElectionPublicKey public_key;
  ElectionPrivateKey private_key;
};

struct Ciphertext {
  Bytes bytes;
  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

// Ballot hash: SHA-256 of the serialized ciphertext, lowercase hex.
inline std::string ballot_hash(const Ciphertext& ct) { return sha256_hex(ct.bytes); }

inline constexpr std::size_t kCandidateEncodingSize = 16;

inline std::array<std::uint8_t, kCandidateEncodingSize> encode_candidate(CandidateId id) {
  if (id.value > 9'999'999'999'999'999ULL) {
    throw Error(ErrorCode::encoding,
                "candidate id " + std::to_string(id.value) + " exceeds 16 decimal digits");
  }
  std::array<std::uint8_t, kCandidateEncodingSize> out{};
  auto v = id.value;
  for (std::size_t i = kCandidateEncodingSize; i-- > 0;) {
    out[i] = static_cast<std::uint8_t>('0' + v % 10);
    v /= 10;
  }
  return out;
}

inline CandidateId decode_candidate(ByteView encoded) {
  if (encoded.size() != kCandidateEncodingSize) {
    throw Error(ErrorCode::decryption, "candidate encoding has wrong length");
  }
  std::uint64_t v = 0;
  for (auto b : encoded) {
    if (b < '0' || b > '9') throw Error(ErrorCode::decryption, "candidate encoding not decimal");
    v = v * 10 + static_cast<std::uint64_t>(b - '0');
  }
  return CandidateId{v};
}

namespace detail {

inline void ensure_sodium() {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw std::runtime_error("libsodium initialisation failed");
}

inline std::array<std::uint8_t, 32> x25519_public(ByteView secret) {
  ensure_sodium();
  if (secret.size() != 32) throw Error(ErrorCode::decryption, "invalid private key");
  std::array<std::uint8_t, 32> out{};
  crypto_scalarmult_curve25519_base(out.data(), secret.data());
  return out;
}

inline std::array<std::uint8_t, 32> x25519_shared(ByteView secret, ByteView peer_public) {
  ensure_sodium();
  if (secret.size() != 32) throw Error(ErrorCode::decryption, "invalid private key");
  if (peer_public.size() != 32) throw Error(ErrorCode::decryption, "invalid public key");
  std::array<std::uint8_t, 32> out{};
  if (crypto_scalarmult_curve25519(out.data(), secret.data(), peer_public.data()) != 0) {
    throw Error(ErrorCode::decryption, "key agreement failed");
  }
  return out;
}

}  // namespace detail

// Pluggable ballot encryption. Implementations must be pure functions of
// their arguments: verification re-encrypts every candidate with the
// disclosed randomness and compares bytes.
class BallotCipher {
 public:
  virtual ~BallotCipher() = default;

  [[nodiscard]] virtual ElectionKeyPair generate_keypair(DeterministicRng& rng) const = 0;
  [[nodiscard]] virtual Ciphertext encrypt(const ElectionPublicKey& pk, CandidateId candidate,
                                           const BallotRandomness& r) const = 0;
  [[nodiscard]] virtual CandidateId decrypt(const ElectionPrivateKey& sk,
                                            const Ciphertext& ct) const = 0;
  [[nodiscard]] virtual ElectionPublicKey public_key_of(const ElectionPrivateKey& sk) const = 0;
};

// Hybrid construction. H(pk || r) masks the padded candidate encoding; r is
// carried under an X25519 key agreement whose ephemeral secret is itself
// derived from (pk, r), so the whole ciphertext is fixed by its inputs.
//
// Layout: version(1) | ephemeral_pk(32) | wrapped_r(32) | masked(16) | tag(16)
class HybridBallotCipher final : public BallotCipher {
 public:
  static constexpr std::size_t kSize = 1 + 32 + 32 + kCandidateEncodingSize + 16;

  [[nodiscard]] ElectionKeyPair generate_keypair(DeterministicRng& rng) const override {
    auto secret = rng.array<32>();
    auto pub = detail::x25519_public(secret);
    return {ElectionPublicKey{Bytes(pub.begin(), pub.end())},
            ElectionPrivateKey{Bytes(secret.begin(), secret.end())}};
  }

  [[nodiscard]] ElectionPublicKey public_key_of(const ElectionPrivateKey& sk) const override {
    auto pub = detail::x25519_public(sk.bytes);
    return ElectionPublicKey{Bytes(pub.begin(), pub.end())};
  }

  [[nodiscard]] Ciphertext encrypt(const ElectionPublicKey& pk, CandidateId candidate,
                                   const BallotRandomness& r) const override {
    const auto message = encode_candidate(candidate);
    const auto eph_secret = tagged_hash("ivote/eph", {pk.bytes, r});
    const auto eph_public = detail::x25519_public(eph_secret);
    const auto shared = detail::x25519_shared(eph_secret, pk.bytes);

    Ciphertext ct;
    auto& out = ct.bytes;
    out.reserve(kSize);
    out.push_back(kWireVersion);
    append(out, eph_public);
    const auto wrap = tagged_hash("ivote/wrap", {shared, eph_public});
    for (std::size_t i = 0; i < r.size(); ++i) out.push_back(r[i] ^ wrap[i]);
    const auto mask = tagged_hash("ivote/mask", {pk.bytes, r});
    for (std::size_t i = 0; i < message.size(); ++i) out.push_back(message[i] ^ mask[i]);
    const auto tag = tagged_hash("ivote/tag", {pk.bytes, r, message});
    out.insert(out.end(), tag.begin(), tag.begin() + 16);
    return ct;
  }

  [[nodiscard]] CandidateId decrypt(const ElectionPrivateKey& sk,
                                    const Ciphertext& ct) const override {
    const ByteView in = ct.bytes;
    if (in.size() != kSize) throw Error(ErrorCode::decryption, "ciphertext has wrong length");
    if (in[0] != kWireVersion) throw Error(ErrorCode::decryption, "unknown ciphertext version");
    const auto eph_public = in.subspan(1, 32);
    const auto wrapped = in.subspan(33, 32);
    const auto masked = in.subspan(65, kCandidateEncodingSize);
    const auto tag = in.subspan(65 + kCandidateEncodingSize, 16);

    const auto pk = public_key_of(sk);
    const auto shared = detail::x25519_shared(sk.bytes, eph_public);
    const auto wrap = tagged_hash("ivote/wrap", {shared, eph_public});
    BallotRandomness r{};
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = wrapped[i] ^ wrap[i];

    const auto mask = tagged_hash("ivote/mask", {pk.bytes, r});
    std::array<std::uint8_t, kCandidateEncodingSize> message{};
    for (std::size_t i = 0; i < message.size(); ++i) message[i] = masked[i] ^ mask[i];
    const auto expected = tagged_hash("ivote/tag", {pk.bytes, r, message});
    if (!std::equal(tag.begin(), tag.end(), expected.begin())) {
      throw Error(ErrorCode::decryption, "ciphertext authentication failed");
    }
    return decode_candidate(message);
  }
};

// ---- signatures and certificates -------------------------------------------

// Ed25519 key: the 32-byte seed plus libsodium's expanded form (seed | public).
struct SigningKey {
  std::array<std::uint8_t, 32> seed{};
  std::array<std::uint8_t, 64> expanded{};

  static SigningKey from_seed(const std::array<std::uint8_t, 32>& seed) {
    detail::ensure_sodium();
    SigningKey k{seed, {}};
    std::array<std::uint8_t, 32> pk{};
    crypto_sign_seed_keypair(pk.data(), k.expanded.data(), seed.data());
    return k;
  }
};

struct VerifyKey {
  std::array<std::uint8_t, 32> bytes{};
  friend bool operator==(const VerifyKey&, const VerifyKey&) = default;
};

struct Signature {
  Bytes bytes;  // version(1) | ed25519(64)
  friend bool operator==(const Signature&, const Signature&) = default;
};

inline SigningKey generate_signing_key(DeterministicRng& rng) {
  return SigningKey::from_seed(rng.array<32>());
}

inline VerifyKey verify_key_of(const SigningKey& key) {
  VerifyKey out;
  std::copy(key.expanded.begin() + 32, key.expanded.end(), out.bytes.begin());
  return out;
}

inline Signature sign(const SigningKey& key, ByteView message) {
  Signature out;
  out.bytes.resize(65);
  out.bytes[0] = kWireVersion;
  crypto_sign_detached(out.bytes.data() + 1, nullptr, message.data(), message.size(),
                       key.expanded.data());
  return out;
}

inline bool verify_signature(const VerifyKey& key, ByteView message, const Signature& sig) {
  if (sig.bytes.size() != 65 || sig.bytes[0] != kWireVersion) return false;
  detail::ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data() + 1, message.data(), message.size(),
                                     key.bytes.data()) == 0;
}

struct VoterCertificate {
  std::uint64_t serial = 0;
  VoterId voter_id;
  VerifyKey public_key;
  SimTime valid_from = 0;
  SimTime valid_until = 0;  // exclusive
  bool revoked = false;
};

inline bool verify(const VoterCertificate& cert, ByteView message, const Signature& sig) {
  return verify_signature(cert.public_key, message, sig);
}

enum class RejectionReason { revoked, expired, not_yet_valid, unknown };

inline const char* to_string(RejectionReason r) {
  switch (r) {
    case RejectionReason::revoked: return "revoked";
    case RejectionReason::expired: return "expired";
    case RejectionReason::not_yet_valid: return "not_yet_valid";
    case RejectionReason::unknown: return "unknown";
  }
  return "unknown";
}

struct ValidityConfirmation {
  std::uint64_t serial = 0;
  VoterId voter_id;
  SimTime at_time = 0;
  Signature signature;

  [[nodiscard]] Bytes signed_payload() const {
    Bytes out;
    out.push_back(kWireVersion);
    append_u64(out, serial);
    append_u64(out, static_cast<std::uint64_t>(at_time));
    append_u64(out, voter_id.value.size());
    append(out, voter_id.value);
    return out;
  }

  [[nodiscard]] Bytes serialize() const {
    auto out = signed_payload();
    append(out, signature.bytes);
    return out;
  }
};

struct ValidityRejection {
  RejectionReason reason = RejectionReason::unknown;
};

using ValidityResult = std::variant<ValidityConfirmation, ValidityRejection>;

// Revocation state and signing key of the validity confirmation service.
struct VcsState {
  SigningKey key;
  VerifyKey verify_key;
  std::map<std::uint64_t, SimTime> revocations;  // serial -> revocation instant

  static VcsState create(DeterministicRng& rng) {
    VcsState s;
    s.key = generate_signing_key(rng);
    s.verify_key = verify_key_of(s.key);
    return s;
  }

  void revoke(std::uint64_t serial, SimTime at) {
    auto [it, inserted] = revocations.emplace(serial, at);
    if (!inserted) it->second = std::min(it->second, at);
  }
};

// Validity window is [valid_from, valid_until).
inline ValidityResult confirm_validity(const VcsState& vcs, const VoterCertificate& cert,
                                       SimTime at_time) {
  if (cert.revoked) return ValidityRejection{RejectionReason::revoked};
  if (auto it = vcs.revocations.find(cert.serial); it != vcs.revocations.end() &&
                                                   it->second <= at_time) {
    return ValidityRejection{RejectionReason::revoked};
  }
  if (at_time < cert.valid_from) return ValidityRejection{RejectionReason::not_yet_valid};
  if (at_time >= cert.valid_until) return ValidityRejection{RejectionReason::expired};
  ValidityConfirmation c{cert.serial, cert.voter_id, at_time, {}};
  c.signature = sign(vcs.key, c.signed_payload());
  return c;
}

inline bool verify_confirmation(const VerifyKey& vcs_key, const ValidityConfirmation& c) {
  return verify_signature(vcs_key, c.signed_payload(), c.signature);
}

// ---- k-of-n sharing of the election private key ----------------------------
//
// Polynomial sharing over GF(2^8), applied independently to every byte of the
// serialized key. Share indices are the evaluation points 1..n.

struct KeyShare {
  std::uint8_t index = 0;
  std::uint8_t threshold = 0;
  Bytes payload;
};

namespace gf256 {

inline std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b) {
    if (b & 1) p ^= a;
    const bool carry = a & 0x80;
    a = static_cast<std::uint8_t>(a << 1);
    if (carry) a ^= 0x1b;
    b >>= 1;
  }
  return p;
}

inline std::uint8_t inv(std::uint8_t a) {
  // a^254 = a^-1 for a != 0
  std::uint8_t result = 1;
  std::uint8_t base = a;
  for (int e = 254; e; e >>= 1) {
    if (e & 1) result = mul(result, base);
    base = mul(base, base);
  }
  return result;
}

}  // namespace gf256

inline std::vector<KeyShare> split_key(const ElectionPrivateKey& key, int n, int k,
                                       DeterministicRng& rng) {
  if (k < 1 || k > n || n > 255) {
    throw Error(ErrorCode::validation, "threshold parameters require 1 <= k <= n <= 255");
  }
  std::vector<KeyShare> shares(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    shares[i].index = static_cast<std::uint8_t>(i + 1);
    shares[i].threshold = static_cast<std::uint8_t>(k);
    shares[i].payload.resize(key.bytes.size());
  }
  std::vector<std::uint8_t> coeffs(static_cast<std::size_t>(k));
  for (std::size_t byte = 0; byte < key.bytes.size(); ++byte) {
    coeffs[0] = key.bytes[byte];
    for (int c = 1; c < k; ++c) coeffs[c] = static_cast<std::uint8_t>(rng.next_u64());
    for (auto& share : shares) {
      // Horner evaluation at x = index.
      std::uint8_t y = 0;
      for (int c = k - 1; c >= 0; --c) y = gf256::mul(y, share.index) ^ coeffs[c];
      share.payload[byte] = y;
    }
  }
  return shares;
}

inline ElectionPrivateKey combine_shares(std::span<const KeyShare> shares) {
  if (shares.empty()) throw Error(ErrorCode::insufficient_shares, "no shares presented");
  const auto k = shares.front().threshold;
  const auto len = shares.front().payload.size();
  std::set<std::uint8_t> seen;
  for (const auto& s : shares) {
    if (s.index == 0) throw Error(ErrorCode::validation, "share index 0 is not a valid point");
    if (!seen.insert(s.index).second) {
      throw Error(ErrorCode::duplicate_share,
                  "share " + std::to_string(s.index) + " presented twice");
    }
    if (s.threshold != k || s.payload.size() != len) {
      throw Error(ErrorCode::validation, "shares come from different splittings");
    }
  }
  if (shares.size() < k) {
    throw Error(ErrorCode::insufficient_shares, std::to_string(shares.size()) + " of " +
                                                    std::to_string(k) + " required shares");
  }
  // Lagrange interpolation at x = 0 over the first k shares.
  const auto used = shares.first(k);
  ElectionPrivateKey key;
  key.bytes.assign(len, 0);
  for (std::size_t i = 0; i < used.size(); ++i) {
    std::uint8_t num = 1;
    std::uint8_t den = 1;
    for (std::size_t j = 0; j < used.size(); ++j) {
      if (i == j) continue;
      num = gf256::mul(num, used[j].index);
      den = gf256::mul(den, used[i].index ^ used[j].index);
    }
    const auto basis = gf256::mul(num, gf256::inv(den));
    for (std::size_t b = 0; b < len; ++b) key.bytes[b] ^= gf256::mul(used[i].payload[b], basis);
  }
  return key;
}

}  // namespace ivote
