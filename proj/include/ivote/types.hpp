#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace ivote {

// Strongly typed identifier. Tag only distinguishes the type.
template <typename Tag, typename T>
struct StrongId {
  T value{};

  constexpr StrongId() = default;
  constexpr explicit StrongId(T v) : value(std::move(v)) {}

  friend auto operator<=>(const StrongId&, const StrongId&) = default;
  friend std::ostream& operator<<(std::ostream& os, const StrongId& id) {
    return os << id.value;
  }
};

using DistrictId = StrongId<struct DistrictTag, std::int64_t>;
using PartyId = StrongId<struct PartyTag, std::int64_t>;
using CandidateId = StrongId<struct CandidateTag, std::uint64_t>;
using VoterId = StrongId<struct VoterTag, std::string>;

// Simulated time in seconds from scenario start.
using SimTime = std::int64_t;

inline constexpr SimTime kVerificationWindow = 1800;
inline constexpr int kVerificationAttempts = 3;
inline constexpr int kPinAttempts = 3;

// Exact non-negative rational, used for thresholds.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  friend constexpr bool operator==(const Fraction& a, const Fraction& b) {
    return a.num * b.den == b.num * a.den;
  }

  // part / whole < this
  [[nodiscard]] constexpr bool exceeds_share(std::uint64_t part, std::uint64_t whole) const {
    return static_cast<unsigned __int128>(part) * static_cast<unsigned __int128>(den) <
           static_cast<unsigned __int128>(whole) * static_cast<unsigned __int128>(num);
  }
};

inline std::string to_string(const Fraction& f) {
  return std::to_string(f.num) + "/" + std::to_string(f.den);
}

enum class ErrorCode {
  ineligible_voter,
  authentication_failed,
  pin_locked,
  invalid_choice,
  encoding,
  decryption,
  invalid_signature,
  certificate_revoked,
  certificate_expired,
  certificate_unknown,
  insufficient_shares,
  duplicate_share,
  key_mismatch,
  window_expired,
  attempts_exhausted,
  unknown_session,
  vote_absent,
  integrity_alarm,
  sequencing,
  schema,
  air_gap,
  parse,
  reference,
  validation,
  io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ineligible_voter: return "ineligible_voter";
    case ErrorCode::authentication_failed: return "authentication_failed";
    case ErrorCode::pin_locked: return "pin_locked";
    case ErrorCode::invalid_choice: return "invalid_choice";
    case ErrorCode::encoding: return "encoding";
    case ErrorCode::decryption: return "decryption";
    case ErrorCode::invalid_signature: return "invalid_signature";
    case ErrorCode::certificate_revoked: return "certificate_revoked";
    case ErrorCode::certificate_expired: return "certificate_expired";
    case ErrorCode::certificate_unknown: return "certificate_unknown";
    case ErrorCode::insufficient_shares: return "insufficient_shares";
    case ErrorCode::duplicate_share: return "duplicate_share";
    case ErrorCode::key_mismatch: return "key_mismatch";
    case ErrorCode::window_expired: return "window_expired";
    case ErrorCode::attempts_exhausted: return "attempts_exhausted";
    case ErrorCode::unknown_session: return "unknown_session";
    case ErrorCode::vote_absent: return "vote_absent";
    case ErrorCode::integrity_alarm: return "integrity_alarm";
    case ErrorCode::sequencing: return "sequencing";
    case ErrorCode::schema: return "schema";
    case ErrorCode::air_gap: return "air_gap";
    case ErrorCode::parse: return "parse";
    case ErrorCode::reference: return "reference";
    case ErrorCode::validation: return "validation";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ivote

template <typename Tag, typename T>
struct std::hash<ivote::StrongId<Tag, T>> {
  std::size_t operator()(const ivote::StrongId<Tag, T>& id) const noexcept {
    return std::hash<T>{}(id.value);
  }
};
