#pragma once

// Vote precedence resolution and seat allocation for Riigikogu, European
// Parliament and municipal elections.
//
// Riigikogu: round 1 elects every candidate at or above the district simple
// quota (votes cast / seats); round 2 gives each party floor(party votes /
// quota) minus its round-1 winners, filled by personal votes; round 3
// distributes the rest nationally by highest quotient votes / (1+n)^0.9 using
// the parties' ordered national lists. Parties under the threshold share of
// votes are excluded from rounds 2 and 3. EP and municipal allocations reuse
// the same pieces with divisor 1+n.
//
// Ties (no statutory rule available): parties by larger total votes, then lower
// party id; candidates by earlier list position, then lower candidate id.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ivote/audit_logs.hpp"
#include "ivote/electoral_core.hpp"
#include "ivote/types.hpp"

namespace ivote {

// ---- vote precedence ---------------------------------------------------------

enum class VoteChannel { internet, advance_outside, advance_inside, polling_day, home };

inline const char* to_string(VoteChannel c) {
  switch (c) {
    case VoteChannel::internet: return "internet";
    case VoteChannel::advance_outside: return "advance_outside";
    case VoteChannel::advance_inside: return "advance_inside";
    case VoteChannel::polling_day: return "polling_day";
    case VoteChannel::home: return "home";
  }
  return "unknown";
}

inline std::optional<VoteChannel> parse_vote_channel(const std::string& s) {
  if (s == "internet") return VoteChannel::internet;
  if (s == "advance_outside") return VoteChannel::advance_outside;
  if (s == "advance_inside") return VoteChannel::advance_inside;
  if (s == "polling_day") return VoteChannel::polling_day;
  if (s == "home") return VoteChannel::home;
  return std::nullopt;
}

inline bool is_advance(VoteChannel c) {
  return c == VoteChannel::advance_outside || c == VoteChannel::advance_inside;
}

inline bool is_election_day(VoteChannel c) {
  return c == VoteChannel::polling_day || c == VoteChannel::home;
}

struct VoteEvent {
  VoterId voter;
  VoteChannel channel = VoteChannel::internet;
  CandidateId candidate;
  SimTime timestamp = 0;

  friend bool operator==(const VoteEvent&, const VoteEvent&) = default;
};

// strict: a polling station refuses anyone who voted by internet or in
// advance. admit: the roll failed to mark an e-voter, the station admitted
// them, and the list comparison after the period cancels their e-vote.
enum class PollingRollMode { strict, admit };

struct Cancellation {
  VoterId voter;
  RevocationReason reason = RevocationReason::advance_paper;
  SimTime at = 0;

  friend bool operator==(const Cancellation&, const Cancellation&) = default;
};

struct RejectedVote {
  VoteEvent event;
  std::string reason;
};

struct EffectiveVotes {
  std::map<VoterId, VoteEvent> effective;
  std::vector<Cancellation> cancellations;  // e-votes the VSS must drop
  std::vector<RejectedVote> rejected;
};

// Internet events passed here must be ones the storage server accepted.
inline EffectiveVotes resolve_effective_votes(std::vector<VoteEvent> events,
                                              PollingRollMode mode = PollingRollMode::strict) {
  std::stable_sort(events.begin(), events.end(), [](const VoteEvent& a, const VoteEvent& b) {
    if (a.voter != b.voter) return a.voter < b.voter;
    return a.timestamp < b.timestamp;
  });

  EffectiveVotes out;
  auto begin = events.begin();
  while (begin != events.end()) {
    auto end = std::find_if(begin, events.end(),
                            [&](const VoteEvent& e) { return e.voter != begin->voter; });
    std::optional<VoteEvent> internet;
    std::optional<VoteEvent> advance;
    std::optional<VoteEvent> day;
    for (auto it = begin; it != end; ++it) {
      const auto& e = *it;
      if (e.channel == VoteChannel::internet) {
        internet = e;  // revote: latest wins
      } else if (is_advance(e.channel)) {
        if (day) {
          out.rejected.push_back({e, "voter already voted on election day"});
        } else if (advance && advance->channel == VoteChannel::advance_inside &&
                   e.channel == VoteChannel::advance_outside) {
          out.rejected.push_back({e, "outside-district vote cannot cancel inside-district vote"});
        } else {
          advance = e;
        }
      } else {
        if (day) {
          out.rejected.push_back({e, "voter already voted on election day"});
        } else if (advance) {
          out.rejected.push_back({e, "polling station refuses advance voter"});
        } else if (internet && mode == PollingRollMode::strict) {
          out.rejected.push_back({e, "polling station refuses internet voter"});
        } else {
          day = e;
        }
      }
    }
    const auto& chosen = day ? day : advance ? advance : internet;
    if (chosen) {
      out.effective.emplace(chosen->voter, *chosen);
      if (internet && chosen->channel != VoteChannel::internet) {
        out.cancellations.push_back({chosen->voter,
                                     day ? RevocationReason::polling_station
                                         : RevocationReason::advance_paper,
                                     chosen->timestamp});
      }
    }
    begin = end;
  }
  return out;
}

// ---- allocation types -------------------------------------------------------

using CandidateTallies = std::map<CandidateId, std::uint64_t>;

// Exact simple quota: votes_cast / seats, never rounded.
struct Quota {
  std::uint64_t votes_cast = 0;
  std::uint64_t seats = 1;

  // votes >= quota, by cross-multiplication
  [[nodiscard]] bool reached_by(std::uint64_t votes) const {
    return static_cast<unsigned __int128>(votes) * seats >=
           static_cast<unsigned __int128>(votes_cast);
  }

  // floor(votes / quota); zero when nothing was cast
  [[nodiscard]] std::uint64_t whole_quotas(std::uint64_t votes) const {
    if (votes_cast == 0) return 0;
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(votes) * seats / votes_cast);
  }

  [[nodiscard]] std::string str() const {
    return std::to_string(votes_cast) + "/" + std::to_string(seats);
  }
};

enum class DivisorExponent { linear, modified };  // 1 and 9/10

inline long double exponent_value(DivisorExponent e) {
  return e == DivisorExponent::linear ? 1.0L : 0.9L;
}

struct DHondtParams {
  DivisorExponent exponent = DivisorExponent::linear;
  Fraction threshold{5, 100};
  std::map<PartyId, int> initial_seats;
  // Denominator of the threshold test; the sum of party votes when absent.
  std::optional<std::uint64_t> votes_cast;
  int round = 3;
  std::optional<DistrictId> scope;  // empty = national
};

struct SeatAward {
  int round = 0;
  std::optional<DistrictId> district;  // empty = national
  int seat_number = 0;
  std::optional<PartyId> party;
  CandidateId candidate;
  std::string value;     // quota "votes/seats" or decimal quotient
  std::string tiebreak;  // empty when no tie was broken

  friend bool operator==(const SeatAward&, const SeatAward&) = default;
};

struct AllocationResult {
  std::vector<SeatAward> awards;
  std::map<PartyId, int> party_seats;
  int unfilled = 0;
  std::vector<std::string> notes;

  [[nodiscard]] std::vector<CandidateId> elected_in_round(int round) const {
    std::vector<CandidateId> out;
    for (const auto& a : awards) {
      if (a.round == round) out.push_back(a.candidate);
    }
    return out;
  }

  [[nodiscard]] std::set<CandidateId> elected() const {
    std::set<CandidateId> out;
    for (const auto& a : awards) out.insert(a.candidate);
    return out;
  }

  void add(SeatAward award) {
    award.seat_number = static_cast<int>(awards.size()) + 1;
    if (award.party) ++party_seats[*award.party];
    awards.push_back(std::move(award));
  }

  void merge(const AllocationResult& other) {
    for (const auto& a : other.awards) add(a);
    unfilled += other.unfilled;
    notes.insert(notes.end(), other.notes.begin(), other.notes.end());
  }

  friend bool operator==(const AllocationResult&, const AllocationResult&) = default;
};

// A candidate's position in one district's contest.
struct CandidateStanding {
  CandidateId id;
  std::optional<PartyId> party;
  std::uint64_t votes = 0;
  std::size_t list_position = std::numeric_limits<std::size_t>::max();
};

struct PartyStanding {
  PartyId id;
  std::uint64_t votes = 0;
  std::vector<CandidateId> list;  // national ordered list
};

namespace detail {

// Personal-vote ranking: votes descending, then list position, then id.
inline bool ranks_before(const CandidateStanding& a, const CandidateStanding& b) {
  if (a.votes != b.votes) return a.votes > b.votes;
  if (a.list_position != b.list_position) return a.list_position < b.list_position;
  return a.id < b.id;
}

inline std::string candidate_tie_note(const CandidateStanding& won, const CandidateStanding& lost) {
  if (won.list_position != lost.list_position) {
    return "tie on " + std::to_string(won.votes) + " votes with candidate " +
           std::to_string(lost.id.value) + ": earlier list position";
  }
  return "tie on " + std::to_string(won.votes) + " votes with candidate " +
         std::to_string(lost.id.value) + ": lower candidate id";
}

// Elects the first `count` eligible entries of an already ranked list, noting
// ties at the cut.
inline std::vector<SeatAward> take_ranked(const std::vector<CandidateStanding>& ranked,
                                          std::size_t count, int round, DistrictId district,
                                          const std::string& value) {
  std::vector<SeatAward> out;
  for (std::size_t i = 0; i < ranked.size() && out.size() < count; ++i) {
    SeatAward a{round, district, 0, ranked[i].party, ranked[i].id, value, {}};
    if (out.size() + 1 == count && i + 1 < ranked.size() &&
        ranked[i + 1].votes == ranked[i].votes) {
      a.tiebreak = candidate_tie_note(ranked[i], ranked[i + 1]);
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::string format_quotient(long double q) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(q));
  return buf;
}

}  // namespace detail

// ---- round 1 ----------------------------------------------------------------

// Elects every candidate reaching the quota, at most `seats` of them.
inline std::vector<SeatAward> simple_quota_round(std::vector<CandidateStanding> district,
                                                 int seats, DistrictId district_id,
                                                 int round = 1) {
  std::uint64_t cast = 0;
  for (const auto& c : district) cast += c.votes;
  const Quota quota{cast, static_cast<std::uint64_t>(seats)};
  std::vector<CandidateStanding> reached;
  for (const auto& c : district) {
    if (quota.reached_by(c.votes)) reached.push_back(c);
  }
  std::sort(reached.begin(), reached.end(), detail::ranks_before);
  return detail::take_ranked(reached, static_cast<std::size_t>(std::max(seats, 0)), round,
                             district_id, quota.str());
}

// ---- round 2 ----------------------------------------------------------------

inline std::vector<SeatAward> round2_district(const std::vector<CandidateStanding>& district,
                                              int seats_remaining, const Quota& quota,
                                              const std::set<CandidateId>& round1_elected,
                                              const Fraction& threshold, DistrictId district_id,
                                              int round = 2) {
  std::vector<SeatAward> out;
  if (seats_remaining <= 0 || quota.votes_cast == 0) return out;

  struct PartyTotal {
    std::uint64_t votes = 0;
    std::uint64_t round1 = 0;
    std::vector<CandidateStanding> members;
  };
  std::map<PartyId, PartyTotal> totals;
  for (const auto& c : district) {
    if (!c.party) continue;
    auto& t = totals[*c.party];
    t.votes += c.votes;
    t.members.push_back(c);
    if (round1_elected.contains(c.id)) ++t.round1;
  }

  // Larger parties first when entitlements exceed the remaining seats.
  std::vector<std::pair<PartyId, PartyTotal*>> order;
  for (auto& [pid, t] : totals) order.emplace_back(pid, &t);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second->votes > b.second->votes;
  });

  for (auto& [pid, t] : order) {
    if (static_cast<int>(out.size()) >= seats_remaining) break;
    if (threshold.exceeds_share(t->votes, quota.votes_cast)) continue;
    const auto whole = quota.whole_quotas(t->votes);
    if (whole <= t->round1) continue;
    auto entitled = static_cast<std::size_t>(whole - t->round1);
    entitled = std::min(entitled, static_cast<std::size_t>(seats_remaining) - out.size());

    std::vector<CandidateStanding> pool;
    for (const auto& c : t->members) {
      if (!round1_elected.contains(c.id)) pool.push_back(c);
    }
    std::sort(pool.begin(), pool.end(), detail::ranks_before);
    const auto value = std::to_string(t->votes) + "/(" + quota.str() + ")";
    for (auto& a : detail::take_ranked(pool, entitled, round, district_id, value)) {
      out.push_back(std::move(a));
    }
  }
  return out;
}

// ---- d'Hondt ----------------------------------------------------------------

// Awards `seats` one at a time to the party with the highest
// votes / (1 + n)^exponent, where n counts seats won so far. Parties below the
// threshold, without votes, or whose lists are exhausted never win a seat.
inline AllocationResult dhondt_allocate(const std::vector<PartyStanding>& parties, int seats,
                                        const DHondtParams& params,
                                        const std::set<CandidateId>& already_elected) {
  AllocationResult result;
  if (seats <= 0) return result;

  std::uint64_t cast = 0;
  for (const auto& p : parties) cast += p.votes;
  if (params.votes_cast) cast = *params.votes_cast;

  struct State {
    const PartyStanding* party;
    int seats;
    std::size_t next;  // cursor into the national list
  };
  std::vector<State> states;
  for (const auto& p : parties) {
    if (p.votes == 0 || params.threshold.exceeds_share(p.votes, cast)) continue;
    auto it = params.initial_seats.find(p.id);
    states.push_back({&p, it == params.initial_seats.end() ? 0 : it->second, 0});
  }

  std::set<CandidateId> elected = already_elected;
  auto next_candidate = [&](State& s) -> std::optional<CandidateId> {
    while (s.next < s.party->list.size() && elected.contains(s.party->list[s.next])) ++s.next;
    if (s.next == s.party->list.size()) return std::nullopt;
    return s.party->list[s.next];
  };

  const long double exponent = exponent_value(params.exponent);
  auto quotient = [&](const State& s) {
    return static_cast<long double>(s.party->votes) /
           std::pow(static_cast<long double>(1 + s.seats), exponent);
  };
  // +1: a beats b, -1: b beats a, 0: tie
  auto compare = [&](const State& a, const State& b) -> int {
    if (params.exponent == DivisorExponent::linear) {
      const auto lhs = static_cast<unsigned __int128>(a.party->votes) * (1 + b.seats);
      const auto rhs = static_cast<unsigned __int128>(b.party->votes) * (1 + a.seats);
      return lhs > rhs ? 1 : lhs < rhs ? -1 : 0;
    }
    const auto qa = quotient(a);
    const auto qb = quotient(b);
    if (std::fabs(qa - qb) <= 1e-12L * std::max(qa, qb)) return 0;
    return qa > qb ? 1 : -1;
  };

  for (int seat = 0; seat < seats; ++seat) {
    State* best = nullptr;
    std::string tie;
    for (auto& s : states) {
      if (!next_candidate(s)) continue;
      if (!best) {
        best = &s;
        continue;
      }
      const int c = compare(s, *best);
      if (c > 0) {
        best = &s;
        tie.clear();
      } else if (c == 0) {
        State* winner = best;
        State* loser = &s;
        std::string why = "larger total votes";
        if (s.party->votes > best->party->votes) {
          std::swap(winner, loser);
        } else if (s.party->votes == best->party->votes) {
          why = "lower party id";
          if (s.party->id < best->party->id) std::swap(winner, loser);
        }
        best = winner;
        tie = "quotient tie with party " + std::to_string(loser->party->id.value) + ": " + why;
      }
    }
    if (!best) {
      result.unfilled = seats - seat;
      result.notes.push_back(std::to_string(result.unfilled) +
                             " seat(s) unfilled: every eligible party list is exhausted");
      break;
    }
    const auto candidate = *next_candidate(*best);
    result.add(SeatAward{params.round, params.scope, 0, best->party->id, candidate,
                         detail::format_quotient(quotient(*best)), tie});
    elected.insert(candidate);
    ++best->seats;
  }
  return result;
}

// ---- composed allocations ---------------------------------------------------

namespace detail {

inline std::map<CandidateId, std::size_t> list_positions(const ElectionConfig& cfg) {
  std::map<CandidateId, std::size_t> pos;
  for (const auto& p : cfg.parties) {
    for (std::size_t i = 0; i < p.national_list.size(); ++i) pos[p.national_list[i]] = i;
  }
  return pos;
}

inline std::vector<CandidateStanding> standings_in(const ElectionConfig& cfg, DistrictId district,
                                                   const CandidateTallies& tallies,
                                                   const std::map<CandidateId, std::size_t>& pos) {
  std::vector<CandidateStanding> out;
  for (const auto& c : cfg.candidates) {
    if (c.district != district) continue;
    CandidateStanding s{c.id, c.party, 0, std::numeric_limits<std::size_t>::max()};
    if (auto it = tallies.find(c.id); it != tallies.end()) s.votes = it->second;
    if (auto it = pos.find(c.id); it != pos.end()) s.list_position = it->second;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(),
            [](const CandidateStanding& a, const CandidateStanding& b) { return a.id < b.id; });
  return out;
}

inline std::vector<PartyStanding> party_standings(const ElectionConfig& cfg,
                                                  const CandidateTallies& tallies) {
  std::map<PartyId, std::uint64_t> votes;
  for (const auto& c : cfg.candidates) {
    if (!c.party) continue;
    if (auto it = tallies.find(c.id); it != tallies.end()) votes[*c.party] += it->second;
  }
  std::vector<PartyStanding> out;
  for (const auto& p : cfg.parties) out.push_back({p.id, votes[p.id], p.national_list});
  std::sort(out.begin(), out.end(),
            [](const PartyStanding& a, const PartyStanding& b) { return a.id < b.id; });
  return out;
}

inline std::uint64_t total_votes(const ElectionConfig& cfg, const CandidateTallies& tallies) {
  std::uint64_t total = 0;
  for (const auto& c : cfg.candidates) {
    if (auto it = tallies.find(c.id); it != tallies.end()) total += it->second;
  }
  return total;
}

// Rounds 1 and 2 in every district, ascending district id.
inline AllocationResult district_rounds(const ElectionConfig& cfg,
                                        const CandidateTallies& tallies) {
  AllocationResult result;
  const auto pos = list_positions(cfg);
  auto districts = cfg.districts;
  std::sort(districts.begin(), districts.end(),
            [](const District& a, const District& b) { return a.id < b.id; });
  for (const auto& d : districts) {
    const auto standings = standings_in(cfg, d.id, tallies, pos);
    const auto r1 = simple_quota_round(standings, d.seats, d.id, 1);
    std::set<CandidateId> r1_elected;
    for (const auto& a : r1) {
      r1_elected.insert(a.candidate);
      result.add(a);
    }
    std::uint64_t cast = 0;
    for (const auto& s : standings) cast += s.votes;
    const Quota quota{cast, static_cast<std::uint64_t>(d.seats)};
    for (const auto& a : round2_district(standings, d.seats - static_cast<int>(r1.size()), quota,
                                         r1_elected, cfg.threshold, d.id, 2)) {
      result.add(a);
    }
  }
  return result;
}

inline AllocationResult finish_with_dhondt(const ElectionConfig& cfg,
                                           const CandidateTallies& tallies,
                                           AllocationResult so_far, DivisorExponent exponent,
                                           int round) {
  const int remaining = cfg.total_seats() - static_cast<int>(so_far.awards.size());
  if (remaining <= 0) return so_far;
  DHondtParams params;
  params.exponent = exponent;
  params.threshold = cfg.threshold;
  params.initial_seats = so_far.party_seats;
  params.votes_cast = total_votes(cfg, tallies);
  params.round = round;
  so_far.merge(dhondt_allocate(party_standings(cfg, tallies), remaining, params, so_far.elected()));
  return so_far;
}

}  // namespace detail

inline AllocationResult allocate_riigikogu(const ElectionConfig& cfg,
                                           const CandidateTallies& tallies) {
  return detail::finish_with_dhondt(cfg, tallies, detail::district_rounds(cfg, tallies),
                                    DivisorExponent::modified, 3);
}

inline AllocationResult allocate_ep(const ElectionConfig& cfg, const CandidateTallies& tallies) {
  const auto full = synthesize_independent_parties(cfg);
  DHondtParams params;
  params.exponent = DivisorExponent::linear;
  params.threshold = full.threshold;
  params.votes_cast = detail::total_votes(full, tallies);
  params.round = 1;
  return dhondt_allocate(detail::party_standings(full, tallies), full.total_seats(), params, {});
}

inline AllocationResult allocate_municipal(const ElectionConfig& cfg,
                                           const CandidateTallies& tallies) {
  if (cfg.districts.size() == 1) {
    const auto& d = cfg.districts.front();
    AllocationResult r1;
    const auto standings = detail::standings_in(cfg, d.id, tallies, detail::list_positions(cfg));
    for (const auto& a : simple_quota_round(standings, d.seats, d.id, 1)) r1.add(a);
    return detail::finish_with_dhondt(cfg, tallies, std::move(r1), DivisorExponent::linear, 2);
  }
  return detail::finish_with_dhondt(cfg, tallies, detail::district_rounds(cfg, tallies),
                                    DivisorExponent::linear, 3);
}

inline AllocationResult allocate(const ElectionConfig& cfg, const CandidateTallies& tallies) {
  switch (cfg.type) {
    case ElectionType::riigikogu: return allocate_riigikogu(cfg, tallies);
    case ElectionType::european_parliament: return allocate_ep(cfg, tallies);
    case ElectionType::municipal: return allocate_municipal(cfg, tallies);
  }
  return {};
}

// One line per seat:
// <round>\t<district|NATIONAL>\t<seat#>\t<party>\t<candidate>\t<quotient|quota>\t<tiebreak|->
inline std::string render_allocation(const AllocationResult& result, const ElectionConfig& cfg) {
  const auto full = synthesize_independent_parties(cfg);
  const Register reg(full);
  std::ostringstream os;
  for (const auto& a : result.awards) {
    os << a.round << '\t'
       << (a.district ? std::to_string(a.district->value) : std::string("NATIONAL")) << '\t'
       << a.seat_number << '\t';
    const Party* p = a.party ? reg.find_party(*a.party) : nullptr;
    os << (p ? p->name : std::string("-")) << '\t';
    const Candidate* c = reg.find_candidate(a.candidate);
    os << a.candidate.value;
    if (c) os << ' ' << c->name;
    os << '\t' << a.value << '\t' << (a.tiebreak.empty() ? "-" : a.tiebreak) << '\n';
  }
  if (result.unfilled > 0) os << "UNFILLED\t" << result.unfilled << '\n';
  return os.str();
}

// "A=3,B=2,C=1": seats per party, descending seats then ascending party id.
inline std::string render_seat_summary(const AllocationResult& result, const ElectionConfig& cfg) {
  const auto full = synthesize_independent_parties(cfg);
  const Register reg(full);
  std::vector<std::pair<PartyId, int>> rows(result.party_seats.begin(), result.party_seats.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  int independents = 0;
  for (const auto& a : result.awards) {
    if (!a.party) ++independents;
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& [pid, n] : rows) {
    const Party* p = reg.find_party(pid);
    os << (first ? "" : ",") << (p ? p->name : std::to_string(pid.value)) << '=' << n;
    first = false;
  }
  if (independents > 0) os << (first ? "" : ",") << "independent=" << independents;
  return os.str();
}

}  // namespace ivote
