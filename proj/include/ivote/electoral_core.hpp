#pragma once

// Election configuration: districts, parties, candidates, voters and the
// register lookups the servers perform. Configurations are immutable once an
// election starts; Register is a read-only indexed view over one.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ivote/types.hpp"

namespace ivote {

enum class ElectionType { riigikogu, european_parliament, municipal };

inline const char* to_string(ElectionType t) {
  switch (t) {
    case ElectionType::riigikogu: return "riigikogu";
    case ElectionType::european_parliament: return "ep";
    case ElectionType::municipal: return "municipal";
  }
  return "unknown";
}

inline std::optional<ElectionType> parse_election_type(const std::string& s) {
  if (s == "riigikogu") return ElectionType::riigikogu;
  if (s == "ep" || s == "european_parliament") return ElectionType::european_parliament;
  if (s == "municipal") return ElectionType::municipal;
  return std::nullopt;
}

inline constexpr int kEuropeanParliamentSeats = 6;

struct District {
  DistrictId id;
  std::string name;
  int seats = 1;
};

struct Party {
  PartyId id;
  std::string name;
  std::vector<CandidateId> national_list;  // ordered, most preferred first
  bool synthesized = false;                // singleton list for an independent
};

struct Candidate {
  CandidateId id;
  std::string name;
  std::optional<PartyId> party;
  DistrictId district;
};

struct Voter {
  VoterId id;
  DistrictId district;
};

struct ElectionConfig {
  ElectionType type = ElectionType::riigikogu;
  std::vector<District> districts;
  std::vector<Party> parties;
  std::vector<Candidate> candidates;
  std::vector<Voter> voters;
  Fraction threshold{5, 100};

  [[nodiscard]] int total_seats() const {
    int total = 0;
    for (const auto& d : districts) total += d.seats;
    return total;
  }
};

// Largest candidate id that still fits the 16-digit ballot encoding.
inline constexpr std::uint64_t kMaxCandidateId = 9'999'999'999'999'999ULL;

using ValidationReport = std::vector<std::string>;

inline ValidationReport validate_config(const ElectionConfig& cfg) {
  ValidationReport report;
  auto add = [&](const std::string& msg) { report.push_back(msg); };

  std::set<DistrictId> districts;
  for (const auto& d : cfg.districts) {
    if (!districts.insert(d.id).second) {
      add("duplicate district id " + std::to_string(d.id.value));
    }
    if (d.seats < 1) {
      add("district " + std::to_string(d.id.value) + " has fewer than 1 seat");
    }
  }

  std::set<PartyId> parties;
  for (const auto& p : cfg.parties) {
    if (!parties.insert(p.id).second) add("duplicate party id " + std::to_string(p.id.value));
  }

  std::map<CandidateId, const Candidate*> candidates;
  for (const auto& c : cfg.candidates) {
    const auto cid = std::to_string(c.id.value);
    if (!candidates.emplace(c.id, &c).second) add("duplicate candidate id " + cid);
    if (c.id.value > kMaxCandidateId) add("candidate " + cid + " id exceeds 16 digits");
    if (!districts.contains(c.district)) {
      add("candidate " + cid + " stands in nonexistent district " +
          std::to_string(c.district.value));
    }
    if (c.party && !parties.contains(*c.party)) {
      add("candidate " + cid + " belongs to nonexistent party " + std::to_string(c.party->value));
    }
  }

  for (const auto& p : cfg.parties) {
    std::set<CandidateId> seen;
    const auto pid = std::to_string(p.id.value);
    for (const auto& cid : p.national_list) {
      if (!seen.insert(cid).second) {
        add("party " + pid + " lists candidate " + std::to_string(cid.value) + " twice");
      }
      auto it = candidates.find(cid);
      if (it == candidates.end()) {
        add("party " + pid + " lists unregistered candidate " + std::to_string(cid.value));
      } else if (it->second->party != p.id) {
        add("party " + pid + " lists candidate " + std::to_string(cid.value) +
            " of another party");
      }
    }
  }

  std::set<VoterId> voters;
  for (const auto& v : cfg.voters) {
    if (!voters.insert(v.id).second) add("duplicate voter id " + v.id.value);
    if (!districts.contains(v.district)) {
      add("voter " + v.id.value + " registered in nonexistent district " +
          std::to_string(v.district.value));
    }
  }

  if (cfg.type == ElectionType::riigikogu && cfg.districts.empty()) {
    add("riigikogu election needs at least one district");
  }
  if (cfg.type == ElectionType::european_parliament) {
    if (cfg.districts.size() != 1) {
      add("EP must be single national district");
    } else if (cfg.districts.front().seats != kEuropeanParliamentSeats) {
      add("EP district must have 6 seats");
    }
  }
  if (cfg.type == ElectionType::municipal && cfg.districts.empty()) {
    add("municipal election needs at least one district");
  }
  if (cfg.threshold.den <= 0 || cfg.threshold.num < 0 || cfg.threshold.num >= cfg.threshold.den) {
    add("threshold fraction " + to_string(cfg.threshold) + " outside [0,1)");
  }

  std::sort(report.begin(), report.end());
  return report;
}

// EP independents compete as single-candidate lists. Returns a copy in which
// every party-less candidate owns a synthesized party whose id follows the
// largest declared party id, in ascending candidate-id order.
inline ElectionConfig synthesize_independent_parties(ElectionConfig cfg) {
  if (cfg.type != ElectionType::european_parliament) return cfg;
  std::int64_t next = 0;
  for (const auto& p : cfg.parties) next = std::max(next, p.id.value);
  std::vector<Candidate*> independents;
  for (auto& c : cfg.candidates) {
    if (!c.party) independents.push_back(&c);
  }
  std::sort(independents.begin(), independents.end(),
            [](const Candidate* a, const Candidate* b) { return a->id < b->id; });
  for (auto* c : independents) {
    PartyId pid{++next};
    c->party = pid;
    cfg.parties.push_back(Party{pid, c->name, {c->id}, true});
  }
  return cfg;
}

// Indexed, read-only view used by the servers for register lookups.
class Register {
 public:
  explicit Register(const ElectionConfig& cfg) : cfg_(&cfg) {
    for (const auto& d : cfg.districts) districts_.emplace(d.id, &d);
    for (const auto& p : cfg.parties) parties_.emplace(p.id, &p);
    for (const auto& c : cfg.candidates) {
      candidates_.emplace(c.id, &c);
      by_district_[c.district].push_back(&c);
    }
    for (auto& [_, list] : by_district_) {
      std::sort(list.begin(), list.end(),
                [](const Candidate* a, const Candidate* b) { return a->id < b->id; });
    }
    for (const auto& v : cfg.voters) voters_.emplace(v.id, &v);
  }

  [[nodiscard]] const ElectionConfig& config() const { return *cfg_; }

  [[nodiscard]] const Voter* find_voter(const VoterId& id) const { return lookup(voters_, id); }
  [[nodiscard]] const Candidate* find_candidate(CandidateId id) const {
    return lookup(candidates_, id);
  }
  [[nodiscard]] const Party* find_party(PartyId id) const { return lookup(parties_, id); }
  [[nodiscard]] const District* find_district(DistrictId id) const {
    return lookup(districts_, id);
  }

  [[nodiscard]] const Voter& voter(const VoterId& id) const {
    const auto* v = find_voter(id);
    if (!v) throw Error(ErrorCode::ineligible_voter, "voter " + id.value + " not in register");
    return *v;
  }

  // Candidates standing in a district, ascending candidate id.
  [[nodiscard]] std::vector<const Candidate*> candidates_in(DistrictId district) const {
    auto it = by_district_.find(district);
    return it == by_district_.end() ? std::vector<const Candidate*>{} : it->second;
  }

  [[nodiscard]] bool stands_in(CandidateId candidate, DistrictId district) const {
    const auto* c = find_candidate(candidate);
    return c && c->district == district;
  }

 private:
  template <typename Map, typename Key>
  static auto lookup(const Map& m, const Key& k) -> typename Map::mapped_type {
    auto it = m.find(k);
    return it == m.end() ? nullptr : it->second;
  }

  const ElectionConfig* cfg_;
  std::map<DistrictId, const District*> districts_;
  std::map<PartyId, const Party*> parties_;
  std::map<CandidateId, const Candidate*> candidates_;
  std::map<DistrictId, std::vector<const Candidate*>> by_district_;
  std::map<VoterId, const Voter*> voters_;
};

inline std::vector<Candidate> district_candidate_list(const Register& reg, const VoterId& voter) {
  std::vector<Candidate> out;
  for (const auto* c : reg.candidates_in(reg.voter(voter).district)) out.push_back(*c);
  return out;
}

inline std::vector<Candidate> district_candidate_list(const ElectionConfig& cfg,
                                                      const VoterId& voter) {
  return district_candidate_list(Register(cfg), voter);
}

// Riigikogu electoral districts of 2011.
inline std::vector<District> riigikogu_2011_districts() {
  return {
      {DistrictId{1}, "Tallinn (Haabersti, Pohja-Tallinn and Kristiine)", 9},
      {DistrictId{2}, "Tallinn (Kesklinn, Lasnamae and Pirita)", 11},
      {DistrictId{3}, "Tallinn (Mustamae and Nomme)", 8},
      {DistrictId{4}, "Harjumaa (excluding Tallinn) and Raplamaa", 14},
      {DistrictId{5}, "Hiiumaa, Laanemaa and Saaremaa", 6},
      {DistrictId{6}, "Laane-Virumaa", 5},
      {DistrictId{7}, "Ida-Virumaa", 8},
      {DistrictId{8}, "Jarvamaa and Viljandimaa", 8},
      {DistrictId{9}, "Jogevamaa and Tartumaa (excluding Tartu)", 7},
      {DistrictId{10}, "Tartu", 8},
      {DistrictId{11}, "Vorumaa, Valgamaa and Polvamaa", 9},
      {DistrictId{12}, "Parnumaa", 8},
  };
}

}  // namespace ivote
