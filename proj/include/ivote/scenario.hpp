#pragma once

// Scenario files: line-oriented text with section headers, tab-separated
// fields and '#' comments.
//
//   [election]    type | threshold n/d | period start end | seed | shares n k
//                 | present i,j,... | polling_roll strict|admit
//                 | cert_validity from until
//   [districts]   id  name  seats
//   [parties]     id  name  candidate,candidate,...   (ordered national list)
//   [candidates]  id  name  party|-  district
//   [voters]      id  district  [cert_from  cert_until]
//   [events]      time  voter  internet|advance_outside|advance_inside|
//                              polling_day|home  candidate  [pin1=TF..] [pin2=..]
//                 time  voter  verify  [cast#]
//                 time  voter  revoke
//   [attacks]     kind  voter  time  [candidate]
//   [network]     from  to
//   [tallies]     candidate  votes         (allocation input only)

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ivote/electoral_core.hpp"
#include "ivote/network.hpp"
#include "ivote/tally_alloc.hpp"
#include "ivote/types.hpp"

namespace ivote {

enum class EventKind { vote, verify, revoke };

struct ScenarioEvent {
  SimTime time = 0;
  std::uint64_t sequence = 0;
  VoterId voter;
  EventKind kind = EventKind::vote;
  VoteChannel channel = VoteChannel::internet;
  CandidateId candidate;
  std::vector<bool> pin1{true};
  std::vector<bool> pin2{true};
  std::optional<std::size_t> cast_index;  // verify: 1-based internet cast, default latest
};

enum class AttackKind {
  malicious_client_invalid_candidate,
  vss_delete_ballot,
  vss_delete_ballot_and_log,
  vss_substitute_ciphertext_on_verify,
  log_rewrite_coherent,
};

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::malicious_client_invalid_candidate: return "malicious_client_invalid_candidate";
    case AttackKind::vss_delete_ballot: return "vss_delete_ballot";
    case AttackKind::vss_delete_ballot_and_log: return "vss_delete_ballot_and_log";
    case AttackKind::vss_substitute_ciphertext_on_verify: return "vss_substitute_ciphertext_on_verify";
    case AttackKind::log_rewrite_coherent: return "log_rewrite_coherent";
  }
  return "unknown";
}

inline std::optional<AttackKind> parse_attack_kind(const std::string& s) {
  for (auto k : {AttackKind::malicious_client_invalid_candidate, AttackKind::vss_delete_ballot,
                 AttackKind::vss_delete_ballot_and_log,
                 AttackKind::vss_substitute_ciphertext_on_verify,
                 AttackKind::log_rewrite_coherent}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct AttackInjection {
  AttackKind kind = AttackKind::vss_delete_ballot;
  VoterId target;
  SimTime at = 0;
  std::optional<CandidateId> candidate;
  std::uint64_t sequence = 0;
};

struct CertificateWindow {
  SimTime from = 0;
  SimTime until = 0;
};

struct Scenario {
  ElectionConfig config;
  SimTime period_start = 0;
  SimTime period_end = 7 * 24 * 3600;
  std::uint64_t seed = 1;
  int shares_n = 1;
  int shares_k = 1;
  std::vector<int> present;  // share indices handed to the counting application
  PollingRollMode polling_roll = PollingRollMode::strict;
  std::optional<CertificateWindow> cert_validity;  // default: covers the period
  std::map<VoterId, CertificateWindow> voter_cert_validity;
  std::vector<ScenarioEvent> events;
  std::vector<AttackInjection> attacks;
  std::vector<std::pair<Node, Node>> extra_edges;
  std::optional<CandidateTallies> tallies;

  [[nodiscard]] CertificateWindow cert_window_for(const VoterId& voter) const {
    if (auto it = voter_cert_validity.find(voter); it != voter_cert_validity.end()) {
      return it->second;
    }
    if (cert_validity) return *cert_validity;
    return {period_start, period_end + 1};
  }

  [[nodiscard]] std::vector<int> presented_shares() const {
    if (!present.empty()) return present;
    std::vector<int> first;
    for (int i = 1; i <= shares_k; ++i) first.push_back(i);
    return first;
  }

  // Next free ordering sequence, for scenarios assembled in code.
  [[nodiscard]] std::uint64_t next_sequence() const {
    std::uint64_t s = 0;
    for (const auto& e : events) s = std::max(s, e.sequence);
    for (const auto& a : attacks) s = std::max(s, a.sequence);
    return s + 1;
  }

  void add_event(ScenarioEvent e) {
    e.sequence = next_sequence();
    events.push_back(std::move(e));
  }

  void add_attack(AttackInjection a) {
    a.sequence = next_sequence();
    attacks.push_back(std::move(a));
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, sep);) out.push_back(f);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

class LineParser {
 public:
  LineParser(std::string source, int line, std::vector<std::string> fields)
      : source_(std::move(source)), line_(line), fields_(std::move(fields)) {}

  [[nodiscard]] std::size_t size() const { return fields_.size(); }

  [[nodiscard]] Error fail(const std::string& field, const std::string& msg) const {
    return Error(ErrorCode::parse,
                 source_ + ":" + std::to_string(line_) + ": field '" + field + "': " + msg);
  }

  void require(std::size_t min, std::size_t max, const std::string& what) const {
    if (fields_.size() < min || fields_.size() > max) {
      throw Error(ErrorCode::parse, source_ + ":" + std::to_string(line_) + ": " + what +
                                        " expects " + std::to_string(min) +
                                        (min == max ? "" : "-" + std::to_string(max)) +
                                        " tab-separated fields, got " +
                                        std::to_string(fields_.size()));
    }
  }

  [[nodiscard]] const std::string& text(std::size_t i) const { return fields_.at(i); }

  template <typename Int>
  [[nodiscard]] Int integer(std::size_t i, const std::string& name) const {
    const auto& s = fields_.at(i);
    try {
      std::size_t used = 0;
      long long v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      if constexpr (std::is_unsigned_v<Int>) {
        if (v < 0) throw fail(name, "must be non-negative");
      }
      return static_cast<Int>(v);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw fail(name, "expected an integer, got '" + s + "'");
    }
  }

  [[nodiscard]] int line() const { return line_; }

 private:
  std::string source_;
  int line_;
  std::vector<std::string> fields_;
};

inline std::vector<bool> parse_pins(const std::string& s, const LineParser& p,
                                    const std::string& name) {
  std::vector<bool> out;
  for (char c : s) {
    if (c == 'T') out.push_back(true);
    else if (c == 'F') out.push_back(false);
    else throw p.fail(name, "PIN entries are a string of T/F");
  }
  if (out.empty()) throw p.fail(name, "at least one PIN entry required");
  return out;
}

}  // namespace detail

// Parses without cross-reference validation.
inline Scenario parse_scenario(std::istream& in, const std::string& source = "<scenario>") {
  Scenario sc;
  std::string section;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    if (detail::trim(raw).empty()) continue;
    if (raw.front() == '[') {
      section = detail::trim(raw);
      static const std::set<std::string> known{"[election]", "[districts]", "[parties]",
                                               "[candidates]", "[voters]", "[events]",
                                               "[attacks]", "[network]", "[tallies]"};
      if (!known.contains(section)) {
        throw Error(ErrorCode::parse,
                    source + ":" + std::to_string(lineno) + ": unknown section " + section);
      }
      if (section == "[tallies]" && !sc.tallies) sc.tallies = CandidateTallies{};
      continue;
    }
    std::vector<std::string> fields = detail::split(raw, '\t');
    for (auto& f : fields) f = detail::trim(f);
    while (!fields.empty() && fields.back().empty()) fields.pop_back();
    detail::LineParser p(source, lineno, fields);

    if (section.empty()) {
      throw Error(ErrorCode::parse,
                  source + ":" + std::to_string(lineno) + ": content before any section header");
    } else if (section == "[election]") {
      const auto& key = p.text(0);
      if (key == "type") {
        p.require(2, 2, "type");
        auto t = parse_election_type(p.text(1));
        if (!t) throw p.fail("type", "unknown election type '" + p.text(1) + "'");
        sc.config.type = *t;
      } else if (key == "threshold") {
        p.require(2, 2, "threshold");
        auto parts = detail::split(p.text(1), '/');
        if (parts.size() != 2) throw p.fail("threshold", "expected n/d");
        detail::LineParser frac(source, lineno, parts);
        sc.config.threshold = {frac.integer<std::int64_t>(0, "threshold"),
                               frac.integer<std::int64_t>(1, "threshold")};
      } else if (key == "period") {
        p.require(3, 3, "period");
        sc.period_start = p.integer<SimTime>(1, "period start");
        sc.period_end = p.integer<SimTime>(2, "period end");
      } else if (key == "seed") {
        p.require(2, 2, "seed");
        sc.seed = p.integer<std::uint64_t>(1, "seed");
      } else if (key == "shares") {
        p.require(3, 3, "shares");
        sc.shares_n = p.integer<int>(1, "shares n");
        sc.shares_k = p.integer<int>(2, "shares k");
      } else if (key == "present") {
        p.require(2, 2, "present");
        auto parts = detail::split(p.text(1), ',');
        detail::LineParser list(source, lineno, parts);
        for (std::size_t i = 0; i < parts.size(); ++i) {
          sc.present.push_back(list.integer<int>(i, "present"));
        }
      } else if (key == "polling_roll") {
        p.require(2, 2, "polling_roll");
        if (p.text(1) == "strict") sc.polling_roll = PollingRollMode::strict;
        else if (p.text(1) == "admit") sc.polling_roll = PollingRollMode::admit;
        else throw p.fail("polling_roll", "expected strict or admit");
      } else if (key == "cert_validity") {
        p.require(3, 3, "cert_validity");
        sc.cert_validity = CertificateWindow{p.integer<SimTime>(1, "cert_validity from"),
                                             p.integer<SimTime>(2, "cert_validity until")};
      } else {
        throw p.fail("key", "unknown election setting '" + key + "'");
      }
    } else if (section == "[districts]") {
      p.require(3, 3, "district");
      sc.config.districts.push_back({DistrictId{p.integer<std::int64_t>(0, "district id")},
                                     p.text(1), p.integer<int>(2, "seats")});
    } else if (section == "[parties]") {
      p.require(2, 3, "party");
      Party party{PartyId{p.integer<std::int64_t>(0, "party id")}, p.text(1), {}, false};
      if (p.size() == 3 && p.text(2) != "-") {
        auto ids = detail::split(p.text(2), ',');
        detail::LineParser list(source, lineno, ids);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          party.national_list.push_back(CandidateId{list.integer<std::uint64_t>(i, "list")});
        }
      }
      sc.config.parties.push_back(std::move(party));
    } else if (section == "[candidates]") {
      p.require(4, 4, "candidate");
      Candidate c{CandidateId{p.integer<std::uint64_t>(0, "candidate id")}, p.text(1),
                  std::nullopt, DistrictId{p.integer<std::int64_t>(3, "district")}};
      if (p.text(2) != "-") c.party = PartyId{p.integer<std::int64_t>(2, "party")};
      sc.config.candidates.push_back(std::move(c));
    } else if (section == "[voters]") {
      if (p.size() != 2 && p.size() != 4) p.require(2, 2, "voter");
      VoterId id{p.text(0)};
      if (id.value.empty()) throw p.fail("voter id", "empty");
      sc.config.voters.push_back({id, DistrictId{p.integer<std::int64_t>(1, "district")}});
      if (p.size() == 4) {
        sc.voter_cert_validity[id] = {p.integer<SimTime>(2, "cert_from"),
                                      p.integer<SimTime>(3, "cert_until")};
      }
    } else if (section == "[events]") {
      p.require(3, 6, "event");
      ScenarioEvent e;
      e.time = p.integer<SimTime>(0, "time");
      e.sequence = static_cast<std::uint64_t>(lineno);
      e.voter = VoterId{p.text(1)};
      const auto& kind = p.text(2);
      if (kind == "verify") {
        p.require(3, 4, "verify event");
        e.kind = EventKind::verify;
        if (p.size() == 4) {
          const auto idx = p.integer<std::size_t>(3, "cast#");
          if (idx == 0) throw p.fail("cast#", "cast numbers start at 1");
          e.cast_index = idx;
        }
      } else if (kind == "revoke") {
        p.require(3, 3, "revoke event");
        e.kind = EventKind::revoke;
      } else if (auto channel = parse_vote_channel(kind)) {
        p.require(4, 6, "vote event");
        e.kind = EventKind::vote;
        e.channel = *channel;
        e.candidate = CandidateId{p.integer<std::uint64_t>(3, "candidate")};
        for (std::size_t i = 4; i < p.size(); ++i) {
          const auto& opt = p.text(i);
          if (opt.starts_with("pin1=")) e.pin1 = detail::parse_pins(opt.substr(5), p, "pin1");
          else if (opt.starts_with("pin2=")) e.pin2 = detail::parse_pins(opt.substr(5), p, "pin2");
          else throw p.fail("option", "unknown option '" + opt + "'");
        }
        if (*channel != VoteChannel::internet && p.size() > 4) {
          throw p.fail("option", "PIN entries apply to internet votes only");
        }
      } else {
        throw p.fail("kind", "unknown event kind '" + kind + "'");
      }
      sc.events.push_back(std::move(e));
    } else if (section == "[attacks]") {
      p.require(3, 4, "attack");
      auto kind = parse_attack_kind(p.text(0));
      if (!kind) throw p.fail("kind", "unknown attack '" + p.text(0) + "'");
      AttackInjection a{*kind, VoterId{p.text(1)}, p.integer<SimTime>(2, "time"), std::nullopt,
                        static_cast<std::uint64_t>(lineno)};
      if (p.size() == 4) a.candidate = CandidateId{p.integer<std::uint64_t>(3, "candidate")};
      sc.attacks.push_back(std::move(a));
    } else if (section == "[network]") {
      p.require(2, 2, "edge");
      auto from = parse_node(p.text(0));
      auto to = parse_node(p.text(1));
      if (!from) throw p.fail("from", "unknown component '" + p.text(0) + "'");
      if (!to) throw p.fail("to", "unknown component '" + p.text(1) + "'");
      sc.extra_edges.emplace_back(*from, *to);
    } else if (section == "[tallies]") {
      p.require(2, 2, "tally");
      (*sc.tallies)[CandidateId{p.integer<std::uint64_t>(0, "candidate")}] +=
          p.integer<std::uint64_t>(1, "votes");
    }
  }
  return sc;
}

// Cross-reference and causality checks. Throws on the first problem class
// found, listing every instance of it.
inline void validate_scenario(const Scenario& sc) {
  auto report = validate_config(sc.config);
  if (!report.empty()) {
    std::string msg = "invalid election configuration:";
    for (const auto& r : report) msg += "\n  " + r;
    throw Error(ErrorCode::validation, msg);
  }
  const Register reg(sc.config);

  for (const auto& [from, to] : sc.extra_edges) {
    if (from == Node::vca || to == Node::vca) {
      throw Error(ErrorCode::validation, std::string("network edge ") + to_string(from) + "-" +
                                             to_string(to) +
                                             " touches the air-gapped counting application");
    }
    if (from == to) throw Error(ErrorCode::validation, "network self-edge");
  }

  if (sc.period_end < sc.period_start || sc.period_start < 0) {
    throw Error(ErrorCode::validation, "voting period must satisfy 0 <= start <= end");
  }
  if (sc.shares_k < 1 || sc.shares_k > sc.shares_n || sc.shares_n > 255) {
    throw Error(ErrorCode::validation, "share parameters require 1 <= k <= n <= 255");
  }
  for (int idx : sc.present) {
    if (idx < 1 || idx > sc.shares_n) {
      throw Error(ErrorCode::validation, "presented share " + std::to_string(idx) +
                                             " outside 1.." + std::to_string(sc.shares_n));
    }
  }

  std::map<VoterId, std::vector<SimTime>> casts;
  auto events = sc.events;
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return std::pair(a.time, a.sequence) < std::pair(b.time, b.sequence);
  });
  for (const auto& e : events) {
    const auto where = "event at t=" + std::to_string(e.time) + " for " + e.voter.value;
    const auto* voter = reg.find_voter(e.voter);
    if (!voter) throw Error(ErrorCode::reference, where + ": unknown voter " + e.voter.value);
    if (e.time < sc.period_start || e.time > sc.period_end) {
      throw Error(ErrorCode::validation, where + ": outside the voting period");
    }
    if (e.kind == EventKind::vote) {
      const auto* c = reg.find_candidate(e.candidate);
      if (!c) {
        throw Error(ErrorCode::reference,
                    where + ": unknown candidate " + std::to_string(e.candidate.value));
      }
      if (e.channel != VoteChannel::internet && c->district != voter->district) {
        throw Error(ErrorCode::validation, where + ": paper ballot for candidate " +
                                               std::to_string(e.candidate.value) +
                                               " outside the voter's district");
      }
      if (e.channel == VoteChannel::internet) casts[e.voter].push_back(e.time);
    } else if (e.kind == EventKind::verify) {
      const auto& prior = casts[e.voter];
      const auto needed = e.cast_index.value_or(1);
      if (prior.size() < needed) {
        throw Error(ErrorCode::validation, where + ": verification before its cast");
      }
    }
  }

  for (const auto& a : sc.attacks) {
    const auto where = std::string(to_string(a.kind)) + " attack on " + a.target.value;
    if (!reg.find_voter(a.target)) {
      throw Error(ErrorCode::reference, where + ": unknown voter " + a.target.value);
    }
    if (a.candidate && !reg.find_candidate(*a.candidate)) {
      throw Error(ErrorCode::reference,
                  where + ": unknown candidate " + std::to_string(a.candidate->value));
    }
    if (a.at < sc.period_start || a.at > sc.period_end) {
      throw Error(ErrorCode::validation, where + ": activation outside the voting period");
    }
  }

  if (sc.tallies) {
    for (const auto& [cid, _] : *sc.tallies) {
      if (!reg.find_candidate(cid)) {
        throw Error(ErrorCode::reference,
                    "tally for unknown candidate " + std::to_string(cid.value));
      }
    }
  }
}

inline Scenario load_scenario(std::istream& in, const std::string& source = "<scenario>") {
  auto sc = parse_scenario(in, source);
  validate_scenario(sc);
  sc.config = synthesize_independent_parties(std::move(sc.config));
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return load_scenario(in, path.string());
}

// Election sections in scenario syntax; the allocation input format is this
// plus a [tallies] section.
inline std::string render_config_sections(const ElectionConfig& cfg) {
  std::ostringstream os;
  os << "[election]\ntype\t" << to_string(cfg.type) << "\nthreshold\t" << to_string(cfg.threshold)
     << "\n\n[districts]\n";
  for (const auto& d : cfg.districts) os << d.id << '\t' << d.name << '\t' << d.seats << '\n';
  os << "\n[parties]\n";
  for (const auto& p : cfg.parties) {
    if (p.synthesized) continue;
    os << p.id << '\t' << p.name << '\t';
    if (p.national_list.empty()) os << '-';
    for (std::size_t i = 0; i < p.national_list.size(); ++i) {
      os << (i ? "," : "") << p.national_list[i];
    }
    os << '\n';
  }
  os << "\n[candidates]\n";
  for (const auto& c : cfg.candidates) {
    const Party* party = nullptr;
    for (const auto& p : cfg.parties) {
      if (c.party && p.id == *c.party) party = &p;
    }
    os << c.id << '\t' << c.name << '\t';
    if (c.party && party && !party->synthesized) os << *c.party;
    else os << '-';
    os << '\t' << c.district << '\n';
  }
  return os.str();
}

inline std::string render_tallies_file(const ElectionConfig& cfg, const CandidateTallies& tallies) {
  std::ostringstream os;
  os << render_config_sections(cfg) << "\n[tallies]\n";
  for (const auto& c : cfg.candidates) {
    auto it = tallies.find(c.id);
    os << c.id << '\t' << (it == tallies.end() ? 0 : it->second) << '\n';
  }
  return os.str();
}

}  // namespace ivote
