#include <gtest/gtest.h>

#include <numeric>

#include "ivote/electoral_core.hpp"

using namespace ivote;

namespace {

ElectionConfig small_config() {
  ElectionConfig cfg;
  cfg.districts = {{DistrictId{1}, "North", 3}, {DistrictId{10}, "Tartu", 2}};
  cfg.parties = {{PartyId{1}, "A", {CandidateId{11}, CandidateId{12}}, false}};
  cfg.candidates = {{CandidateId{11}, "a1", PartyId{1}, DistrictId{10}},
                    {CandidateId{12}, "a2", PartyId{1}, DistrictId{10}},
                    {CandidateId{13}, "ind", std::nullopt, DistrictId{10}}};
  cfg.voters = {{VoterId{"v10"}, DistrictId{10}}, {VoterId{"v1"}, DistrictId{1}}};
  return cfg;
}

}  // namespace

TEST(ElectoralCore, Table1DistrictsSumTo101) {
  ElectionConfig cfg;
  cfg.districts = riigikogu_2011_districts();
  const std::vector<int> expected{9, 11, 8, 14, 6, 5, 8, 8, 7, 8, 9, 8};
  ASSERT_EQ(cfg.districts.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(cfg.districts[i].id.value, static_cast<std::int64_t>(i + 1));
    EXPECT_EQ(cfg.districts[i].seats, expected[i]);
  }
  EXPECT_EQ(cfg.total_seats(), 101);
  EXPECT_TRUE(validate_config(cfg).empty());
}

TEST(ElectoralCore, CandidateInMissingDistrictIsOneViolation) {
  auto cfg = small_config();
  cfg.candidates.push_back({CandidateId{99}, "lost", std::nullopt, DistrictId{42}});
  const auto report = validate_config(cfg);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_NE(report[0].find("nonexistent district 42"), std::string::npos);
}

TEST(ElectoralCore, EpNeedsSingleDistrict) {
  auto cfg = small_config();
  cfg.type = ElectionType::european_parliament;
  const auto report = validate_config(cfg);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0], "EP must be single national district");
}

TEST(ElectoralCore, ReportsEveryKindOfBreach) {
  auto cfg = small_config();
  cfg.districts.push_back({DistrictId{1}, "dup", 0});
  cfg.parties.front().national_list.push_back(CandidateId{13});
  cfg.parties.front().national_list.push_back(CandidateId{777});
  cfg.voters.push_back({VoterId{"v1"}, DistrictId{1}});
  cfg.threshold = {1, 1};
  const auto report = validate_config(cfg);
  EXPECT_TRUE(std::is_sorted(report.begin(), report.end()));
  auto has = [&](const std::string& needle) {
    return std::any_of(report.begin(), report.end(),
                       [&](const std::string& m) { return m.find(needle) != std::string::npos; });
  };
  EXPECT_TRUE(has("duplicate district id 1"));
  EXPECT_TRUE(has("fewer than 1 seat"));
  EXPECT_TRUE(has("of another party"));
  EXPECT_TRUE(has("unregistered candidate 777"));
  EXPECT_TRUE(has("duplicate voter id v1"));
  EXPECT_TRUE(has("threshold fraction 1/1"));
}

TEST(ElectoralCore, CandidateListIsTheVotersDistrict) {
  const auto cfg = small_config();
  const auto list = district_candidate_list(cfg, VoterId{"v10"});
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[0].id, CandidateId{11});
  EXPECT_EQ(list[2].id, CandidateId{13});
  EXPECT_TRUE(district_candidate_list(cfg, VoterId{"v1"}).empty());
}

TEST(ElectoralCore, UnknownVoterIsIneligible) {
  const auto cfg = small_config();
  try {
    (void)district_candidate_list(cfg, VoterId{"nobody"});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ineligible_voter);
  }
}

TEST(ElectoralCore, IndependentsBecomeSingletonListsOnlyForEp) {
  auto cfg = small_config();
  EXPECT_EQ(synthesize_independent_parties(cfg).parties.size(), 1u);
  cfg.type = ElectionType::european_parliament;
  cfg.candidates.push_back({CandidateId{5}, "early", std::nullopt, DistrictId{10}});
  const auto full = synthesize_independent_parties(cfg);
  ASSERT_EQ(full.parties.size(), 3u);
  EXPECT_EQ(full.parties[1].id, PartyId{2});
  EXPECT_EQ(full.parties[1].national_list, std::vector<CandidateId>{CandidateId{5}});
  EXPECT_EQ(full.parties[2].national_list, std::vector<CandidateId>{CandidateId{13}});
  EXPECT_TRUE(full.parties[2].synthesized);
}

TEST(ElectoralCore, ElectionTypeNames) {
  EXPECT_EQ(parse_election_type("ep"), ElectionType::european_parliament);
  EXPECT_EQ(parse_election_type("riigikogu"), ElectionType::riigikogu);
  EXPECT_EQ(parse_election_type("senate"), std::nullopt);
  EXPECT_STREQ(to_string(ElectionType::municipal), "municipal");
}
