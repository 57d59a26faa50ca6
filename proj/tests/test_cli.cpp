#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ivote/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ivote-sim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = ivote::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scenario(const std::string& name) {
  return std::string(IVOTE_SCENARIO_DIR) + "/" + name;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ivote_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // First receipt line's QR payload.
  std::string first_qr(const fs::path& run) {
    std::ifstream in(run / "receipts.tsv");
    std::string line;
    std::getline(in, line);
    return line.substr(line.rfind('\t') + 1);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunHonest) {
  const auto r = cli({"run", scenario("minimal.scn"), "--out", dir_.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("audit PASS"), std::string::npos);
  EXPECT_NE(r.out.find("allocation Alpha=1"), std::string::npos);
  for (const auto* f : {"log1.tsv", "log5.tsv", "audit_report.txt", "tallies.tsv",
                        "allocation.tsv", "run_report.txt", "verification_state.tsv",
                        "receipts.tsv"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
}

TEST_F(Cli, RunTamperedExitsOne) {
  const auto r = cli({"run", scenario("tamper_delete_ballot.scn"), "--out", dir_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("audit FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("attack vss_delete_ballot 39001010002 detected"), std::string::npos);
}

TEST_F(Cli, AuditHonestAndTampered) {
  ASSERT_EQ(cli({"run", scenario("minimal.scn"), "--out", dir_.string()}).code, 0);
  auto r = cli({"audit", dir_.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);

  // drop the LOG3 line by hand
  std::ofstream(dir_ / "log3.tsv", std::ios::trunc).close();
  r = cli({"audit", dir_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("DISCREPANCY"), std::string::npos);
}

TEST_F(Cli, AuditMalformedLogIsUsageError) {
  fs::create_directories(dir_);
  for (int i = 1; i <= 5; ++i) {
    std::ofstream(dir_ / ("log" + std::to_string(i) + ".tsv")) << (i == 2 ? "garbage\n" : "");
  }
  EXPECT_EQ(cli({"audit", dir_.string()}).code, 2);
}

TEST_F(Cli, AllocateExample) {
  const auto r = cli({"allocate", scenario("ep_example_tallies.tsv"), "--type", "ep"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SEATS\tA=3,B=2,C=1"), std::string::npos) << r.out;
}

TEST_F(Cli, AllocateFromRunTallies) {
  ASSERT_EQ(cli({"run", scenario("riigikogu_2011.scn"), "--out", dir_.string()}).code, 0);
  const auto r = cli({"allocate", (dir_ / "tallies.tsv").string(), "--type", "riigikogu"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SEATS\tCentre=36,Reform=25,IRL=24,Social Democrats=14,Greens=2"),
            std::string::npos)
      << r.out;
}

TEST_F(Cli, VerifyReplay) {
  ASSERT_EQ(cli({"run", scenario("minimal.scn"), "--out", dir_.string()}).code, 0);
  const auto qr = first_qr(dir_);
  auto r = cli({"verify", qr, "--state", dir_.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "candidate\t1\tAnn\n");

  r = cli({"verify", qr, "--state", dir_.string(), "--at", "5400"});
  EXPECT_EQ(r.code, 1);

  auto forged = qr;
  forged.back() = forged.back() == '0' ? '1' : '0';
  r = cli({"verify", forged, "--state", dir_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("INTEGRITY ALARM"), std::string::npos);
}

TEST_F(Cli, VerifySubstitutedBallotAlarms) {
  EXPECT_EQ(cli({"run", scenario("tamper_substitute_on_verify.scn"), "--out", dir_.string()}).code,
            1);
  std::ifstream in(dir_ / "receipts.tsv");
  std::string line;
  std::string qr;
  while (std::getline(in, line)) {
    if (line.find("39001010003") != std::string::npos) qr = line.substr(line.rfind('\t') + 1);
  }
  ASSERT_FALSE(qr.empty());
  const auto r = cli({"verify", qr, "--state", dir_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("INTEGRITY ALARM"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"allocate", scenario("ep_example_tallies.tsv"), "--type", "senate"}).code, 2);
  EXPECT_EQ(cli({"run", "/nonexistent.scn", "--out", dir_.string()}).code, 2);
  EXPECT_EQ(cli({"verify", "nonsense", "--state", dir_.string()}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}
