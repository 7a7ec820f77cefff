#include <gtest/gtest.h>

#include "canaleval/io.hpp"
#include "support/cli.hpp"

namespace {

using namespace clitest;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("cli"));
    ASSERT_EQ(run(*dir_, "phantom --seed 3 --scans 2 --blobs 2 --out ph"), 0);
    fs::create_directories(*dir_ / "sys");
    for (const char* scan : {"phantom-3", "phantom-4"}) {
      ASSERT_EQ(run(*dir_, std::string("extract --prob ph/volumes/") + scan + ".cvh --device phantom --out sys/" + scan +
                               ".json"),
                0);
    }
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static fs::path* dir_;
};

fs::path* Cli::dir_ = nullptr;

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(*dir_, ""), 2);
  EXPECT_EQ(run(*dir_, "metrics --gt ph/truth --est sys --out x --bogus"), 2);
  EXPECT_EQ(run(*dir_, "metrics --gt does/not/exist --est sys --out x"), 2);
  EXPECT_EQ(run(*dir_, "--help"), 0);
}

TEST_F(Cli, RuntimeErrorsExitWithOneAndReportTheKind) {
  {
    std::ofstream bad(*dir_ / "bad.json");
    bad << "{\"rater_id\": \"x\", \"canals\": []}";
  }
  EXPECT_EQ(run(*dir_, "metrics --gt bad.json --est sys --out m_bad"), 1);
  EXPECT_NE(slurp(*dir_ / "stderr.txt").find("invalid_annotation"), std::string::npos);
  EXPECT_FALSE(fs::exists(*dir_ / "m_bad" / "metrics.csv"));
}

TEST_F(Cli, IdenticalCurvesScoreZero) {
  ASSERT_EQ(run(*dir_, "metrics --gt ph/truth --est ph/truth --out m_self"), 0);
  const std::string csv = slurp(*dir_ / "m_self" / "metrics.csv");
  EXPECT_EQ(line_count(csv), 5u);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) EXPECT_NE(line.find(",0.000,0.000,1.000000,"), std::string::npos) << line;
}

TEST_F(Cli, ConsensusProfileAndMetricsChain) {
  ASSERT_EQ(run(*dir_, "consensus --annotations ph/annotations --system sys --out cons"), 0);
  // Two scans, two sides, four experts plus the system.
  EXPECT_EQ(line_count(slurp(*dir_ / "cons" / "reference.csv")), 1u + 2 * 2 * 5);
  const auto ref = canaleval::load_annotations(*dir_ / "cons" / "consensus.json");
  EXPECT_EQ(ref.documents.size(), 2u);

  ASSERT_EQ(run(*dir_, "profile --annotations ph/annotations --ref cons/consensus.json --system sys --out prof"), 0);
  const std::string prof = slurp(*dir_ / "prof" / "profile.csv");
  const std::string header = prof.substr(0, prof.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 3 + 200 - 1);
  EXPECT_EQ(line_count(prof), 1u + 2 * 2 * 5);

  ASSERT_EQ(run(*dir_, "metrics --gt cons/consensus.json --est sys --out m_cons"), 0);
  EXPECT_EQ(line_count(slurp(*dir_ / "m_cons" / "metrics.csv")), 5u);

  ASSERT_EQ(run(*dir_, "variability --annotations ph/annotations --system sys --out var"), 0);
  ASSERT_EQ(run(*dir_, "pairwise --annotations ph/annotations --system sys --out pw"), 0);
  EXPECT_EQ(line_count(slurp(*dir_ / "pw" / "pairwise_mcd.csv")), 1u + 5 * 5 * 4);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  ASSERT_EQ(run(*dir_, "phantom --seed 3 --scans 2 --blobs 2 --out ph_again"), 0);
  EXPECT_EQ(tree(*dir_ / "ph"), tree(*dir_ / "ph_again"));
  ASSERT_EQ(run(*dir_, "variability --annotations ph/annotations --system sys --out var1"), 0);
  ASSERT_EQ(run(*dir_, "variability --annotations ph/annotations --system sys --out var2"), 0);
  EXPECT_EQ(tree(*dir_ / "var1"), tree(*dir_ / "var2"));
  ASSERT_EQ(run(*dir_, "--workers 3 consensus --annotations ph/annotations --system sys --out cons_w1"), 0);
  ASSERT_EQ(run(*dir_, "--workers 1 consensus --annotations ph/annotations --system sys --out cons_w2"), 0);
  EXPECT_EQ(tree(*dir_ / "cons_w1"), tree(*dir_ / "cons_w2"));
}

TEST_F(Cli, ResampleHalvesTheGrid) {
  ASSERT_EQ(run(*dir_, "resample --in ph/volumes/phantom-3.cvh --spacing 0.8 --out coarse/p.cvh"), 0);
  const auto h = canaleval::read_volume_header(*dir_ / "coarse" / "p.cvh");
  const auto orig = canaleval::read_volume_header(*dir_ / "ph" / "volumes" / "phantom-3.cvh");
  for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(h.geometry.dims[a], orig.geometry.dims[a] / 2);
}

}  // namespace
