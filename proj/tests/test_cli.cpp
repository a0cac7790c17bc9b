#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(VERACITY_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("veracity_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "config.json") << R"({"folds": 3, "bins": 3, "min_support": 5,
      "affectflow": {"epochs": 60},
      "synthetic": {"n_docs": 150, "actors_per_platform": 50, "alias_pairs": 3,
                    "clusters": [{"size": 8, "intent": "malicious", "platform": "x", "bursts": 6}]}})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string global() const { return "--config " + (dir_ / "config.json").string() + " --seed 3 --out " + dir_.string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenTrainCalibrateDetectReplay) {
  ASSERT_EQ(run_cli(global() + " gen"), 0);
  auto corpus = (dir_ / "corpus.jsonl").string();
  ASSERT_TRUE(fs::exists(corpus));
  ASSERT_TRUE(fs::exists(dir_ / "truth.jsonl"));
  ASSERT_EQ(run_cli(global() + " train --corpus " + corpus), 0);
  auto model = (dir_ / "model.json").string();
  ASSERT_EQ(run_cli(global() + " calibrate --corpus " + corpus + " --model " + model), 0);
  EXPECT_TRUE(fs::exists(dir_ / "curves.csv"));

  auto folds = nlohmann::json::parse(slurp(dir_ / "folds.json"));
  auto doc = folds.at("folds").at(0).at("test").at(0).get<std::string>();
  ASSERT_EQ(run_cli(global() + " detect --corpus " + corpus + " --model " + model + " --doc " + doc +
                    " --after-hours 24 --format json"),
            0);
  auto ex = nlohmann::json::parse(slurp(dir_ / "explanation.json"));
  EXPECT_EQ(ex.at("doc_id"), doc);
  ASSERT_EQ(run_cli(global() + " detect --corpus " + corpus + " --model " + model), 0);
  EXPECT_TRUE(fs::exists(dir_ / "verdicts.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "detect_metrics.csv"));
  ASSERT_EQ(run_cli(global() + " replay --corpus " + corpus + " --model " + model + " --doc " + doc + " --hours 2,168"),
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "replay.json")).at("steps").size(), 2u);
}

TEST_F(Cli, CoordinationAndLinking) {
  ASSERT_EQ(run_cli(global() + " gen"), 0);
  auto corpus = (dir_ / "corpus.jsonl").string();
  ASSERT_EQ(run_cli(global() + " coord-scan --corpus " + corpus + " --truth " + (dir_ / "truth.jsonl").string()), 0);
  auto rep = nlohmann::json::parse(slurp(dir_ / "coordination.json"));
  EXPECT_TRUE(rep.contains("ari_vs_planted"));
  EXPECT_TRUE(fs::exists(dir_ / "similarity.csv"));
  ASSERT_EQ(run_cli(global() + " link --corpus " + corpus), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "identities.json")).at("format"), "veracity-identities");
  EXPECT_TRUE(fs::exists(dir_ / "packages.jsonl"));
}

TEST_F(Cli, EvalWritesCsvs) {
  ASSERT_EQ(run_cli(global() + " gen"), 0);
  ASSERT_EQ(run_cli(global() + " eval --corpus " + (dir_ / "corpus.jsonl").string()), 0);
  auto csv = slurp(dir_ / "cv_metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "fold,model,horizon_hours,precision,recall,f1,accuracy,tp,fp,tn,fn");
  EXPECT_TRUE(fs::exists(dir_ / "binned_affectflow_word_count.csv"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli(global() + " train"), 1);
  EXPECT_EQ(run_cli(global() + " frobnicate"), 1);
  std::ofstream(dir_ / "bad.json") << R"({"colour": "blue"})";
  EXPECT_EQ(run_cli("--config " + (dir_ / "bad.json").string() + " --out " + dir_.string() + " gen"), 1);
  EXPECT_EQ(run_cli(global() + " train --corpus " + (dir_ / "missing.jsonl").string()), 2);
  std::ofstream(dir_ / "broken.jsonl") << "{not json\n";
  EXPECT_EQ(run_cli(global() + " train --corpus " + (dir_ / "broken.jsonl").string()), 2);
  ASSERT_EQ(run_cli(global() + " gen"), 0);
  auto corpus = (dir_ / "corpus.jsonl").string();
  ASSERT_EQ(run_cli(global() + " train --corpus " + corpus), 0);
  ASSERT_EQ(run_cli(global() + " calibrate --corpus " + corpus + " --model " + (dir_ / "model.json").string()), 0);
  EXPECT_EQ(run_cli(global() + " replay --corpus " + corpus + " --model " + (dir_ / "model.json").string() +
                    " --doc no-such-doc"),
            2);
}
