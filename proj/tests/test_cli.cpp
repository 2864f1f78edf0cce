#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracneu/cli.hpp"

using namespace fracneu;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("fracneu_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::ofstream(path) << text;
    return path;
  }

  fs::path config(nlohmann::json j) {
    if (!j.contains("out")) j["out"] = (dir_ / "out").string();
    return write("config.json", j.dump());
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "fracneu");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string read(const std::string& name) const {
    std::ifstream f(dir_ / "out" / name, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  nlohmann::json read_json(const std::string& name) const { return nlohmann::json::parse(read(name)); }

  nlohmann::json error_json() const { return nlohmann::json::parse(err_.str()); }

  nlohmann::json viz(double eps) {
    write("q.txt", "m=2\n1 0 " + std::to_string(0.5 * eps) + "\n0 1 " + std::to_string(0.5 * eps) + "\n");
    return {{"override_alpha", 0.25}, {"potential", "q.txt"}};
  }

  // l = 0.9, alpha = 0.1, r = 1e6, p = 9: (1048554,769500) is non-resonant
  nlohmann::json far(double eps) {
    auto j = viz(eps);
    j["override_alpha"] = 0.1;
    j["r"] = 1e6;
    j["p"] = 9;
    j["ell"] = 0.9;
    return j;
  }
  static constexpr const char* kFarBeta = "1048554,769500";

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, UnknownConfigKeyIsConfigError) {
  const auto cfg = config({{"colour", 3}});
  EXPECT_EQ(run({"--config", cfg.string(), "measure"}), 2);
  EXPECT_EQ(error_json()["error"], "ConfigError");
}

TEST_F(CliTest, MissingPotentialIsConfigError) {
  const auto cfg = config({{"potential", "nowhere.txt"}});
  EXPECT_EQ(run({"--config", cfg.string(), "spectrum"}), 2);
  EXPECT_EQ(error_json()["exit_code"], 2);
}

TEST_F(CliTest, UsageErrorIsExitTwo) {
  EXPECT_EQ(run({"series"}), 2);
  EXPECT_EQ(run({"nonsense"}), 2);
}

TEST_F(CliTest, OversizedBasisIsComputationError) {
  const auto cfg = config({{"cutoff", 200.0}});
  EXPECT_EQ(run({"--config", cfg.string(), "spectrum"}), 3);
  EXPECT_EQ(error_json()["error"], "BasisTooLarge");
}

TEST_F(CliTest, FreeSpectrumIsFractionalNorms) {
  const auto cfg = config({{"cutoff", 8.0}});
  ASSERT_EQ(run({"--config", cfg.string(), "spectrum", "--csv"}), 0) << err_.str();
  const auto j = read_json("spectrum.json");
  const auto box = make_box({std::numbers::pi, std::numbers::pi / std::sqrt(2.0)});
  std::vector<double> expected;
  for (const auto& v : enumerate_lattice(box, 8.0, true)) expected.push_back(std::pow(v.norm_sq(), 0.75));
  std::sort(expected.begin(), expected.end());
  const auto got = j["eigenvalues"].get<std::vector<double>>();
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-10 * (1 + expected[i]));
  EXPECT_EQ(j["override_active"], false);
  const auto csv = read("spectrum.csv");
  EXPECT_EQ(csv.rfind("# config: ", 0), 0u);
  EXPECT_NE(csv.find("\nN,xi\n"), std::string::npos);
}

TEST_F(CliTest, SpectrumMatchReportsCluster) {
  const auto cfg = config(viz(0.05));
  ASSERT_EQ(run({"--config", cfg.string(), "spectrum", "--match", "2,1"}), 0) << err_.str();
  const auto m = read_json("spectrum.json")["matches"][0];
  EXPECT_EQ(m["beta"], (std::vector<int>{2, 1}));
  EXPECT_NEAR(m["xi"].get<double>(), std::pow(6.0, 0.75), 0.2);
}

TEST_F(CliTest, SeriesZeroPotentialAndScaling) {
  auto zero = far(0.0);
  zero["potential"] = "";
  auto cfg = config(zero);
  ASSERT_EQ(run({"--config", cfg.string(), "series", "--beta", kFarBeta}), 0) << err_.str();
  EXPECT_EQ(read_json("series.json")["F"], (std::vector<double>{0.0, 0.0, 0.0}));

  cfg = config(far(0.1));
  ASSERT_EQ(run({"--config", cfg.string(), "series", "--beta", kFarBeta}), 0) << err_.str();
  const double f1 = read_json("series.json")["F"][1].get<double>();
  cfg = config(far(0.2));
  ASSERT_EQ(run({"--config", cfg.string(), "series", "--beta", kFarBeta}), 0) << err_.str();
  const auto j = read_json("series.json");
  EXPECT_NEAR(j["F"][1].get<double>() / f1, 4.0, 1e-10);
  EXPECT_EQ(j["override_active"], true);
}

TEST_F(CliTest, SeriesRejectsResonantBeta) {
  const auto cfg = config(far(0.1));
  EXPECT_EQ(run({"--config", cfg.string(), "series", "--beta", "1,0"}), 4);
  const auto e = error_json();
  EXPECT_EQ(e["error"], "ResonantBeta");
  EXPECT_FALSE(e["witnesses"].empty());
  EXPECT_EQ(run({"--config", cfg.string(), "series", "--beta", kFarBeta}), 0) << err_.str();
  // (2,1) at r = 10 sits inside a resonance domain as well
  const auto low = config(viz(0.1));
  EXPECT_EQ(run({"--config", low.string(), "series", "--beta", "2,1"}), 4);
}

TEST_F(CliTest, SeriesKmaxBeyondRangeIsConfigError) {
  auto j = far(0.1);
  j["kmax"] = 4;
  const auto cfg = config(j);
  EXPECT_EQ(run({"--config", cfg.string(), "series", "--beta", kFarBeta}), 2);
}

TEST_F(CliTest, ClassifyCsvAndGridCap) {
  const auto cfg = config({{"override_alpha", 0.25}});
  ASSERT_EQ(run({"--config", cfg.string(), "classify", "--counts", "5,4", "--betas", "1,0;0,1"}), 0) << err_.str();
  std::istringstream csv(read("classify.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("# config: ", 0), 0u);
  std::getline(csv, line);
  EXPECT_EQ(line, "# override_active: true");
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("x1,x2", 0), 0u) << line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 20u);

  EXPECT_EQ(run({"--config", cfg.string(), "classify", "--counts", "100,100", "--max-cells", "50"}), 3);
  EXPECT_EQ(error_json()["error"], "GridTooLarge");
}

TEST_F(CliTest, MeasureReportsOverride) {
  const auto cfg = config({{"override_alpha", 0.05}, {"r", 1e4}, {"samples", 2000}});
  ASSERT_EQ(run({"--config", cfg.string(), "measure"}), 0) << err_.str();
  const auto j = read_json("measure.json");
  EXPECT_EQ(j["override_active"], true);
  EXPECT_EQ(j["samples"], 2000);
  const double f = j["fraction"].get<double>();
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0);
}

TEST_F(CliTest, VerifyConfigSuite) {
  auto cfg = config({{"cutoff", 10.0}});
  EXPECT_EQ(run({"--config", cfg.string(), "verify", "--suite", "config"}), 0) << out_.str();
  EXPECT_EQ(read_json("verify.json")["all_pass"], true);

  auto j = viz(0.1);
  j["cutoff"] = 10.0;
  cfg = config(j);
  EXPECT_EQ(run({"--config", cfg.string(), "verify", "--suite", "config"}), 0) << out_.str();

  j["tolerance_scale"] = 0.0;
  cfg = config(j);
  EXPECT_EQ(run({"--config", cfg.string(), "verify", "--suite", "config"}), 1) << out_.str();
  EXPECT_EQ(read_json("verify.json")["all_pass"], false);

  EXPECT_EQ(run({"--config", cfg.string(), "verify", "--suite", "bogus"}), 2);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  auto j = viz(0.1);
  j["samples"] = 3000;
  const auto cfg = config(j);
  for (const std::string cmd : {"spectrum", "measure"}) {
    ASSERT_EQ(run({"--config", cfg.string(), cmd}), 0) << err_.str();
    const auto first = read(cmd + ".json");
    ASSERT_EQ(run({"--config", cfg.string(), cmd}), 0);
    EXPECT_EQ(read(cmd + ".json"), first) << cmd;
  }
  const auto far_cfg = config(far(0.1));
  ASSERT_EQ(run({"--config", far_cfg.string(), "series", "--beta", kFarBeta}), 0) << err_.str();
  const auto first = read("series.json");
  ASSERT_EQ(run({"--config", far_cfg.string(), "series", "--beta", kFarBeta}), 0);
  EXPECT_EQ(read("series.json"), first);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  const auto cfg = config({{"override_alpha", 0.05}, {"r", 1e4}, {"samples", 2000}});
  ASSERT_EQ(run({"--config", cfg.string(), "--seed", "7", "measure"}), 0) << err_.str();
  EXPECT_EQ(read_json("measure.json")["config"]["seed"], 7);
}
