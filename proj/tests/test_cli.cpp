// test_cli.cpp — Axis parsing, output determinism and exit codes

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fermitherm/cli.hpp"

namespace fc = fermitherm::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fermitherm_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

fc::RunConfig small_fi_rate(const fs::path& out) {
    fc::RunConfig c;
    c.command = fc::Command::fi_rate;
    c.gamma = 0.5;
    c.temperature = 0.8;
    c.gamma_grid = fc::parse_axis("0.5", "--gamma-grid");
    c.t_grid = fc::parse_axis("0.1:10:12:log", "--t-grid");
    c.out = out.string();
    return c;
}

int run_quiet(const fc::RunConfig& c) {
    std::ostringstream log;
    return fc::run(c, log);
}

} // namespace

TEST(Axis, LogGridHitsEndpoints) {
    const fc::AxisSpec a = fc::parse_axis("0.001:10:5:log", "t");
    const auto v = a.values();
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v.front(), 0.001);
    EXPECT_EQ(v.back(), 10.0);
    EXPECT_NEAR(v[2], 0.1, 1e-15);
}

TEST(Axis, LinearByDefault) {
    const auto v = fc::parse_axis("0:1:5", "t").values();
    EXPECT_EQ(v[1], 0.25);
}

TEST(Axis, ExplicitList) {
    const fc::AxisSpec a = fc::parse_axis("0.1,0.5,1,5", "gamma");
    EXPECT_EQ(a.values(), (std::vector<double>{0.1, 0.5, 1.0, 5.0}));
}

TEST(Axis, RejectsMalformed) {
    for (const char* bad : {"1:0:5", "0:1:1", "0:1:2.5", "0:1:5:cubic", "0:1:5:log", "a:1:5", "1,0.5", "1,,2", "", "1:2"})
        EXPECT_THROW(fc::parse_axis(bad, "x"), fermitherm::InvalidParams) << bad;
}

TEST(Run, CsvWithSidecarAndStatusColumn) {
    const fs::path out = scratch("rate.csv");
    ASSERT_EQ(run_quiet(small_fi_rate(out)), fc::exit_ok);
    const std::string text = slurp(out);
    EXPECT_EQ(text.rfind("# fermitherm", 0), 0u);
    EXPECT_NE(text.find(",status\n"), std::string::npos);
    const auto meta = nlohmann::json::parse(slurp(fc::metadata_path(out.string())));
    EXPECT_EQ(meta["config"]["command"], "fi-rate");
    EXPECT_EQ(meta["rows"], 12);
    EXPECT_TRUE(meta.contains("wall_time_s"));
}

TEST(Run, ByteIdenticalAcrossRunsAndThreadCounts) {
    fc::RunConfig c = small_fi_rate(scratch("a.csv"));
    c.jobs = 1;
    ASSERT_EQ(run_quiet(c), fc::exit_ok);
    const std::string first = slurp(c.out);
    ASSERT_EQ(run_quiet(c), fc::exit_ok);
    EXPECT_EQ(slurp(c.out), first);
    fc::RunConfig d = c;
    d.jobs = 4;
    ASSERT_EQ(run_quiet(d), fc::exit_ok);
    // jobs is not part of the data header, only of the sidecar
    EXPECT_EQ(slurp(d.out), first);
}

TEST(Run, JsonRecords) {
    fc::RunConfig c = small_fi_rate(scratch("rate.json"));
    c.format = fc::Format::json;
    ASSERT_EQ(run_quiet(c), fc::exit_ok);
    const auto j = nlohmann::json::parse(slurp(c.out));
    ASSERT_TRUE(j.is_array());
    ASSERT_EQ(j.size(), 12u);
    EXPECT_EQ(j[0]["status"], "ok");
}

TEST(Run, ConfigErrors) {
    fc::RunConfig c = small_fi_rate(scratch("bad.csv"));
    c.gamma = -1.0;
    EXPECT_EQ(run_quiet(c), fc::exit_config);
    c = small_fi_rate("/nonexistent_dir_for_tests/x.csv");
    EXPECT_EQ(run_quiet(c), fc::exit_config);
    c = small_fi_rate(scratch("bad2.csv"));
    c.epsilons = std::vector<double>{1.0};
    EXPECT_EQ(run_quiet(c), fc::exit_config);
}

TEST(Run, VerifyPasses) {
    fc::RunConfig c;
    c.command = fc::Command::verify;
    c.out = scratch("verify.csv").string();
    EXPECT_EQ(run_quiet(c), fc::exit_ok);
    EXPECT_EQ(slurp(c.out).find(",fail\n"), std::string::npos);
}

TEST(Run, MultiAdditivitySteadyRecordsSensitivity) {
    fc::RunConfig c;
    c.command = fc::Command::multi_additivity;
    c.steady = true;
    c.gamma = 0.5;
    c.T_grid = fc::parse_axis("0.2,1", "--T-grid");
    c.out = scratch("multi.csv").string();
    ASSERT_EQ(run_quiet(c), fc::exit_ok);
    const auto meta = nlohmann::json::parse(slurp(fc::metadata_path(c.out)));
    EXPECT_TRUE(meta.contains("epsilon1_sensitivity"));
}

class Binary : public ::testing::Test {
protected:
    void SetUp() override {
        const char* exe = std::getenv("FERMITHERM_CLI");
        if (!exe) GTEST_SKIP() << "FERMITHERM_CLI not set";
        binary = exe;
    }
    int call(const std::string& args) {
        const int status = std::system((binary + " " + args + " 2>/dev/null").c_str());
        return WEXITSTATUS(status);
    }
    std::string binary;
};

TEST_F(Binary, ExitCodes) {
    const std::string out = scratch("bin.csv").string();
    EXPECT_EQ(call("fi-rate --t-grid 0.1:5:4:log --out " + out), 0);
    EXPECT_EQ(call("fi-rate --gamma -2 --out " + out), 1);
    EXPECT_EQ(call("fi-rate --t-grid 1:0:4 --out " + out), 1);
    EXPECT_EQ(call("fi-rate --format xml --out " + out), 1);
    EXPECT_EQ(call("no-such-command"), 1);
}

TEST_F(Binary, FlagsOverrideConfigFile) {
    const fs::path cfg = scratch("run.cfg");
    {
        std::ofstream f(cfg);
        f << "gamma=0.3\ntemperature=2\nt-grid=0.5,1,2\n";
    }
    const std::string out = scratch("cfg.csv").string();
    ASSERT_EQ(call("transient-fi --config " + cfg.string() + " --temperature 0.7 --out " + out), 0);
    const auto meta = nlohmann::json::parse(slurp(fc::metadata_path(out)));
    EXPECT_EQ(meta["config"]["gamma"], 0.3);
    EXPECT_EQ(meta["config"]["temperature"], 0.7);
    EXPECT_EQ(meta["config"]["t_grid"], "0.5,1,2");
}
