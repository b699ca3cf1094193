#include "plap/cli/runner.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace plap;
using namespace plap::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("plap_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int shell(const std::string& cmd) { return WEXITSTATUS(std::system(cmd.c_str())); }

std::string expect_config_error(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigError for: " << text;
    return {};
}

const char* kSmall = R"({
  "sweeps": [{"name": "flat_beta", "claim": "beta", "n": 3, "p": 1.5, "beta": -1.0,
              "lambda_grid": [25, 50, 100, 200, 400]}],
  "constants": [{"n": 4, "p": 2.2}]
})";

} // namespace

TEST(Config, EmptyTextIsEmpty)
{
    EXPECT_TRUE(parse_config("").empty());
    EXPECT_TRUE(parse_config("  \n").empty());
    EXPECT_TRUE(parse_config("{}").empty());
}

TEST(Config, ParseErrorCarriesLine)
{
    const auto msg = expect_config_error("{\n  \"constants\": [\n    {\"n\": 4, \"p\": }\n  ]\n}");
    EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
}

TEST(Config, FieldErrorsNamePath)
{
    EXPECT_NE(expect_config_error(R"({"constants": [{"n": 4, "p": 5}]})").find("constants[0].p"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"sweeps": [{"n": 4, "p": 2.2, "gamma": [0.1]}]})").find("sweeps[0].gamma"),
              std::string::npos);
    EXPECT_NE(expect_config_error(R"({"sweeps": [{"n": 3, "p": 1.5, "claim": "curvature"}]})").find("sweeps[0].claim"),
              std::string::npos);
    EXPECT_NE(expect_config_error(R"({"fem": [{"outline": {"type": "half_disk"}, "h": 0.1, "p": 1.7,
                                              "schedule": {"stages": 0}}]})")
                  .find("fem[0].schedule.stages"),
              std::string::npos);
    EXPECT_NE(expect_config_error(R"({"bogus": 1})").find("unknown field 'bogus'"), std::string::npos);
}

TEST(Config, PolynomialPotentials)
{
    const auto c = parse_config(R"({"thresholds": [{"n": 3, "p": 1.5, "lambda": 10,
        "beta": [{"coef": -1}, {"coef": 2, "powers": [1, 0]}]}]})");
    ASSERT_EQ(c.thresholds.size(), 1u);
    const std::array<double, 2> x{0.5, 0.0};
    EXPECT_DOUBLE_EQ(c.thresholds[0].potential.beta(x), 0.0);
}

TEST(Run, SweepTableHasHeaderAndFiveRows)
{
    const auto dir = scratch("sweep");
    RunOptions ro;
    ro.out_dir = dir.string();
    ro.reproducible = true;
    const auto res = run(parse_config(kSmall), Command::sweep, ro);
    const auto text = slurp(dir / "sweep_flat_beta.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
    EXPECT_EQ(text.substr(0, text.find('\n')), "lambda,grad_term,alpha_term,beta_term,mass,norm_p,J,threshold");
    EXPECT_EQ(res.exit_code, 0);
    EXPECT_FALSE(fs::exists(dir / "constants_n4_p2.2.csv"));
}

TEST(Run, SummaryListsEveryBlockOnce)
{
    const auto dir = scratch("summary");
    RunOptions ro;
    ro.out_dir = dir.string();
    ro.reproducible = true;
    const auto res = run(parse_config(kSmall), Command::report, ro);
    const auto& s = res.summary;
    auto count = [&](const std::string& needle) {
        std::size_t n = 0;
        for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count("[fit flat_beta]"), 1u);
    EXPECT_EQ(count("[constants n4_p2.2]"), 1u);
    EXPECT_NE(s.find("config_hash = fnv1a64:"), std::string::npos);
    EXPECT_NE(s.find("version = "), std::string::npos);
    EXPECT_NE(s.find("quadrature.rel_tol"), std::string::npos);
    EXPECT_EQ(s.find("elapsed_seconds"), std::string::npos);
    EXPECT_EQ(slurp(dir / "summary.txt"), s);
}

TEST(Run, PreconditionFailureIsSkippedWithReason)
{
    const auto dir = scratch("skip");
    RunOptions ro;
    ro.out_dir = dir.string();
    const auto res = run(parse_config(R"({"sweeps": [{"name": "div", "claim": "gradient", "n": 4, "p": 3.0,
                                                      "gamma": [0.1, 0.1, 0.1], "lambda_grid": [25, 50, 100, 200, 400]}]})"),
                         Command::fit, ro);
    EXPECT_EQ(res.skipped, 1u);
    EXPECT_EQ(res.fail, 0u);
    EXPECT_NE(res.summary.find("p > (n+1)/2: c1 divergent"), std::string::npos) << res.summary;
}

TEST(Run, DominanceTable)
{
    const auto dir = scratch("dominance");
    RunOptions ro;
    ro.out_dir = dir.string();
    ro.reproducible = true;
    const auto res = run(parse_config(R"({"dominance": [{"name": "d", "n": 3, "p": 1.5, "gamma": [0.1, 0.1]}]})"),
                         Command::dominance, ro);
    const auto text = slurp(dir / "dominance_d.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "channel,exponent");
    EXPECT_NE(text.find("verdict,beta"), std::string::npos);
    EXPECT_EQ(res.exit_code, 0);
}

TEST(Run, NoBlocksForCommandIsConfigError)
{
    RunOptions ro;
    ro.out_dir = scratch("none").string();
    EXPECT_THROW(run(parse_config(kSmall), Command::fem, ro), ConfigError);
}

TEST(Binary, EmptyConfigPrintsUsageAndFails)
{
    const auto dir = scratch("empty");
    std::ofstream(dir / "empty.json") << "{}";
    const std::string cmd = std::string(PLAP_CLI_PATH) + " report --config " + (dir / "empty.json").string() + " > " +
                            (dir / "stdout").string() + " 2> " + (dir / "stderr").string();
    EXPECT_NE(shell(cmd), 0);
    EXPECT_NE(slurp(dir / "stderr").find("usage:"), std::string::npos);
    EXPECT_NE(shell(std::string(PLAP_CLI_PATH) + " > /dev/null 2>&1"), 0);
}

TEST(Binary, ReproducibleRunsAreByteIdentical)
{
    const auto dir = scratch("repro");
    const std::string cfg = std::string(PLAP_SOURCE_DIR) + "/configs/smoke.json";
    for (const char* sub : {"a", "b"}) {
        const auto cmd = std::string(PLAP_CLI_PATH) + " report --reproducible --config " + cfg + " --out " +
                         (dir / sub).string() + " > /dev/null";
        ASSERT_EQ(shell(cmd), 0);
    }
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path().filename();
        ++compared;
    }
    EXPECT_GE(compared, 6u);
}

TEST(Binary, BadConfigReportsField)
{
    const auto dir = scratch("bad");
    std::ofstream(dir / "bad.json") << R"({"constants": [{"n": 4, "p": 4.5}]})";
    const std::string cmd = std::string(PLAP_CLI_PATH) + " constants --config " + (dir / "bad.json").string() +
                            " > /dev/null 2> " + (dir / "stderr").string();
    EXPECT_EQ(shell(cmd), 2);
    EXPECT_NE(slurp(dir / "stderr").find("constants[0].p"), std::string::npos);
}
