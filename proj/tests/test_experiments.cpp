#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "kscrit/errors.hpp"
#include "kscrit/experiments.hpp"

using namespace kscrit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("kscrit_exp_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string config_dir() { return KSCRIT_CONFIG_DIR; }

/// Runs the CLI and returns its exit status.
int run_cli(const std::string& args) {
    const std::string cmd = std::string(KSCRIT_CLI) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_ini(const std::string& name, const std::string& text) {
    const auto p = fs::temp_directory_path() / ("kscrit_" + name + ".ini");
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return ExperimentConfig::parse(in);
}

RunContext quiet_ctx(const fs::path& dir) {
    RunContext c;
    c.out_dir = dir.string();
    c.quiet = true;
    return c;
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, DefaultFileMatchesBuiltInDefaults) {
    const auto c = ExperimentConfig::load(config_dir() + "/default.ini");
    EXPECT_EQ(c.to_json(), ExperimentConfig{}.to_json());
}

TEST(Config, ParsesValuesAndLists) {
    const auto c = parse("[special]\nwindows = 1e4, 1e6\nM = 3.5\n[solve]\nscheme = backward_euler\nu0 = steady:7\n"
                         "n = 300\nratio = 1.08\nwrite_snapshots = false\n");
    EXPECT_EQ(c.special.windows, (std::vector<double>{1e4, 1e6}));
    EXPECT_EQ(c.special.M, 3.5);
    EXPECT_EQ(c.solve.n, 300u);
    EXPECT_FALSE(c.solve.write_snapshots);
    const auto sc = c.solver_config();
    EXPECT_EQ(sc.scheme, Scheme::BackwardEuler);
    EXPECT_DOUBLE_EQ(sc.right_bc, 7.0 / 8.0);
    const auto u0 = c.initial_data();
    EXPECT_EQ(u0.size(), 300u);
    EXPECT_DOUBLE_EQ(u0.values.back(), 7.0 / 8.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse("[special]\ny_maxx = 1\n"), ConfigError);
    EXPECT_THROW(parse("[nosuch]\nK = 1\n"), ConfigError);
    EXPECT_THROW(parse("[match]\nK = five\n"), ConfigError);
    EXPECT_THROW(parse("[solve]\nn = 10.5\n"), ConfigError);
    EXPECT_THROW(parse("[solve]\nscheme = rk4\n"), ConfigError);
    EXPECT_THROW(parse("[solve]\nu0 = sin\n"), ConfigError);
    EXPECT_THROW(parse("[certify]\nswaps = maybe\n"), ConfigError);
    EXPECT_THROW(parse("[rate]\nd_lo = 4\n"), ConfigError);
    EXPECT_THROW(parse("[sandwich]\nwidth_x = 1\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::load("/nonexistent/kscrit.ini"), ConfigError);
}

TEST(Config, StatusMapping) {
    EXPECT_EQ(status_for("asymptotics-violation"), 1);
    EXPECT_EQ(status_for("ordering-failure"), 1);
    EXPECT_EQ(status_for("maximum-principle-violation"), 1);
    for (const char* c : {"M-too-small", "solver-failure", "config", "resolution", "range", "invalid-K"})
        EXPECT_EQ(status_for(c), 2) << c;
}

// ---------------------------------------------------------------- helpers

TEST(Helpers, TrendSlope) {
    EXPECT_NEAR(trend_slope({1, 2, 3, 4}, {3, 5, 7, 9}), 2.0, 1e-14);
    EXPECT_NEAR(trend_slope({0, 1, 2}, {1, 0, 1}), 0.0, 1e-14);
}

TEST(Helpers, ProfileErrorOfExactInnerForm) {
    const auto g = std::make_shared<GradedGrid>(make_graded_grid(800, 1e-10, 1.035));
    for (double a : {1e2, 1e4}) {
        // 1 − u = (1−x)/(1+ax): â = a+1, E = sup (1−x)x/(1+ax) < 1/a
        const auto u = sample(g, [a](double x) { return 1 - (1 - x) / (1 + a * x); });
        const double E = profile_error(u);
        EXPECT_GT(E, 0.5 / a);
        EXPECT_LT(E, 1.0 / a);
    }
}

// ---------------------------------------------------------------- commands via the library

TEST(Commands, MatchAndTabulatePass) {
    const auto dir = scratch("lib");
    ExperimentConfig c;
    const auto m = cmd_match(c, quiet_ctx(dir));
    EXPECT_EQ(m.status, 0);
    EXPECT_TRUE(fs::exists(dir / "matching_path.csv"));
    EXPECT_TRUE(fs::exists(dir / "match_summary.json"));
    const auto t = cmd_tabulate(c, quiet_ctx(dir));
    EXPECT_EQ(t.status, 0);
    EXPECT_EQ(t.summary["M"].get<double>(), 3.0);
    EXPECT_TRUE(fs::exists(dir / "special_table.csv"));
}

TEST(Commands, ImpossibleBracketIsAScientificFailure) {
    auto c = parse("[match]\nbracket_lo = 2.9\nbracket_hi = 3.0\n");
    EXPECT_EQ(cmd_match(c, quiet_ctx(scratch("bracket"))).status, 1);
}

// ---------------------------------------------------------------- CLI

TEST(Cli, ExitCodes) {
    const auto out = scratch("cli");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("nosuch"), 2);
    EXPECT_EQ(run_cli("match --config /nonexistent.ini --out " + out.string()), 2);
    EXPECT_EQ(run_cli("match --config " + write_ini("unknown", "[match]\nKK = 1\n").string() + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("tabulate --quiet --config " + config_dir() + "/m_zero.ini --out " + out.string()), 2);
    EXPECT_EQ(run_cli("tabulate --quiet --config " + config_dir() + "/short_table.ini --out " + out.string()), 0);
    const auto s = nlohmann::json::parse(slurp(out / "tabulate_summary.json"));
    EXPECT_TRUE(s.contains("warning"));
    EXPECT_EQ(run_cli("match --quiet --config " + write_ini("bracket", "[match]\nbracket_lo = 2.9\nbracket_hi = 3\n").string() +
                      " --out " + out.string()),
              1);
    EXPECT_EQ(run_cli("match --quiet --out " + out.string()), 0);
}

TEST(Cli, AllPassesAndIsDeterministic) {
    const auto a = scratch("all_a"), b = scratch("all_b");
    ASSERT_EQ(run_cli("all --quiet --config " + config_dir() + "/default.ini --out " + a.string()), 0);
    ASSERT_EQ(run_cli("all --quiet --config " + config_dir() + "/default.ini --out " + b.string()), 0);
    for (const char* f : {"rate.csv", "profile.csv", "sandwich.csv", "matching_path.csv", "special_table.csv",
                          "snapshots/u_t50.csv"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    const auto s = nlohmann::json::parse(slurp(a / "all_summary.json"));
    EXPECT_EQ(s["status"].get<int>(), 0);
}
