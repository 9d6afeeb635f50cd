#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kCli = ARSC_CLI_PATH;
const fs::path kModels = ARSC_MODELS_DIR;

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / "arsc_cli_test" / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

int run(const std::string& args) {
    const std::string cmd = kCli.string() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json result(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "result.json")); }

std::string model(const std::string& name) { return "--model " + (kModels / name).string(); }

}  // namespace

TEST(Cli, RiccatiWritesProvenance) {
    const auto out = scratch("riccati");
    ASSERT_EQ(run("riccati " + model("scalar_lq.json") + " --out " + out.string() + " --seed 5"), 0);
    const auto r = result(out);
    EXPECT_EQ(r["command"], "riccati");
    EXPECT_EQ(r["seed"], 5);
    EXPECT_EQ(r["grid"]["steps"], 1000);
    EXPECT_EQ(r["model_hash"].get<std::string>().size(), 16u);
    EXPECT_NEAR(r["P0"][0][0].get<double>(), 2.0 / 3.0, 1e-10);
    EXPECT_TRUE(r.contains("options"));
    EXPECT_EQ(slurp(out / "riccati.csv").rfind("# arsc-csv v1 riccati\n", 0), 0u);
}

TEST(Cli, TooFewPathsIsInconclusive) {
    const auto out = scratch("lq_inconclusive");
    EXPECT_EQ(run("lq " + model("scalar_lq.json") + " --validate --paths 10 --out " + out.string()), 3);
    EXPECT_TRUE(result(out)["validation"]["inconclusive"].get<bool>());
}

TEST(Cli, MalformedModelExitsWithOne) {
    const auto dir = scratch("bad_model");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{\"type\": \"lq\",\n \"horizon\": }";
    EXPECT_EQ(run("lq --model " + (dir / "bad.json").string() + " --out " + (dir / "out").string()), 1);
    std::ofstream(dir / "unknown.json") << "{\"type\": \"lq\", \"colour\": 1}";
    EXPECT_EQ(run("riccati --model " + (dir / "unknown.json").string() + " --out " + (dir / "out").string()), 1);
}

TEST(Cli, BadArgumentsExitWithOne) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("nonsense"), 1);
    EXPECT_EQ(run("riccati --bogus-flag"), 1);
    EXPECT_EQ(run("riccati"), 1);
    EXPECT_EQ(run("bsde --payoff digital --out " + scratch("bad_payoff").string()), 1);
}

TEST(Cli, BlowupExitsWithTwo) {
    const auto out = scratch("blowup");
    EXPECT_EQ(run("lq " + model("scalar_lq.json") + " --gamma-matrix '[[5.0]]' --out " + out.string()), 2);
    EXPECT_EQ(run("riccati " + model("scalar_lq.json") + " --gamma-matrix '[[5.0]]' --out " + out.string()), 2);
    EXPECT_TRUE(result(out)["blowup"].get<bool>());
}

TEST(Cli, ReproducibleAcrossWorkerCounts) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const std::string args = "lq-sim " + model("planar_lq.json") + " --paths 300 --trajectories 2 --seed 9";
    ASSERT_EQ(run(args + " --workers 1 --out " + a.string()), 0);
    ASSERT_EQ(run(args + " --workers 3 --out " + b.string()), 0);
    for (const char* f : {"result.json", "paths.csv", "trajectories.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, PortfolioComparison) {
    const auto out = scratch("portfolio");
    ASSERT_EQ(run("portfolio " + model("symmetric_market.json") + " --theta 0.4 --paths 4000 --out " + out.string()), 0);
    const auto r = result(out);
    EXPECT_TRUE(r["comparison"]["monte_carlo"].get<bool>());
    EXPECT_EQ(r["comparison"]["rows"].size(), 3u);
    EXPECT_TRUE(fs::exists(out / "strategies.csv"));
    EXPECT_TRUE(fs::exists(out / "solution.csv"));

    const auto flat = scratch("portfolio_flat");
    ASSERT_EQ(run("portfolio " + model("flat_market.json") + " --out " + flat.string()), 0);
    EXPECT_NEAR(result(flat)["optimal_growth"].get<double>(), 0.02 + 0.5 * 0.0016 / 0.048, 1e-10);
}

TEST(Cli, LatticeCommands) {
    const auto out = scratch("vardecomp");
    ASSERT_EQ(run("vardecomp --payoff product --out " + out.string()), 0);
    const auto r = result(out);
    EXPECT_NEAR(r["d1"].get<double>(), 0.5, 1e-12);
    EXPECT_TRUE(r["identity_gap"].get<double>() < 1e-12);

    const auto t = scratch("taylor");
    ASSERT_EQ(run("taylor --payoff linear --params 1 1 --out " + t.string()), 0);
    EXPECT_TRUE(fs::exists(t / "taylor.csv"));

    const auto b = scratch("bsde");
    ASSERT_EQ(run("bsde --payoff linear --params 1 0 --gamma1 0.25 --steps-list 10 20 --out " + b.string()), 0);
    EXPECT_NEAR(result(b)["y0"].get<double>(), 0.25, 1e-12);
}

TEST(Cli, VerifySmp) {
    const auto out = scratch("smp");
    ASSERT_EQ(run("verify-smp " + model("planar_lq.json") + " --paths 5 --draws 20 --out " + out.string()), 0);
    EXPECT_TRUE(result(out)["passed"].get<bool>());
}
