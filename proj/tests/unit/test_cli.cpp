#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "spc/experiment/experiment.hpp"
#include "spc/io/bundle.hpp"
#include "spc/io/report.hpp"

using namespace spc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("spc_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(SPC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

double mean_of(const RunRecord& r, const std::string& metric, double d, bool predicted = false) {
    double s = 0;
    int n = 0;
    for (const auto& row : r.rows)
        if (row.metric == metric && row.d == d) {
            s += predicted ? row.predicted : row.measured;
            ++n;
        }
    return n ? s / n : std::nan("");
}

}  // namespace

TEST(Config, RoundTripEveryScenario) {
    auto dir = scratch("roundtrip");
    for (const auto& e : scenario_registry()) {
        ExperimentConfig c = e.defaults;
        EXPECT_EQ(config_from_json(to_json(c)), c) << e.name;
        c.seeds = {7, 3, 9};
        c.output_dir = "elsewhere";
        write_config(dir / (e.name + ".json"), c);
        EXPECT_EQ(read_config(dir / (e.name + ".json")), c) << e.name;
    }
}

TEST(Config, Validation) {
    EXPECT_THROW(config_from_json(json{{"scenario", "er_square"}, {"seeds", json::array()}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"scenario", "er_square"}, {"d", json::array()}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"scenario", "er_square"}, {"bogus", 1}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"scenario", "rank1_rect"}, {"methods", {"sim", "best"}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"scenario", "rank1_square"}, {"sampler", "cauchy"}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"scenario", "nb_example"}, {"n", 2001}}), ConfigError);
    try {
        config_from_json(json{{"scenario", "nope"}});
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        for (const auto& s : scenario_registry()) EXPECT_NE(msg.find(s.name), std::string::npos) << s.name;
    }
    // scalar d is accepted as a one-point grid
    EXPECT_EQ(config_from_json(json{{"scenario", "er_square"}, {"d", 3.5}}).d, std::vector<double>{3.5});
}

TEST(Config, HashIgnoresOutputDir) {
    auto a = default_config("er_square"), b = a;
    b.output_dir = "x";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seeds = {1, 2};
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Experiment, DeterministicAcrossThreads) {
    auto c = default_config("rank1_rect");
    c.n = c.m = 300;
    c.d = {30.0};
    c.seeds = {1, 2, 3};
    const auto r1 = run_experiment(c, 1);
    const auto r3 = run_experiment(c, 3);
    EXPECT_EQ(to_csv(r1), to_csv(r3));
    auto d1 = scratch("det1"), d2 = scratch("det2");
    write_outputs(r1, d1);
    write_outputs(run_experiment(c, 2), d2);
    EXPECT_EQ(slurp(d1 / "rank1_rect_completion.csv"), slurp(d2 / "rank1_rect_completion.csv"));
    const auto csv = slurp(d1 / "rank1_rect_completion.csv");
    EXPECT_EQ(csv.rfind(csv_header(), 0), 0u);
    EXPECT_NE(csv.find(config_hash(c) + ",rank1_rect,30,2,0,mse_avg,"), std::string::npos);
    EXPECT_TRUE(fs::exists(d1 / "rank1_rect_summary.json"));
}

// Predicted columns depend on the truth only: reordering the methods leaves
// them fixed, and none of them echoes a measurement.
TEST(Experiment, PredictionsFromTruthOnly) {
    auto c = default_config("rank1_rect");
    c.n = c.m = 300;
    c.d = {30.0};
    c.seeds = {4};
    const auto a = run_experiment(c, 1);
    auto c2 = c;
    c2.methods = {"avg", "sim", "svd"};
    const auto b = run_experiment(c2, 1);
    auto pred = [](const RunRecord& r, const std::string& m) {
        for (const auto& row : r.rows)
            if (row.metric == m) return row.predicted;
        return std::nan("");
    };
    for (std::string m : {"mse_avg", "mse_sim", "c1_sim", "c2_avg", "weight_avg"}) {
        EXPECT_EQ(pred(a, m), pred(b, m)) << m;
        EXPECT_TRUE(std::isfinite(pred(a, m))) << m;
    }
    for (const auto& row : a.rows) EXPECT_FALSE(row.measured == row.predicted && row.metric != "ordered") << row.metric;
}

TEST(Experiment, ErSquareSmall) {
    auto c = default_config("er_square");
    c.n = 1500;
    c.seeds = {1, 2, 3};
    const auto r = run_experiment(c, 1);
    EXPECT_NEAR(mean_of(r, "lambda1", 4.0), 4.0, 0.3);
    EXPECT_NEAR(mean_of(r, "overlap", 4.0, true), std::sqrt(0.75), 1e-9);
    EXPECT_NEAR(mean_of(r, "overlap", 4.0), std::sqrt(0.75), 0.06);
    EXPECT_NEAR(mean_of(r, "lr_dot", 4.0, true), 0.75, 1e-9);
}

TEST(Experiment, SweepCrossesNearKurtosis) {
    auto c = default_config("sweep_d");
    c.n = 1500;
    c.d = {2.0, 3.0, 4.0, 12.0};
    c.seeds = {1, 2};
    const auto r = run_experiment(c, 1);
    // ϑ₂ = √(Kurt/d) with the measured kurtosis ≈ 3
    EXPECT_EQ(mean_of(r, "overlap", 2.0, true), 0.0);
    EXPECT_GT(mean_of(r, "overlap", 4.0, true), 0.0);
    EXPECT_GT(mean_of(r, "overlap", 12.0, true), 0.7);
    EXPECT_LT(mean_of(r, "overlap", 2.0), 0.35);
    EXPECT_NEAR(mean_of(r, "overlap", 12.0), mean_of(r, "overlap", 12.0, true), 0.08);
}

TEST(Predict, ErdosRenyi) {
    const auto j = predict(erdos_renyi_truth(500), 4.0, Variant::square);
    EXPECT_NEAR(j["profile"]["theta"].get<double>(), 0.5, 1e-9);
    EXPECT_NEAR(j["tables"]["gamma"][0].get<double>(), 4.0 / 3.0, 1e-9);
    EXPECT_NEAR(1.0 / std::sqrt(j["tables"]["gamma"][0].get<double>()), 0.866, 5e-4);
    EXPECT_TRUE(j["rank_one_available"].get<bool>());
    EXPECT_NEAR(j["rank_one"]["overlap_sim"].get<double>(), std::sqrt(0.75), 1e-9);
}

TEST(Predict, TwoBlockThresholds) {
    const auto gt = two_block_truth(2000, 5.0, 3.0);
    const auto sq = predict(gt, 3.0, Variant::square);
    EXPECT_NEAR(sq["profile"]["theta"].get<double>(), std::sqrt(34.0 / 3.0), 1e-6);
    EXPECT_EQ(sq["profile"]["r0"].get<int>(), 1);
    const auto nb = predict(gt, 6.0, Variant::nb);
    EXPECT_NEAR(nb["nb"]["threshold"].get<double>(), std::sqrt(17.0 / 3.0), 1e-6);
    EXPECT_EQ(nb["nb"]["r0"].get<int>(), 2);
    EXPECT_EQ(nb["tables"]["gamma_hat"].size(), 2u);
    EXPECT_FALSE(sq["rank_one_available"].get<bool>());
    EXPECT_FALSE(sq.contains("rank_one"));
}

TEST(Binary, ExitCodes) {
    auto dir = scratch("bin");
    const std::string d = dir.string();
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("experiment --scenario nope"), 2);
    std::ofstream(dir / "empty.json") << R"({"scenario": "er_square", "seeds": []})";
    EXPECT_EQ(run("experiment --config " + d + "/empty.json"), 2);
    EXPECT_EQ(run("spectrum --input " + d + "/missing.mtx --d 2"), 2);
    std::ofstream(dir / "bad.mtx") << "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n";
    EXPECT_EQ(run("spectrum --input " + d + "/bad.mtx --d 2"), 2);

    ASSERT_EQ(run("--seed 5 generate --n 400 --values 1 --symmetric --out " + d + "/t --observe-d 20 --obs " + d +
                  "/o.mtx"),
              0);
    EXPECT_EQ(run("predict --truth " + d + "/t --d 20 --out " + d + "/p.json"), 0);
    EXPECT_EQ(run("--seed 2 complete --input " + d + "/o.mtx --d 20 --rank 1 --method avg --truth " + d +
                  "/t --out " + d + "/c.json"),
              0);
    EXPECT_EQ(run("spectrum --input " + d + "/o.mtx --d 20 --k 2 --out " + d + "/s.json"), 0);
    ASSERT_EQ(run("--seed 5 generate --preset two_block --n 400 --values 5,3 --out " + d + "/tb --observe-d 6 "
                  "--mask symmetric --obs " + d + "/tb.mtx"),
              0);
    EXPECT_EQ(run("nb-spectrum --input " + d + "/tb.mtx --dbar 6 --k 3 --truth " + d + "/tb --out " + d + "/nb.json"),
              0);
    EXPECT_EQ(run("oracle-tree --truth " + d + "/tb --d 2 --t 1 --samples 200 --out " + d + "/mc.json"), 0);

    const auto c = json::parse(slurp(dir / "c.json"));
    EXPECT_EQ(c["rank"].get<int>(), 1);
    EXPECT_GT(c["truth"]["left_overlaps"][0][0].get<double>(), 0.8);
    const auto nb = json::parse(slurp(dir / "nb.json"));
    EXPECT_TRUE(nb["pairs"][0]["admissible"].get<bool>());
    const auto mc = json::parse(slurp(dir / "mc.json"));
    EXPECT_TRUE(mc["tc5"].contains("printed_z"));
}

TEST(Binary, ExitCodeMapping) {
    EXPECT_EQ(exit_code(NumericalConsistencyError("x")), 3);
    EXPECT_EQ(exit_code(ParseError("x", 3)), 2);
    EXPECT_EQ(exit_code(ConfigError("x")), 2);
    EXPECT_EQ(exit_code(ContractViolation("x")), 2);
    EXPECT_EQ(exit_code(std::runtime_error("x")), 1);
}
