#include "csklab/harness.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>

using namespace csk;

TEST(DeriveTrialSeed, DeterministicAndDistinct) {
    EXPECT_EQ(derive_trial_seed(42, 7), derive_trial_seed(42, 7));
    EXPECT_NE(derive_trial_seed(42, 7), derive_trial_seed(42, 8));
    EXPECT_NE(derive_trial_seed(42, 7), derive_trial_seed(43, 7));
    std::set<std::uint64_t> seen;
    for (std::uint64_t t = 0; t < 10'000; ++t) seen.insert(derive_trial_seed(1, t));
    EXPECT_EQ(seen.size(), 10'000u);
}

TEST(DeriveTrialSeed, AvalancheOnTrialIndex) {
    double total = 0.0;
    const int n = 10'000;
    for (int t = 0; t < n; ++t) {
        const std::uint64_t a = derive_trial_seed(5, static_cast<std::uint64_t>(t));
        const std::uint64_t b = derive_trial_seed(5, static_cast<std::uint64_t>(t) ^ 1u);
        total += std::popcount(a ^ b);
    }
    EXPECT_GT(total / n, 20.0);
}

TEST(ParseGrid, InclusiveRanges) {
    EXPECT_EQ(parse_grid("0:5:15"), (std::vector<double>{0.0, 5.0, 10.0, 15.0}));
    EXPECT_EQ(parse_grid("2:2:2"), (std::vector<double>{2.0}));
    EXPECT_THROW(parse_grid("0:0:10"), ConfigError);
    EXPECT_THROW(parse_grid("nonsense"), ConfigError);
    EXPECT_THROW(parse_grid("0:5"), ConfigError);
}

TEST(ParseConfig, DefaultsAndOverrides) {
    const auto cfg = parse_config("");
    EXPECT_EQ(cfg.network.n_relays, 0);
    EXPECT_TRUE(cfg.network.p_j.empty());
    EXPECT_EQ(cfg.eb_n0_grid_db, (std::vector<double>{0.0, 5.0, 10.0, 15.0}));
    EXPECT_EQ(cfg.n_bits, 1'000'000u);
    EXPECT_EQ(cfg.master_seed, 1u);

    const auto cfg2 = parse_config(
        "[network]\n"
        "map = pwl\n"
        "beta = 15   # chips per bit\n"
        "relays = 4\n"
        "p_j = 0.5\n"
        "[sweep]\n"
        "grid = 0:5:10\n"
        "n_bits = 50000\n"
        "seed = 99\n"
        "[output]\n"
        "path = out.csv\n");
    EXPECT_EQ(cfg2.network.map.tag, ChaosMap::Pwl);
    EXPECT_EQ(cfg2.network.beta, 15);
    EXPECT_EQ(cfg2.network.n_relays, 4);
    EXPECT_EQ(cfg2.network.p_j, (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
    EXPECT_EQ(cfg2.eb_n0_grid_db, (std::vector<double>{0.0, 5.0, 10.0}));
    EXPECT_EQ(cfg2.n_bits, 50'000u);
    EXPECT_EQ(cfg2.master_seed, 99u);
    EXPECT_EQ(cfg2.output_path, "out.csv");
}

TEST(ParseConfig, ErrorsNameTheOffendingField) {
    try {
        parse_config("[network]\nbeta = banana\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("network.beta"), std::string::npos);
    }
    EXPECT_THROW(parse_config("[network]\nbogus_key = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[bogus]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("x = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[network]\nmap = henon\n"), ConfigError);
}

TEST(ParseConfig, RejectsBadGrids) {
    EXPECT_THROW(parse_config("[sweep]\ngrid = 10:5:0\n"), ConfigError);
    ExperimentConfig cfg = parse_config("");
    cfg.eb_n0_grid_db = {0.0, 5.0, 5.0};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.eb_n0_grid_db = {5.0, 0.0};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.eb_n0_grid_db = {0.0};
    cfg.n_bits = 2;  // < beta
    cfg.network.beta = 5;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(WilsonHalfWidth, Sanity) {
    // Symmetric in k vs n-k, shrinks with n, nonzero at k = 0.
    EXPECT_NEAR(wilson_half_width(50, 100), wilson_half_width(50, 100), 0.0);
    EXPECT_GT(wilson_half_width(0, 100), 0.0);
    EXPECT_LT(wilson_half_width(50, 10'000), wilson_half_width(5, 100));
    EXPECT_NEAR(wilson_half_width(10, 100), wilson_half_width(90, 100), 1e-12);
    // Large-n limit approaches the Wald interval.
    const double p = 0.3;
    const std::size_t n = 10'000'000;
    const double wald = 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    EXPECT_NEAR(wilson_half_width(static_cast<std::size_t>(p * n), n), wald, 1e-3 * wald);
}

TEST(ExpectedAlpha, MatchesHandComputation) {
    NetworkConfig net;
    net.n_relays = 2;
    net.p_s = 2.0;
    net.p_j = {0.5, 1.5};
    net.var_sd = 1.0;
    net.var_rd = 3.0;
    net.beta = 10;
    net.n0 = 1.0;
    EXPECT_DOUBLE_EQ(expected_alpha(net), (2.0 + 0.5 * 3.0 + 1.5 * 3.0) * 10.0);
    EXPECT_NEAR(n0_for_eb_n0_db(net, 10.0), expected_alpha(net) / 10.0, 1e-12);
    EXPECT_DOUBLE_EQ(n0_for_eb_n0_db(net, 0.0), expected_alpha(net));
}

TEST(RunSweep, CsvIsThreadCountInvariant) {
    ExperimentConfig cfg = parse_config(
        "[network]\nbeta = 5\nrelays = 1\n"
        "[sweep]\ngrid = 0:5:5\nn_bits = 20000\nmin_errors = 50\nseed = 7\n");
    const auto csv1 = curve_to_csv(run_sweep(cfg, 1));
    const auto csv3 = curve_to_csv(run_sweep(cfg, 3));
    EXPECT_EQ(csv1, csv3);
    EXPECT_NE(csv1.find("eb_n0_db,method,ber,ci_half_width,n_bits,n_errors,map,beta,n_relays,seed"),
              std::string::npos);
    EXPECT_NE(csv1.find("simulated"), std::string::npos);
    EXPECT_NE(csv1.find("quadrature"), std::string::npos);
    EXPECT_NE(csv1.find("mgf_pade"), std::string::npos);
}

TEST(RunSweep, RepeatRunsAreByteIdentical) {
    ExperimentConfig cfg = parse_config(
        "[network]\nbeta = 5\n[sweep]\ngrid = 0:5:5\nn_bits = 10000\nmin_errors = 20\nseed = 11\n");
    EXPECT_EQ(curve_to_csv(run_sweep(cfg, 2)), curve_to_csv(run_sweep(cfg, 2)));
}

TEST(FitStudy, ProducesJsonAndHistogram) {
    ExperimentConfig cfg = parse_config("[network]\nbeta = 5\n[sweep]\nn_bits = 20000\nseed = 3\n");
    cfg.mode = RunMode::Fit;
    const auto r = run_fit_study(cfg, 1);
    const auto j = fit_report_to_json(r);
    EXPECT_EQ(j.at("map"), "cpf");
    EXPECT_EQ(j.at("beta"), 5);
    EXPECT_EQ(j.at("n_samples"), 20'000u);
    EXPECT_GT(j.at("v").get<double>(), 0.0);
    EXPECT_GT(j.at("ks_ggamma").get<double>(), 0.0);
    EXPECT_FALSE(r.histogram.empty());
    const auto csv = histogram_to_csv(r.histogram);
    EXPECT_NE(csv.find("bin_left,bin_right,density"), std::string::npos);

    cfg.n_bits = 100;
    EXPECT_THROW(run_fit_study(cfg, 1), ConfigError);
}

TEST(CollectAlphaParallel, ThreadCountInvariant) {
    NetworkConfig net;
    net.beta = 5;
    net.n0 = 1.0;
    const auto a = collect_alpha_parallel(net, 100'000, 13, 1, 1);
    const auto b = collect_alpha_parallel(net, 100'000, 13, 1, 4);
    EXPECT_EQ(a.values, b.values);
}
