// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kdmc/harness/cli.hpp"
#include "kdmc/harness/config.hpp"
#include "kdmc/harness/csv.hpp"
#include "kdmc/harness/experiments.hpp"
#include "kdmc/harness/oracles.hpp"

using namespace kdmc;
namespace fs = std::filesystem;

namespace {

class TempDir
{
  public:
    TempDir()
    {
        path_ = fs::temp_directory_path()
                / ("kdmc_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed())
                   + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }

    std::string write(std::string const& name, std::string const& text) const
    {
        auto p = path_ / name;
        std::ofstream(p) << text;
        return p.string();
    }
    std::string file(std::string const& name) const { return (path_ / name).string(); }

  private:
    fs::path path_;
};

std::string slurp(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ConfigError::Kind config_error_kind(std::string const& text)
{
    try {
        parse_config_text(text);
    } catch (ConfigError const& e) {
        return e.kind();
    }
    ADD_FAILURE() << "config was accepted: " << text;
    return ConfigError::Kind::malformed;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr)
{
    std::ostringstream out, err;
    int code = run_cli(std::move(args), out, err);
    if (out_text) {
        *out_text = out.str();
    }
    return code;
}

}  // namespace

TEST(Config, MinimalHistogramRoundTrips)
{
    auto cfg = parse_config_text(R"({"experiment": "histogram", "seed": 1})");
    EXPECT_EQ(cfg.experiment, Experiment::histogram);
    EXPECT_EQ(cfg.seed, 1u);
    EXPECT_EQ(cfg.particles, 100000u);
    EXPECT_EQ(cfg.eps_grid, (std::vector<double>{0.1, 1, 10}));
    EXPECT_EQ(cfg.histogram.bins, 100u);
    EXPECT_EQ(cfg.histogram.lo, -15);

    auto again = config_from_json(config_to_json(cfg));
    EXPECT_EQ(again, cfg);
    for (auto e : all_experiments) {
        auto c = default_config(e);
        c.seed = 9;
        EXPECT_EQ(config_from_json(config_to_json(c)), c) << to_string(e);
    }
}

TEST(Config, OverridesAndNesting)
{
    auto cfg = parse_config_text(R"({"experiment": "single-step-high", "seed": 3,
        "particles": 1000, "final_velocity": 1.5, "collisionality_grid": [10, 100],
        "threads": 2})");
    EXPECT_EQ(cfg.particles, 1000u);
    EXPECT_EQ(cfg.final_velocity, 1.5);
    EXPECT_EQ(cfg.collisionality_grid.size(), 2u);
    EXPECT_EQ(cfg.threads, 2u);

    auto h = parse_config_text(
        R"({"experiment": "histogram", "seed": 3, "histogram": {"lo": -5, "hi": 5, "bins": 10}})");
    EXPECT_EQ(h.histogram.bins, 10u);
    EXPECT_EQ(h.histogram.hi, 5);
}

TEST(Config, Rejections)
{
    using K = ConfigError::Kind;
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1)"), K::malformed);
    EXPECT_EQ(config_error_kind(R"([1, 2])"), K::malformed);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram"})"), K::missing_field);
    EXPECT_EQ(config_error_kind(R"({"seed": 1})"), K::missing_field);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1, "partcles": 5})"),
              K::unknown_key);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1, "bootstrap": 5})"),
              K::unknown_key);
    EXPECT_EQ(config_error_kind(
                  R"({"experiment": "histogram", "seed": 1, "histogram": {"width": 1}})"),
              K::unknown_key);
    EXPECT_EQ(config_error_kind(R"({"experiment": "nope", "seed": 1})"), K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": -1})"), K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1.5})"), K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1, "particles": 0})"),
              K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1, "eps_grid": [1, 0.1]})"),
              K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1, "eps_grid": []})"),
              K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "histogram", "seed": 1, "sigma": "1"})"),
              K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "speedup", "seed": 1, "dt": 0.3})"),
              K::invalid_value);
    EXPECT_EQ(config_error_kind(R"({"experiment": "speedup", "seed": 1, "temperature": 0})"),
              K::invalid_value);
}

TEST(Csv, FormatsWithFullPrecision)
{
    CsvTable t;
    t.header = {"a", "b", "c"};
    t.add_row({0.1, std::int64_t{42}, std::string("x")});
    t.add_row({1.0 / 3.0, std::int64_t{-1}, std::string("y")});
    EXPECT_EQ(to_csv_string(t), "a,b,c\n0.1,42,x\n0.3333333333333333,-1,y\n");
    EXPECT_THROW(t.add_row({1.0}), std::logic_error);
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_EQ(t.number(1, "b"), -1.0);
}

TEST(Csv, UnwritablePath)
{
    CsvTable t;
    t.header = {"a"};
    EXPECT_THROW(emit_csv(t, "/nonexistent-dir/sub/out.csv"), IoError);
}

TEST(Oracle, DeterministicFlightWithoutCollisions)
{
    BackgroundParams p(1e-12, 0, 1, 1);
    auto m = oracle_conditioned_increment(p, 2.0, 0.7, 10000, 71);
    EXPECT_NEAR(m.mean, 1.4, 1e-9);
    EXPECT_LT(m.variance, 1e-18);
    EXPECT_THROW(oracle_conditioned_increment(p, 2.0, 0.7, 100, 71), std::invalid_argument);
}

TEST(Oracle, MatchesClosedForms)
{
    BackgroundParams p(1, 0, 1, 1);
    auto m = oracle_conditioned_increment(p, 1.0, 1.0, 1000000, 72, 2);
    EXPECT_NEAR(m.mean, 1 - std::exp(-1.0), 4 * m.se_mean);
    EXPECT_NEAR(m.mean, mean_conditioned(p, 1.0, 1.0), 4 * m.se_mean);
    EXPECT_NEAR(m.variance, var_conditioned(p, 1.0, 1.0), 4 * m.se_variance);
}

TEST(Oracle, ForcedCollisionAndPinnedKd)
{
    // Forcing a collision removes the no-collision atom; mixing the atom back
    // in with weight e^{-a} must reproduce the conditioned mean.
    BackgroundParams p(1, 0.3, 1, 1);
    double dt = 0.8, nu = 1.2;
    double p0 = std::exp(-p.rate() * dt);
    std::vector<double> q(400000), kd(400000);
    for (std::size_t i = 0; i < q.size(); ++i) {
        RngStream rng(73, i);
        q[i] = pinned_increment(p, dt, nu, rng, {.v_initial = std::nullopt, .at_least_one = true});
        RngStream kd_rng(74, i);
        kd[i] = pinned_kd_increment(p, dt, nu, kd_rng);
    }
    auto mq = sample_moments(q);
    double mixed = p0 * nu * dt + (1 - p0) * mq.mean;
    EXPECT_NEAR(mixed, mean_conditioned(p, dt, nu), 4 * (1 - p0) * mq.se_mean);
    auto mk = sample_moments(kd);
    EXPECT_NEAR(mk.mean, mean_conditioned(p, dt, nu), 4 * mk.se_mean);
}

namespace {

ExperimentConfig small(Experiment e, unsigned threads)
{
    auto c = default_config(e);
    c.seed = 2024;
    c.threads = threads;
    switch (e) {
    case Experiment::single_step_low:
        c.particles = 400;
        c.dt_grid = {0.05, 0.5};
        c.inner_samples = 32;
        c.velocity_bins = 4;
        break;
    case Experiment::single_step_high:
        c.particles = 3000;
        c.collisionality_grid = {10, 100};
        c.bootstrap = 3;
        break;
    case Experiment::histogram:
        c.particles = 2000;
        c.histogram.bins = 10;
        break;
    case Experiment::speedup:
        c.particles = 500;
        c.collisionality_grid = {0.1, 10};
        c.repetitions = 1;
        break;
    case Experiment::moments_check:
        c.particles = 2000;
        c.collisionality_grid = {1};
        c.temperature_grid = {1};
        c.drift_grid = {1};
        c.final_velocity_grid = {0};
        break;
    case Experiment::constants_check: break;
    }
    return c;
}

// The speedup table ends in three timing columns.
std::string comparable_csv(ExperimentResult const& r, Experiment e)
{
    if (e != Experiment::speedup) {
        return to_csv_string(r.table);
    }
    CsvTable t = r.table;
    for (auto& row : t.rows) {
        row.resize(row.size() - 3);
    }
    t.header.resize(t.header.size() - 3);
    return to_csv_string(t);
}

}  // namespace

TEST(Experiments, ReplayIsIndependentOfThreads)
{
    for (auto e : all_experiments) {
        if (e == Experiment::moments_check) {
            continue;  // oracle needs 10^4 paths; covered below
        }
        auto one = run_experiment(small(e, 1));
        auto again = run_experiment(small(e, 1));
        auto three = run_experiment(small(e, 3));
        EXPECT_EQ(comparable_csv(one, e), comparable_csv(again, e)) << to_string(e);
        EXPECT_EQ(comparable_csv(one, e), comparable_csv(three, e)) << to_string(e);
    }
    auto m = small(Experiment::moments_check, 1);
    m.particles = 10000;
    auto m3 = m;
    m3.threads = 4;
    EXPECT_EQ(to_csv_string(run_experiment(m).table), to_csv_string(run_experiment(m3).table));
}

TEST(Experiments, TableShapes)
{
    auto low = run_experiment(small(Experiment::single_step_low, 1));
    EXPECT_EQ(low.table.header, (std::vector<std::string>{"dt", "w1_cond_v_theta", "w1_cond_v",
                                                          "bound"}));
    EXPECT_EQ(low.table.rows.size(), 2u);
    EXPECT_GT(low.table.number(0, "w1_cond_v_theta"), 0.0);

    auto hist = run_experiment(small(Experiment::histogram, 1));
    // 10 bins + underflow, overflow, mean, std, w1, collisions per eps.
    EXPECT_EQ(hist.table.rows.size(), 3u * 16);
    std::int64_t total = 0;
    for (std::size_t r = 0; r < 12; ++r) {
        total += std::get<std::int64_t>(hist.table.rows[r][hist.table.column("kinetic")]);
    }
    EXPECT_EQ(total, 2000);

    auto consts = run_experiment(small(Experiment::constants_check, 1));
    EXPECT_TRUE(consts.passed());
    EXPECT_EQ(consts.table.rows.size(), 3u);
}

TEST(Experiments, HighCollisionalEstimateIsStableUnderDoubling)
{
    auto c = default_config(Experiment::single_step_high);
    c.seed = 11;
    c.collisionality_grid = {10, 30};
    c.particles = 50000;
    auto base = run_single_step_high(c).table;
    c.particles = 100000;
    auto doubled = run_single_step_high(c).table;
    for (std::size_t r = 0; r < base.rows.size(); ++r) {
        double change = std::abs(doubled.number(r, "w1") - base.number(r, "w1"));
        EXPECT_LT(change, 3 * base.number(r, "bootstrap_se")) << "row " << r;
        EXPECT_GT(base.number(r, "noise_floor"), 0.0);
    }
}

TEST(Cli, ExitCodes)
{
    TempDir dir;
    auto good = dir.write("c.json", R"({"experiment": "constants-check", "seed": 1})");
    auto bad_json = dir.write("m.json", R"({"experiment": )");
    auto no_seed = dir.write("s.json", R"({"experiment": "constants-check"})");
    auto unknown = dir.write("u.json", R"({"experiment": "constants-check", "seed": 1, "x": 1})");
    auto invalid = dir.write("i.json", R"({"experiment": "constants-check", "seed": 1,
                                          "quadrature_panels": 0})");

    std::string text;
    EXPECT_EQ(cli({"constants-check", "--config", good}, &text), 0);
    EXPECT_EQ(text.rfind("quantity,value,refined,target,tolerance,pass\n", 0), 0u);

    auto out = dir.file("out.csv");
    EXPECT_EQ(cli({"constants-check", "--config", good, "--out", out}), 0);
    EXPECT_EQ(slurp(out), text);

    EXPECT_EQ(cli({"constants-check", "--config", bad_json}), 3);
    EXPECT_EQ(cli({"constants-check", "--config", no_seed}), 4);
    EXPECT_EQ(cli({"constants-check", "--config", unknown}), 5);
    EXPECT_EQ(cli({"constants-check", "--config", invalid}), 6);
    EXPECT_EQ(cli({"histogram", "--config", good}), 6);
    EXPECT_EQ(cli({"constants-check", "--config", dir.file("missing.json")}), 7);
    EXPECT_EQ(cli({"constants-check", "--config", good, "--out", "/nonexistent-dir/x.csv"}), 7);
    EXPECT_EQ(cli({"bogus", "--config", good}), 2);
    EXPECT_EQ(cli({"constants-check"}), 2);
    EXPECT_EQ(cli({"constants-check", "--config", good, "--threads", "0"}), 2);
}

TEST(Cli, SelfCheckFailureAndOverrides)
{
    TempDir dir;
    // A tolerance this tight cannot hold for a finite sample.
    auto cfg = dir.write("m.json", R"({"experiment": "moments-check", "seed": 5,
        "particles": 10000, "collisionality_grid": [1], "temperature_grid": [1],
        "drift_grid": [0], "final_velocity_grid": [0], "se_tolerance": 1e-9})");
    EXPECT_EQ(cli({"moments-check", "--config", cfg}), 9);

    auto hist = dir.write("h.json", R"({"experiment": "histogram", "seed": 5,
        "eps_grid": [1], "histogram": {"lo": -3, "hi": 3, "bins": 2}})");
    std::string a, b, c;
    EXPECT_EQ(cli({"histogram", "--config", hist, "--particles", "300"}, &a), 0);
    EXPECT_EQ(cli({"histogram", "--config", hist, "--particles", "300", "--threads", "2"}, &b), 0);
    EXPECT_EQ(cli({"histogram", "--config", hist, "--particles", "300", "--seed", "6"}, &c), 0);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

#ifdef KDMC_CLI_PATH
TEST(Cli, BinaryReportsExitCodes)
{
    TempDir dir;
    auto no_seed = dir.write("s.json", R"({"experiment": "constants-check"})");
    std::string cmd = std::string(KDMC_CLI_PATH) + " constants-check --config " + no_seed
                      + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 4);
}
#endif
