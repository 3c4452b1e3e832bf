// SPDX-License-Identifier: Apache-2.0
#include "kdmc/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "kdmc/rng.hpp"

using namespace kdmc;

namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n, double mean = 0, double sd = 1)
{
    RngStream rng(seed, 0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = mean + sd * rng.normal();
    }
    return v;
}

}  // namespace

TEST(W1, IdentityAndTranslation)
{
    auto a = normals(61, 1000);
    EXPECT_EQ(w1_empirical(a, a).distance, 0.0);
    auto b = a;
    for (auto& x : b) {
        x += 0.37;
    }
    EXPECT_NEAR(w1_empirical(a, b).distance, 0.37, 1e-14);
    EXPECT_NEAR(w1_empirical(b, a).distance, 0.37, 1e-14);
    EXPECT_EQ(w1_empirical(a, b).n, 1000u);
}

TEST(W1, NormalAgainstPointMass)
{
    auto a = normals(62, 1000000);
    std::vector<double> zero(a.size(), 0.0);
    EXPECT_NEAR(w1_empirical(a, zero).distance, std::sqrt(2 / std::numbers::pi), 0.003);
}

TEST(W1, RejectsMismatchedCounts)
{
    std::vector<double> a{1, 2}, b{1}, none;
    EXPECT_THROW(w1_empirical(a, b), std::invalid_argument);
    EXPECT_THROW(w1_empirical(none, none), std::invalid_argument);
}

TEST(W1, MetricProperties)
{
    for (std::uint64_t t = 0; t < 20; ++t) {
        auto a = normals(100 + t, 500, 0.0, 1.0);
        auto b = normals(200 + t, 500, 0.5, 2.0);
        auto c = normals(300 + t, 500, -1.0, 0.5);
        double ab = w1_empirical(a, b).distance;
        double bc = w1_empirical(b, c).distance;
        double ac = w1_empirical(a, c).distance;
        EXPECT_LE(ac, ab + bc + 1e-12);
        EXPECT_EQ(ab, w1_empirical(b, a).distance);

        auto ra = a, rb = b;
        std::reverse(ra.begin(), ra.end());
        std::rotate(rb.begin(), rb.begin() + 123, rb.end());
        EXPECT_EQ(w1_empirical(ra, rb).distance, ab);

        for (auto& x : ra) {
            x *= 2.5;
        }
        for (auto& x : rb) {
            x *= 2.5;
        }
        EXPECT_NEAR(w1_empirical(ra, rb).distance, 2.5 * ab, 1e-12);
    }
}

TEST(W1, DiscreteAgainstNormal)
{
    double const sqrt_2_over_pi = std::sqrt(2 / std::numbers::pi);
    std::vector<double> x{0.0}, w{1.0};
    EXPECT_NEAR(w1_discrete_vs_normal(x, w, 0.0, 1.0), sqrt_2_over_pi, 1e-14);
    EXPECT_NEAR(w1_discrete_vs_normal(x, w, 0.0, 3.0), 3 * sqrt_2_over_pi, 1e-14);
    // Far from the atom the distance is the mean offset.
    EXPECT_NEAR(w1_discrete_vs_normal(x, w, 40.0, 1.0), 40.0, 1e-12);
    // Degenerate normal reduces to a weighted mean of distances.
    std::vector<double> xs{-1, 2}, ws{0.25, 0.75};
    EXPECT_NEAR(w1_discrete_vs_normal(xs, ws, 0.5, 0.0), 0.25 * 1.5 + 0.75 * 1.5, 1e-15);

    // Two symmetric atoms at +-1 against N(0,1), by independent quadrature.
    std::vector<double> pm{-1, 1}, half{0.5, 0.5};
    double h = 1e-4, sum = 0;
    for (double t = -12; t < 12; t += h) {
        double mid = t + h / 2;
        double f = mid < -1 ? 0 : (mid < 1 ? 0.5 : 1);
        sum += std::abs(f - 0.5 * std::erfc(-mid / std::sqrt(2.0))) * h;
    }
    EXPECT_NEAR(w1_discrete_vs_normal(pm, half, 0.0, 1.0), sum, 1e-7);

    // Many equal atoms drawn from the normal itself: distance near zero.
    auto a = normals(63, 200000);
    std::sort(a.begin(), a.end());
    std::vector<double> eq(a.size(), 1.0 / a.size());
    EXPECT_LT(w1_discrete_vs_normal(a, eq, 0.0, 1.0), 0.01);
}

TEST(Summarize, SmallEnsembles)
{
    std::vector<double> one{3.0};
    auto s1 = summarize(std::span<double const>(one), HistogramSpec{});
    EXPECT_EQ(s1.mean, 3.0);
    EXPECT_EQ(s1.variance, 0.0);

    std::vector<double> two{-1.0, 1.0};
    auto s2 = summarize(std::span<double const>(two), HistogramSpec{}, {7, 0.5});
    EXPECT_EQ(s2.mean, 0.0);
    EXPECT_EQ(s2.variance, 2.0);
    EXPECT_EQ(s2.collisions_total, 7u);
    EXPECT_EQ(s2.wall_time, 0.5);

    std::vector<double> none;
    EXPECT_THROW(summarize(std::span<double const>(none), HistogramSpec{}), std::invalid_argument);
}

TEST(Summarize, NormalEnsembleAndHistogram)
{
    auto a = normals(64, 1000000, 0.0, 1.0);
    a.push_back(100);
    a.push_back(-100);
    auto s = summarize(std::span<double const>(a), HistogramSpec{-15, 15, 100});
    EXPECT_NEAR(s.mean, 0.0, 0.004);
    EXPECT_NEAR(s.variance, 1.0 + 2e4 / a.size(), 0.006);
    EXPECT_EQ(s.histogram.total(), a.size());
    EXPECT_EQ(s.histogram.overflow, 1u);
    EXPECT_EQ(s.histogram.underflow, 1u);
    EXPECT_EQ(s.histogram.counts.size(), 100u);
    EXPECT_DOUBLE_EQ(s.histogram.edge(50), 0.0);
    EXPECT_EQ(s.n, a.size());
}

TEST(Summarize, StatesOverload)
{
    std::vector<ParticleState> states{{1, 0, 0}, {3, 0, 0}};
    auto s = summarize(std::span<ParticleState const>(states), HistogramSpec{0, 4, 4});
    EXPECT_EQ(s.mean, 2.0);
    EXPECT_EQ(s.histogram.counts[1], 1u);
    EXPECT_EQ(s.histogram.counts[3], 1u);
}

TEST(FitOrder, PowerLaws)
{
    std::vector<double> xs{0.01, 0.03, 0.1, 0.3, 1.0};
    std::vector<double> lin = xs, pow15;
    for (double x : xs) {
        pow15.push_back(std::pow(x, 1.5));
    }
    EXPECT_NEAR(fit_order(xs, lin), 1.0, 1e-12);
    EXPECT_NEAR(fit_order(xs, pow15), 1.5, 1e-12);

    RngStream rng(65, 0);
    std::vector<double> noisy;
    for (double x : xs) {
        noisy.push_back(3 * x * x * (1 + 0.01 * rng.normal()));
    }
    EXPECT_NEAR(fit_order(xs, noisy), 2.0, 0.05);
}

TEST(FitOrder, RejectsBadInput)
{
    std::vector<double> two{1, 2}, three{1, 2, 3}, bad{1, -2, 3}, flat{2, 2, 2};
    EXPECT_THROW(fit_order(two, two), std::invalid_argument);
    EXPECT_THROW(fit_order(three, bad), std::invalid_argument);
    EXPECT_THROW(fit_order(bad, three), std::invalid_argument);
    EXPECT_THROW(fit_order(flat, three), std::invalid_argument);
    EXPECT_THROW(fit_order(three, two), std::invalid_argument);
}

TEST(PoissonChiSquare, AcceptsPoissonRejectsOthers)
{
    RngStream rng(66, 0);
    std::vector<std::uint64_t> good(40, 0), bad(40, 0);
    for (int i = 0; i < 200000; ++i) {
        // Poisson(2) by counting unit-rate arrivals in [0, 2].
        double t = rng.exponential();
        unsigned k = 0;
        while (t < 2) {
            ++k;
            t += rng.exponential();
        }
        ++good[k];
        ++bad[std::min<unsigned>(k + (rng.uniform() < 0.05 ? 1 : 0), 39)];
    }
    auto g = poisson_chi_square(good, 2.0);
    EXPECT_GT(g.p_value, 1e-3);
    EXPECT_GE(g.dof, 8u);
    EXPECT_LT(poisson_chi_square(bad, 2.0).p_value, 1e-6);
}
