// SPDX-License-Identifier: Apache-2.0
//
// Wasserstein-1 on the line, ensemble summaries and small statistics helpers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "core.hpp"

namespace kdmc {

struct W1Result
{
    double distance{0};
    std::size_t n{0};
};

/// W1 between two presorted samples of equal size.
inline W1Result w1_sorted(std::span<double const> a, std::span<double const> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("W1 needs samples of equal size");
    }
    if (a.empty()) {
        throw std::invalid_argument("W1 needs nonempty samples");
    }
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += std::abs(a[i] - b[i]);
    }
    return {sum / static_cast<double>(a.size()), a.size()};
}

/// W1 between two equal-size empirical measures (sorted pairing).
inline W1Result w1_empirical(std::span<double const> a, std::span<double const> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("W1 needs samples of equal size");
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return w1_sorted(sa, sb);
}

/**
 * W1 between a discrete law (atoms xs with weights ws, xs sorted, weights
 * summing to one) and N(mean, sd^2), integrating |F - Phi| exactly.
 */
inline double w1_discrete_vs_normal(std::span<double const> xs,
                                    std::span<double const> ws,
                                    double mean,
                                    double sd)
{
    if (xs.empty() || xs.size() != ws.size()) {
        throw std::invalid_argument("discrete law needs matching nonempty atoms and weights");
    }
    if (!(sd > 0)) {
        double sum = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sum += ws[i] * std::abs(xs[i] - mean);
        }
        return sum;
    }
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    double const inv_sqrt_2pi = 1 / std::sqrt(2 * std::numbers::pi);
    auto cdf = [&](double z) { return 0.5 * std::erfc(-z * inv_sqrt2); };
    auto pdf = [&](double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); };
    // Antiderivative of the normal CDF, vanishing at -inf.
    auto primitive = [&](double x) {
        double z = (x - mean) / sd;
        return sd * (z * cdf(z) + pdf(z));
    };

    std::size_t const n = xs.size();
    std::vector<double> big_a(n), big_phi(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = (xs[i] - mean) / sd;
        big_phi[i] = cdf(z);
        big_a[i] = sd * (z * big_phi[i] + pdf(z));
    }

    double total = big_a[0];
    double level = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        level += ws[i];
        double a = xs[i], b = xs[i + 1];
        if (b == a) {
            continue;
        }
        double area = big_a[i + 1] - big_a[i];
        if (level >= big_phi[i + 1]) {
            total += level * (b - a) - area;
        } else if (level <= big_phi[i]) {
            total += area - level * (b - a);
        } else {
            double cross = mean - sd * std::sqrt(2.0) * boost::math::erfc_inv(2 * level);
            cross = std::clamp(cross, a, b);
            double a_cross = primitive(cross);
            total += level * (cross - a) - (a_cross - big_a[i]);
            total += (big_a[i + 1] - a_cross) - level * (b - cross);
        }
    }
    // Upper tail where the discrete CDF is one.
    double z = (xs[n - 1] - mean) / sd;
    total += sd * (pdf(z) - z * 0.5 * std::erfc(z * inv_sqrt2));
    return total;
}

struct HistogramSpec
{
    double lo{-15};
    double hi{15};
    std::size_t bins{100};
};

/// Fixed-range histogram. Samples outside [lo, hi) land in under/overflow.
struct Histogram
{
    HistogramSpec spec;
    std::vector<std::uint64_t> counts;
    std::uint64_t underflow{0};
    std::uint64_t overflow{0};

    double edge(std::size_t i) const
    {
        return spec.lo + (spec.hi - spec.lo) * static_cast<double>(i)
                             / static_cast<double>(spec.bins);
    }

    std::uint64_t total() const
    {
        std::uint64_t n = underflow + overflow;
        for (auto c : counts) {
            n += c;
        }
        return n;
    }
};

inline Histogram make_histogram(std::span<double const> xs, HistogramSpec const& spec)
{
    if (spec.bins == 0 || !(spec.hi > spec.lo)) {
        throw std::invalid_argument("histogram needs bins > 0 and hi > lo");
    }
    Histogram h{spec, std::vector<std::uint64_t>(spec.bins, 0)};
    double scale = static_cast<double>(spec.bins) / (spec.hi - spec.lo);
    for (double x : xs) {
        if (!(x >= spec.lo)) {
            ++h.underflow;
        } else if (!(x < spec.hi)) {
            ++h.overflow;
        } else {
            auto i = static_cast<std::size_t>((x - spec.lo) * scale);
            ++h.counts[std::min(i, spec.bins - 1)];
        }
    }
    return h;
}

struct Counters
{
    std::uint64_t collisions{0};
    double wall_time{0};
};

struct EnsembleSummary
{
    std::size_t n{0};
    double mean{0};
    double variance{0};
    Histogram histogram;
    std::uint64_t collisions_total{0};
    double wall_time{0};
};

/// One-pass (Welford) moments with unbiased variance, histogram, counters.
inline EnsembleSummary
summarize(std::span<double const> positions, HistogramSpec const& spec, Counters counters = {})
{
    if (positions.empty()) {
        throw std::invalid_argument("cannot summarize an empty ensemble");
    }
    double mean = 0;
    double m2 = 0;
    std::size_t n = 0;
    for (double x : positions) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    EnsembleSummary s;
    s.n = n;
    s.mean = mean;
    s.variance = n > 1 ? std::max(m2 / static_cast<double>(n - 1), 0.0) : 0.0;
    s.histogram = make_histogram(positions, spec);
    s.collisions_total = counters.collisions;
    s.wall_time = counters.wall_time;
    return s;
}

inline EnsembleSummary summarize(std::span<ParticleState const> states,
                                 HistogramSpec const& spec,
                                 Counters counters = {})
{
    std::vector<double> xs;
    xs.reserve(states.size());
    for (auto const& s : states) {
        xs.push_back(s.x);
    }
    return summarize(std::span<double const>(xs), spec, counters);
}

/// Moments with standard errors, from a two-pass evaluation.
struct SampleMoments
{
    std::size_t n{0};
    double mean{0};
    double variance{0};  //!< unbiased
    double se_mean{0};
    double se_variance{0};
    double skewness{0};
    double excess_kurtosis{0};
};

inline SampleMoments sample_moments(std::span<double const> xs)
{
    if (xs.size() < 2) {
        throw std::invalid_argument("moments need at least two samples");
    }
    auto n = static_cast<double>(xs.size());
    double mean = 0;
    for (double x : xs) {
        mean += x;
    }
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        double d = x - mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    SampleMoments r;
    r.n = xs.size();
    r.mean = mean;
    r.variance = m2 * n / (n - 1);
    r.se_mean = std::sqrt(r.variance / n);
    r.se_variance = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    if (m2 > 0) {
        r.skewness = m3 / std::pow(m2, 1.5);
        r.excess_kurtosis = m4 / (m2 * m2) - 3;
    }
    return r;
}

/// Least-squares slope of log(y) against log(x).
inline double fit_order(std::span<double const> xs, std::span<double const> ys)
{
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("fit needs equally many x and y values");
    }
    if (xs.size() < 3) {
        throw std::invalid_argument("fit needs at least three points");
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
            throw std::invalid_argument("fit needs finite positive values");
        }
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    auto n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0)) {
        throw std::invalid_argument("fit needs at least two distinct x values");
    }
    return sxy / sxx;
}

struct ChiSquareResult
{
    double statistic{0};
    std::size_t dof{0};
    double p_value{0};
};

/**
 * Pearson goodness of fit of observed counts (index = number of events)
 * against Poisson(mean). Adjacent classes are pooled until each expects at
 * least `min_expected` events; the last class absorbs the upper tail.
 */
inline ChiSquareResult poisson_chi_square(std::span<std::uint64_t const> observed,
                                          double mean,
                                          double min_expected = 5)
{
    std::uint64_t total = 0;
    for (auto c : observed) {
        total += c;
    }
    if (total == 0) {
        throw std::invalid_argument("no observations");
    }
    boost::math::poisson_distribution<double> law(mean);
    auto n = static_cast<double>(total);

    std::vector<double> exp_classes, obs_classes;
    double e_acc = 0, o_acc = 0, e_used = 0;
    std::size_t k = 0;
    // Extend past the observed range until the remaining tail is negligible.
    std::size_t k_max = std::max<std::size_t>(observed.size(),
        static_cast<std::size_t>(mean + 20 * std::sqrt(mean) + 20));
    for (; k < k_max; ++k) {
        e_acc += n * boost::math::pdf(law, static_cast<double>(k));
        o_acc += k < observed.size() ? static_cast<double>(observed[k]) : 0.0;
        if (e_acc >= min_expected) {
            exp_classes.push_back(e_acc);
            obs_classes.push_back(o_acc);
            e_used += e_acc;
            e_acc = o_acc = 0;
        }
    }
    double tail = n - e_used - e_acc;
    e_acc += std::max(tail, 0.0);
    if (!exp_classes.empty()) {
        exp_classes.back() += e_acc;
        obs_classes.back() += o_acc;
    } else {
        exp_classes.push_back(e_acc);
        obs_classes.push_back(o_acc);
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < exp_classes.size(); ++i) {
        double d = obs_classes[i] - exp_classes[i];
        r.statistic += d * d / exp_classes[i];
    }
    r.dof = exp_classes.size() - 1;
    r.p_value = r.dof == 0 ? 1.0 : boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic);
    return r;
}

}  // namespace kdmc
