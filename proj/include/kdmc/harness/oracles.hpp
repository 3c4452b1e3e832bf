// SPDX-License-Identifier: Apache-2.0
//
// Brute-force samplers of single-step increments with a pinned final
// velocity, used as references for the closed forms and the KD substep.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "../core.hpp"
#include "../kd.hpp"
#include "../metrics.hpp"
#include "../rng.hpp"
#include "parallel.hpp"

namespace kdmc {

struct PinnedOptions
{
    std::optional<double> v_initial;  //!< unset: drawn from the Maxwellian
    bool at_least_one{false};         //!< force a collision inside the step
};

/**
 * Kinetic increment over dt whose last flight moves at v_final.
 *
 * Collision times and intermediate velocities are drawn as usual. With no
 * collision the whole step uses v_final.
 */
template <VariateSource R>
double pinned_increment(BackgroundParams const& p,
                        double dt,
                        double v_final,
                        R& rng,
                        PinnedOptions const& opts = {})
{
    double const rate = p.rate();
    double const inv_eps = 1.0 / p.eps();
    double tau;
    if (opts.at_least_one) {
        // First collision time truncated to [0, dt].
        double reach = one_minus_exp(rate * dt);
        tau = std::min(-std::log1p(-rng.uniform() * reach) / rate, dt);
    } else {
        tau = standard_exponential(rng) / rate;
        if (tau >= dt) {
            return v_final * inv_eps * dt;
        }
    }
    double v = opts.v_initial ? *opts.v_initial : sample_maxwellian(p, rng);
    double x = v * inv_eps * tau;
    double remaining = dt - tau;
    while (true) {
        tau = standard_exponential(rng) / rate;
        if (tau >= remaining) {
            return x + v_final * inv_eps * remaining;
        }
        x += sample_maxwellian(p, rng) * inv_eps * tau;
        remaining -= tau;
    }
}

/// KD increment over one step with the collision velocity pinned to v_final.
template <VariateSource R>
double pinned_kd_increment(BackgroundParams const& p,
                           double dt,
                           double v_final,
                           R& rng,
                           std::optional<double> v_initial = std::nullopt)
{
    double tau = standard_exponential(rng) / p.rate();
    if (tau >= dt) {
        return v_final / p.eps() * dt;
    }
    double v = v_initial ? *v_initial : sample_maxwellian(p, rng);
    return v / p.eps() * tau + diffusive_substep(v_final, dt - tau, p, rng);
}

/// Sample moments of n pinned increments; path i uses stream i of `seed`.
inline SampleMoments oracle_conditioned_increment(BackgroundParams const& p,
                                                  double dt,
                                                  double v_final,
                                                  std::uint64_t n,
                                                  std::uint64_t seed,
                                                  unsigned threads = 1)
{
    if (n < 10000) {
        throw std::invalid_argument("oracle needs at least 10^4 paths");
    }
    std::vector<double> dx(n);
    parallel_for(n, threads, [&](std::size_t i) {
        RngStream rng(seed, i);
        dx[i] = pinned_increment(p, dt, v_final, rng);
    });
    return sample_moments(dx);
}

}  // namespace kdmc
