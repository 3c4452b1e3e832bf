// SPDX-License-Identifier: Apache-2.0
//
// Kinetic-diffusion stepper and the limiting random walk.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "core.hpp"
#include "kinetic.hpp"
#include "moments.hpp"

namespace kdmc {

struct KdStepRecord
{
    ParticleState final_state;
    std::size_t collisions_executed{0};
    double diffusive_time{0};
    double kinetic_time{0};
};

/// Gaussian increment over theta with the moments conditioned on v_next.
template <VariateSource R>
double diffusive_substep(double v_next, double theta, BackgroundParams const& params, R& rng)
{
    if (!(theta >= 0)) {
        throw std::invalid_argument("substep duration must be non-negative");
    }
    if (theta == 0) {
        return 0;
    }
    StepMoments m = conditioned_moments(params, theta, v_next);
    return m.mean + std::sqrt(m.variance) * rng.normal();
}

namespace detail {

// Number of dt steps in [t0, t_end]; throws unless the span is a multiple.
inline std::int64_t aligned_step_count(double t0, double dt, double t_end)
{
    if (!(dt > 0) || !std::isfinite(dt)) {
        throw std::invalid_argument("dt must be positive");
    }
    double span = t_end - t0;
    if (!(span >= 0)) {
        throw std::invalid_argument("t_end precedes the particle time");
    }
    double steps = std::round(span / dt);
    if (std::abs(steps * dt - span) > 1e-9 * std::max(span, dt)) {
        throw std::invalid_argument("t_end is not aligned to the step grid");
    }
    return static_cast<std::int64_t>(steps);
}

}  // namespace detail

/**
 * Kinetic flight until the first collision, then a diffusive substep over
 * the rest of the step in which the collision fell. The clock then resumes
 * at that step's end with the collision velocity.
 */
template <BackgroundField F, VariateSource R>
KdStepRecord simulate_kd(ParticleState state, double dt, double t_end, F const& field, R& rng)
{
    std::int64_t const steps = detail::aligned_step_count(state.t, dt, t_end);
    double const t0 = state.t;
    double const inv_eps = 1.0 / field.lookup(state.x).eps();
    KdStepRecord rec;

    std::int64_t n = 0;
    while (n < steps) {
        state.t = t0 + static_cast<double>(n) * dt;
        double remaining = t_end - state.t;
        double dtau = sample_collision_time(state, field, rng);
        if (dtau >= remaining) {
            state.x += state.v * inv_eps * remaining;
            rec.kinetic_time += remaining;
            break;
        }
        state.x += state.v * inv_eps * dtau;
        rec.kinetic_time += dtau;

        // Index (relative to n) of the step holding the collision.
        std::int64_t const left = steps - n;
        auto k = static_cast<std::int64_t>(std::floor(dtau / dt));
        if (k > left - 1) {
            k = left - 1;
        }
        double theta = static_cast<double>(k + 1) * dt - dtau;
        if (theta <= 0 && k + 1 < left) {
            ++k;
            theta = static_cast<double>(k + 1) * dt - dtau;
        }
        theta = std::max(theta, 0.0);

        BackgroundParams const& local = field.lookup(state.x);
        double v_next = sample_maxwellian(local, rng);
        state.x += diffusive_substep(v_next, theta, local, rng);
        state.v = v_next;
        rec.diffusive_time += theta;
        ++rec.collisions_executed;
        n += k + 1;
    }
    state.t = t_end;
    rec.final_state = state;
    return rec;
}

/// Drift-diffusion random walk; the velocity is carried through unchanged.
template <VariateSource R>
ParticleState simulate_random_walk(
    ParticleState state, double dt, double t_end, BackgroundParams const& params, R& rng)
{
    std::int64_t const steps = detail::aligned_step_count(state.t, dt, t_end);
    double const drift = params.u() * dt;
    double const spread = std::sqrt(2 * params.temperature() / params.sigma() * dt);
    for (std::int64_t n = 0; n < steps; ++n) {
        state.x += drift + spread * rng.normal();
    }
    state.t = t_end;
    return state;
}

}  // namespace kdmc
