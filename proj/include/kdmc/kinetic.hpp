// SPDX-License-Identifier: Apache-2.0
//
// Reference velocity-jump stepper.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace kdmc {

struct FlightSegment
{
    double duration;
    double v;
};

struct KineticStepRecord
{
    ParticleState final_state;
    std::size_t collisions_executed{0};
    std::optional<std::vector<FlightSegment>> flight_segments;
};

/**
 * Time to the next collision from the current state.
 *
 * One exponential budget is spent along the flight, cell by cell, so the
 * result is exact for piecewise-constant rates.
 */
template <BackgroundField F, VariateSource R>
double sample_collision_time(ParticleState const& state, F const& field, R& rng)
{
    double budget = standard_exponential(rng);
    std::size_t cell = field.cell_index(state.x);
    if (field.num_cells() == 1) {
        return budget / field.cell(cell).rate();
    }

    double speed = state.v / field.cell(cell).eps();
    double pos = state.x;
    double elapsed = 0;
    while (true) {
        double rate = field.cell(cell).rate();
        double edge = speed > 0 ? field.upper_edge(cell) : field.lower_edge(cell);
        if (speed == 0 || !std::isfinite(edge)) {
            return elapsed + budget / rate;
        }
        double to_edge = std::max((edge - pos) / speed, 0.0);
        double spent = rate * to_edge;
        if (spent >= budget) {
            return elapsed + budget / rate;
        }
        budget -= spent;
        elapsed += to_edge;
        pos = edge;
        cell = speed > 0 ? cell + 1 : cell - 1;
    }
}

/// Free flights and Maxwellian resampling up to t_end.
template <BackgroundField F, VariateSource R>
KineticStepRecord simulate_kinetic(ParticleState state,
                                   double t_end,
                                   F const& field,
                                   R& rng,
                                   bool record_segments = false)
{
    if (!(t_end >= state.t)) {
        throw std::invalid_argument("t_end precedes the particle time");
    }
    KineticStepRecord rec;
    if (record_segments) {
        rec.flight_segments.emplace();
    }
    double const inv_eps = 1.0 / field.lookup(state.x).eps();

    while (true) {
        double remaining = t_end - state.t;
        if (remaining <= 0) {
            break;
        }
        double dtau = sample_collision_time(state, field, rng);
        if (dtau >= remaining) {
            state.x += state.v * inv_eps * remaining;
            state.t = t_end;
            if (record_segments) {
                rec.flight_segments->push_back({remaining, state.v});
            }
            break;
        }
        state.x += state.v * inv_eps * dtau;
        state.t += dtau;
        if (record_segments) {
            rec.flight_segments->push_back({dtau, state.v});
        }
        state.v = sample_maxwellian(field.lookup(state.x), rng);
        ++rec.collisions_executed;
    }
    if (record_segments && rec.flight_segments->empty()) {
        rec.flight_segments->push_back({0.0, state.v});
    }
    state.t = t_end;
    rec.final_state = state;
    return rec;
}

}  // namespace kdmc
