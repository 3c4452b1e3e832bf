// SPDX-License-Identifier: Apache-2.0
//
// Particle state, background parameters and fields, and the elementary
// samplers shared by all steppers.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace kdmc {

/// One particle. `v` is the sampled velocity; it moves at v / eps.
struct ParticleState
{
    double x{0};
    double v{0};
    double t{0};
};

/// Homogeneous background (sigma, u, T, eps).
class BackgroundParams
{
  public:
    BackgroundParams(double sigma, double u, double temperature, double eps)
        : sigma_{sigma}, u_{u}, temperature_{temperature}, eps_{eps}
    {
        auto positive = [](double value) { return std::isfinite(value) && value > 0; };
        if (!positive(sigma)) {
            throw std::invalid_argument("sigma must be positive and finite");
        }
        if (!std::isfinite(u)) {
            throw std::invalid_argument("u must be finite");
        }
        if (!positive(temperature)) {
            throw std::invalid_argument("temperature must be positive and finite");
        }
        if (!positive(eps)) {
            throw std::invalid_argument("eps must be positive and finite");
        }
    }

    double sigma() const { return sigma_; }
    double u() const { return u_; }
    double temperature() const { return temperature_; }
    double eps() const { return eps_; }

    /// Collision rate sigma / eps^2.
    double rate() const { return sigma_ / (eps_ * eps_); }

    /// Expected collisions over dt.
    double collisionality(double dt) const { return sigma_ * dt / (eps_ * eps_); }

    friend bool operator==(BackgroundParams const&, BackgroundParams const&) = default;

  private:
    double sigma_;
    double u_;
    double temperature_;
    double eps_;
};

/// Field interface for the steppers: parameters at a point plus the cell
/// layout needed to integrate the collision rate along a flight.
template <class F>
concept BackgroundField = requires(F const& f, double x, std::size_t i) {
    { f.lookup(x) } -> std::convertible_to<BackgroundParams>;
    { f.cell_index(x) } -> std::convertible_to<std::size_t>;
    { f.num_cells() } -> std::convertible_to<std::size_t>;
    { f.cell(i) } -> std::convertible_to<BackgroundParams>;
    { f.lower_edge(i) } -> std::convertible_to<double>;
    { f.upper_edge(i) } -> std::convertible_to<double>;
};

/// Same parameters everywhere.
class HomogeneousField
{
  public:
    explicit HomogeneousField(BackgroundParams params) : params_{params} {}

    BackgroundParams const& lookup(double) const { return params_; }
    std::size_t cell_index(double) const { return 0; }
    std::size_t num_cells() const { return 1; }
    BackgroundParams const& cell(std::size_t) const { return params_; }
    double lower_edge(std::size_t) const { return -std::numeric_limits<double>::infinity(); }
    double upper_edge(std::size_t) const { return std::numeric_limits<double>::infinity(); }

  private:
    BackgroundParams params_;
};

/**
 * Piecewise-constant background.
 *
 * Cell i covers [breakpoints[i], breakpoints[i+1]). The first and last cells
 * extend to -inf and +inf, so lookups outside the breakpoints clamp to the
 * nearest cell. All cells must share the same eps.
 */
class PiecewiseConstantField
{
  public:
    PiecewiseConstantField(std::vector<double> breakpoints, std::vector<BackgroundParams> cells)
        : breakpoints_{std::move(breakpoints)}, cells_{std::move(cells)}
    {
        if (cells_.empty()) {
            throw std::invalid_argument("field needs at least one cell");
        }
        if (breakpoints_.size() != cells_.size() + 1) {
            throw std::invalid_argument("field needs cells + 1 breakpoints");
        }
        for (double b : breakpoints_) {
            if (!std::isfinite(b)) {
                throw std::invalid_argument("breakpoints must be finite");
            }
        }
        for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
            if (!(breakpoints_[i] > breakpoints_[i - 1])) {
                throw std::invalid_argument("breakpoints must be strictly increasing");
            }
        }
        for (auto const& c : cells_) {
            if (c.eps() != cells_.front().eps()) {
                throw std::invalid_argument("all cells must share the same eps");
            }
        }
    }

    std::size_t num_cells() const { return cells_.size(); }
    BackgroundParams const& cell(std::size_t i) const { return cells_[i]; }
    std::span<double const> breakpoints() const { return breakpoints_; }

    std::size_t cell_index(double x) const
    {
        // Interior breakpoints only: anything below the second edge is cell 0.
        auto first = breakpoints_.begin() + 1;
        auto last = breakpoints_.end() - 1;
        return static_cast<std::size_t>(std::upper_bound(first, last, x) - first);
    }

    BackgroundParams const& lookup(double x) const { return cells_[cell_index(x)]; }

    double lower_edge(std::size_t i) const
    {
        return i == 0 ? -std::numeric_limits<double>::infinity() : breakpoints_[i];
    }
    double upper_edge(std::size_t i) const
    {
        return i + 1 == cells_.size() ? std::numeric_limits<double>::infinity()
                                      : breakpoints_[i + 1];
    }

  private:
    std::vector<double> breakpoints_;
    std::vector<BackgroundParams> cells_;
};

static_assert(BackgroundField<HomogeneousField>);
static_assert(BackgroundField<PiecewiseConstantField>);

/// Post-collisional velocity: eps*u + sqrt(T) z.
template <VariateSource R>
double sample_maxwellian(BackgroundParams const& params, R& rng)
{
    return params.eps() * params.u() + std::sqrt(params.temperature()) * rng.normal();
}

/// -ln U with U on (0, 1].
template <VariateSource R>
double standard_exponential(R& rng)
{
    return rng.exponential();
}

}  // namespace kdmc
