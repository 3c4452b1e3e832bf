// SPDX-License-Identifier: Apache-2.0
//
// Closed-form increment moments, error bounds, and quadrature checks of the
// constants entering the bounds.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "core.hpp"

namespace kdmc {

struct StepMoments
{
    double mean{0};
    double variance{0};
};

struct BoundPair
{
    double local{0};
    double total{0};
};

inline constexpr double low_collisional_constant = 0.24959;
inline constexpr double high_collisional_constant = 0.58;

namespace detail {

// Below this argument the kernels are summed as power series.
inline constexpr double series_cutoff = 1.0;

inline void require_nonnegative_dt(double dt)
{
    if (!(dt >= 0)) {
        throw std::invalid_argument("duration must be non-negative");
    }
}

}  // namespace detail

/// 1 - e^{-a}
inline double one_minus_exp(double a)
{
    return -std::expm1(-a);
}

/// e^{-a} - 1 + a
inline double exp_minus_one_plus(double a)
{
    if (a < detail::series_cutoff) {
        // sum_{n>=2} (-a)^n / n!
        double term = a * a / 2;
        double sum = 0;
        for (int n = 2; n < 60; ++n) {
            double next = sum + term;
            if (next == sum) {
                break;
            }
            sum = next;
            term *= -a / (n + 1);
        }
        return sum;
    }
    return std::exp(-a) - 1 + a;
}

/// 1 - 2a e^{-a} - e^{-2a}
inline double final_flight_kernel(double a)
{
    if (a < detail::series_cutoff) {
        // sum_{n>=3} (-1)^n (2n - 2^n) a^n / n!
        double an = a * a * a / 6;  // a^n / n!
        double two_n = 8;
        double sign = -1;
        double sum = 0;
        for (int n = 3; n < 80; ++n) {
            double term = sign * (2.0 * n - two_n) * an;
            double next = sum + term;
            if (next == sum && n > 4) {
                break;
            }
            sum = next;
            an *= a / (n + 1);
            two_n *= 2;
            sign = -sign;
        }
        return sum;
    }
    return 1 - 2 * a * std::exp(-a) - std::exp(-2 * a);
}

/// 2e^{-a} + a + a e^{-a} - 2
inline double conditioned_variance_kernel(double a)
{
    if (a < detail::series_cutoff) {
        // sum_{n>=3} (-1)^n (2 - n) a^n / n!
        double an = a * a * a / 6;
        double sign = -1;
        double sum = 0;
        for (int n = 3; n < 60; ++n) {
            double term = sign * (2.0 - n) * an;
            double next = sum + term;
            if (next == sum) {
                break;
            }
            sum = next;
            an *= a / (n + 1);
            sign = -sign;
        }
        return sum;
    }
    double e = std::exp(-a);
    return (a - 2) + (2 + a) * e;
}

inline double mean_unconditioned(BackgroundParams const& p, double dt)
{
    detail::require_nonnegative_dt(dt);
    return p.u() * dt;
}

inline double var_unconditioned(BackgroundParams const& p, double dt)
{
    detail::require_nonnegative_dt(dt);
    double s = p.eps() / p.sigma();
    return 2 * s * s * p.temperature() * exp_minus_one_plus(p.collisionality(dt));
}

namespace detail {

struct DecayTerms
{
    double relax;     //!< 1 - e^{-a}
    double final;     //!< 1 - 2a e^{-a} - e^{-2a}
    double variance;  //!< 2e^{-a} + a + a e^{-a} - 2
};

inline DecayTerms decay_terms(double a)
{
    if (a < series_cutoff) {
        return {one_minus_exp(a), final_flight_kernel(a), conditioned_variance_kernel(a)};
    }
    double e = std::exp(-a);
    return {1 - e, 1 - 2 * a * e - e * e, (a - 2) + (2 + a) * e};
}

inline StepMoments conditioned_from_terms(BackgroundParams const& p,
                                          double dt,
                                          double v_final,
                                          DecayTerms const& k)
{
    double s = p.eps() / p.sigma();
    double w = v_final / p.eps() - p.u();
    double mean = p.u() * dt + w * p.eps() * s * k.relax;
    double var = 2 * p.temperature() * s * s * k.variance
                 + w * w * s * s * p.eps() * p.eps() * k.final;
    return {mean, var > 0 ? var : 0.0};
}

}  // namespace detail

/// Mean and variance of the increment given the velocity of the last flight.
inline StepMoments conditioned_moments(BackgroundParams const& p, double dt, double v_final)
{
    detail::require_nonnegative_dt(dt);
    return detail::conditioned_from_terms(
        p, dt, v_final, detail::decay_terms(p.collisionality(dt)));
}

inline double mean_conditioned(BackgroundParams const& p, double dt, double v_final)
{
    return conditioned_moments(p, dt, v_final).mean;
}

inline double var_conditioned(BackgroundParams const& p, double dt, double v_final)
{
    return conditioned_moments(p, dt, v_final).variance;
}

/// Density of one flight-time overlap given k >= 1 collisions in [0, dt].
inline double conditional_flighttime_pdf(double dtau, unsigned k, double dt)
{
    if (k == 0) {
        throw std::invalid_argument("flight-time density needs at least one collision");
    }
    if (!(dt > 0)) {
        throw std::invalid_argument("dt must be positive");
    }
    if (dtau < 0 || dtau > dt) {
        return 0;
    }
    return k * std::pow(dt - dtau, k - 1.0) / std::pow(dt, static_cast<double>(k));
}

/// Mean and variance of the last flight overlap in a step of length dt.
inline StepMoments final_flight_moments(BackgroundParams const& p, double dt)
{
    detail::require_nonnegative_dt(dt);
    double a = p.collisionality(dt);
    double relax = p.eps() * p.eps() / p.sigma();
    return {relax * one_minus_exp(a), relax * relax * final_flight_kernel(a)};
}

/// W1 bound for one step given a single collision, as a function of dt.
inline double bound_conditioned_collision(BackgroundParams const& p, double dt)
{
    double e2 = p.eps() * p.eps();
    return low_collisional_constant
           * std::sqrt(p.temperature() * p.sigma() * dt * dt * dt / (e2 * e2));
}

inline void require_positive_bounds_args(double dt, double t_end)
{
    if (!(dt > 0) || !(t_end > 0)) {
        throw std::invalid_argument("dt and t_end must be positive");
    }
}

inline BoundPair bound_low_collisional(BackgroundParams const& p, double dt, double t_end)
{
    require_positive_bounds_args(dt, t_end);
    double e8 = std::pow(p.eps(), 8);
    double s3 = p.sigma() * p.sigma() * p.sigma();
    double c = low_collisional_constant;
    return {c * std::sqrt(p.temperature() * s3 * std::pow(dt, 5) / e8),
            c * t_end * std::sqrt(p.temperature() * s3 * std::pow(dt, 3) / e8)};
}

inline BoundPair bound_high_collisional(BackgroundParams const& p, double dt, double t_end)
{
    require_positive_bounds_args(dt, t_end);
    double c = high_collisional_constant * std::sqrt(p.temperature()) * std::pow(p.eps(), 3);
    double s3 = p.sigma() * p.sigma() * p.sigma();
    return {c / std::sqrt(s3 * dt), c * t_end / std::sqrt(s3 * dt * dt * dt)};
}

struct ConstantsReport
{
    double sqrt_gaussian_integral;          //!< int sqrt(x^2+1) phi(x) dx
    double sqrt_gaussian_integral_refined;  //!< same at doubled resolution
    double hermite_w1_norm;                 //!< E|X^3 - 3X|
    double hermite_w1_norm_refined;
    double low_collisional_constant;        //!< 0.4 * integral * sqrt(2/(3 pi))
    std::string k4_note;
};

namespace detail {

inline double std_normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
}

// Composite 20-point Gauss-Legendre over [lo, hi] with the given panels.
template <class F>
double composite_gauss(F&& f, double lo, double hi, int panels)
{
    double h = (hi - lo) / panels;
    double sum = 0;
    for (int i = 0; i < panels; ++i) {
        sum += boost::math::quadrature::gauss<double, 20>::integrate(
            f, lo + i * h, lo + (i + 1) * h);
    }
    return sum;
}

inline double sqrt_gaussian_integral(int panels)
{
    auto f = [](double x) { return std::sqrt(x * x + 1) * std_normal_pdf(x); };
    return composite_gauss(f, -12.0, 12.0, panels);
}

inline double hermite_w1_norm(int panels)
{
    auto f = [](double x) { return std::abs(x * x * x - 3 * x) * std_normal_pdf(x); };
    double r3 = std::sqrt(3.0);
    // Split at the kinks of |x^3 - 3x|.
    return composite_gauss(f, -12.0, -r3, panels) + composite_gauss(f, -r3, 0.0, panels)
           + composite_gauss(f, 0.0, r3, panels) + composite_gauss(f, r3, 12.0, panels);
}

}  // namespace detail

/// Recomputes the two integrals behind the bound constants.
inline ConstantsReport verify_bound_constants(int panels = 64)
{
    ConstantsReport r;
    r.sqrt_gaussian_integral = detail::sqrt_gaussian_integral(panels);
    r.sqrt_gaussian_integral_refined = detail::sqrt_gaussian_integral(2 * panels);
    r.hermite_w1_norm = detail::hermite_w1_norm(panels);
    r.hermite_w1_norm_refined = detail::hermite_w1_norm(2 * panels);
    r.low_collisional_constant
        = 0.4 * r.sqrt_gaussian_integral_refined * std::sqrt(2 / (3 * std::numbers::pi));
    r.k4_note = "k4 = 18.3 depends on unpublished correlation constants; not recomputed";
    return r;
}

}  // namespace kdmc
