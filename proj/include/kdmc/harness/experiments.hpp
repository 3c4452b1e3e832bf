// SPDX-License-Identifier: Apache-2.0
//
// Experiment suites. Each run is a pure function of its configuration apart
// from the wall-clock columns of the speedup table.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "../core.hpp"
#include "../kd.hpp"
#include "../kinetic.hpp"
#include "../metrics.hpp"
#include "../moments.hpp"
#include "../rng.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "oracles.hpp"
#include "parallel.hpp"

namespace kdmc {

struct Check
{
    std::string name;
    bool passed{false};
    std::string detail;
};

struct ExperimentResult
{
    CsvTable table;
    std::vector<Check> checks;  //!< self-verification, where the suite has one

    bool passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](Check const& c) { return c.passed; });
    }
};

namespace detail {

inline double ordered_mean(std::vector<double> const& v)
{
    double sum = 0;
    for (double x : v) {
        sum += x;
    }
    return sum / static_cast<double>(v.size());
}

inline double eps_for(double collisionality, double sigma, double dt)
{
    return std::sqrt(sigma * dt / collisionality);
}

// W1 between the kinetic law of the rest of a step (fresh start, last
// velocity nu, duration theta) and the KD Gaussian substep. The no-collision
// atom is exact; the rest is sampled.
template <VariateSource R>
double conditional_substep_w1(
    BackgroundParams const& p, double theta, double nu, std::uint64_t inner, R& rng)
{
    double const p0 = std::exp(-p.rate() * theta);
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(inner + 1);
    atoms.emplace_back(nu / p.eps() * theta, p0);
    double const w = (1 - p0) / static_cast<double>(inner);
    PinnedOptions const forced{.v_initial = std::nullopt, .at_least_one = true};
    for (std::uint64_t m = 0; m < inner; ++m) {
        atoms.emplace_back(pinned_increment(p, theta, nu, rng, forced), w);
    }
    std::sort(atoms.begin(), atoms.end());
    std::vector<double> xs(atoms.size()), ws(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        xs[i] = atoms[i].first;
        ws[i] = atoms[i].second;
    }
    StepMoments m = conditioned_moments(p, theta, nu);
    return w1_discrete_vs_normal(xs, ws, m.mean, std::sqrt(m.variance));
}

}  // namespace detail

/**
 * Single step from a fixed state at low collisionality, restricted to paths
 * with at least one collision.
 *
 * w1_cond_v_theta averages, over kinetic paths, the W1 distance between the
 * kinetic and KD laws given the first collision time and the final
 * velocity. w1_cond_v stratifies paired samples by final velocity only.
 */
inline ExperimentResult run_single_step_low(ExperimentConfig const& cfg)
{
    BackgroundParams const p(cfg.sigma, cfg.u, cfg.temperature, cfg.eps);
    HomogeneousField const field(p);
    double const v0 = cfg.initial_velocity.value_or(p.eps() * p.u());
    std::uint64_t const n = cfg.particles;

    ExperimentResult out;
    out.table.header = {"dt", "w1_cond_v_theta", "w1_cond_v", "bound"};

    struct Path
    {
        double tau1{0};
        double nu{0};
        double dx{0};
        bool kept{false};
    };

    for (std::size_t j = 0; j < cfg.dt_grid.size(); ++j) {
        double const dt = cfg.dt_grid[j];
        std::uint64_t const point_seed = derive_seed(cfg.seed, j);
        std::uint64_t const kin_seed = derive_seed(point_seed, 0);
        std::uint64_t const kd_seed = derive_seed(point_seed, 1);
        std::uint64_t const inner_seed = derive_seed(point_seed, 2);

        // Rejection in fixed batches keeps the accepted set thread-independent.
        std::vector<Path> paths;
        paths.reserve(n);
        std::uint64_t const batch = std::max<std::uint64_t>(n, 1u << 16);
        std::vector<Path> attempts(batch);
        for (std::uint64_t first = 0; paths.size() < n; first += batch) {
            parallel_for(batch, cfg.threads, [&](std::size_t i) {
                RngStream rng(kin_seed, first + i);
                auto rec = simulate_kinetic(ParticleState{0, v0, 0}, dt, field, rng, true);
                Path& path = attempts[i];
                path.kept = rec.collisions_executed > 0;
                if (path.kept) {
                    path.tau1 = rec.flight_segments->front().duration;
                    path.nu = rec.final_state.v;
                    path.dx = rec.final_state.x;
                }
            });
            for (auto const& a : attempts) {
                if (a.kept && paths.size() < n) {
                    paths.push_back(a);
                }
            }
        }

        std::vector<double> dx_kd(n), w1_path(n);
        parallel_for(n, cfg.threads, [&](std::size_t i) {
            Path const& path = paths[i];
            double theta = dt - path.tau1;
            RngStream kd_rng(kd_seed, i);
            dx_kd[i] = v0 / p.eps() * path.tau1 + diffusive_substep(path.nu, theta, p, kd_rng);
            RngStream inner_rng(inner_seed, i);
            w1_path[i] = detail::conditional_substep_w1(p, theta, path.nu, cfg.inner_samples,
                                                        inner_rng);
        });
        double const w1_v_theta = detail::ordered_mean(w1_path);

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return paths[a].nu < paths[b].nu;
        });
        double w1_v = 0;
        std::uint64_t const bins = cfg.velocity_bins;
        for (std::uint64_t b = 0; b < bins; ++b) {
            std::size_t lo = n * b / bins;
            std::size_t hi = n * (b + 1) / bins;
            std::vector<double> kin, kd;
            for (std::size_t k = lo; k < hi; ++k) {
                kin.push_back(paths[order[k]].dx);
                kd.push_back(dx_kd[order[k]]);
            }
            w1_v += w1_empirical(kin, kd).distance * static_cast<double>(hi - lo);
        }
        w1_v /= static_cast<double>(n);

        out.table.add_row({dt, w1_v_theta, w1_v, bound_conditioned_collision(p, dt)});
    }
    return out;
}

/**
 * Single step of length dt from equilibrium at high collisionality. Kinetic
 * and KD particles share their random streams.
 */
inline ExperimentResult run_single_step_high(ExperimentConfig const& cfg)
{
    std::uint64_t const n = cfg.particles;
    double const dt = cfg.dt;
    ExperimentResult out;
    out.table.header = {"collisionality", "eps", "w1", "bound", "noise_floor", "bootstrap_se"};

    for (std::size_t j = 0; j < cfg.collisionality_grid.size(); ++j) {
        double const a = cfg.collisionality_grid[j];
        double const eps = detail::eps_for(a, cfg.sigma, dt);
        BackgroundParams const p(cfg.sigma, cfg.u, cfg.temperature, eps);
        HomogeneousField const field(p);
        std::uint64_t const point_seed = derive_seed(cfg.seed, j);
        std::uint64_t const sim_seed = derive_seed(point_seed, 0);
        std::uint64_t const boot_seed = derive_seed(point_seed, 1);

        std::optional<double> nu;
        if (cfg.final_velocity) {
            nu = eps * cfg.u + *cfg.final_velocity * std::sqrt(cfg.temperature);
        }

        std::vector<double> kin(n), kd(n);
        parallel_for(n, cfg.threads, [&](std::size_t i) {
            RngStream kin_rng(sim_seed, i);
            double v0 = sample_maxwellian(p, kin_rng);
            RngStream kd_rng = kin_rng;
            if (nu) {
                kin[i] = pinned_increment(p, dt, *nu, kin_rng, {.v_initial = v0});
                kd[i] = pinned_kd_increment(p, dt, *nu, kd_rng, v0);
            } else {
                kin[i] = simulate_kinetic(ParticleState{0, v0, 0}, dt, field, kin_rng).final_state.x;
                kd[i] = simulate_kd(ParticleState{0, v0, 0}, dt, dt, field, kd_rng).final_state.x;
            }
        });
        std::sort(kin.begin(), kin.end());
        std::sort(kd.begin(), kd.end());
        double const w1 = w1_sorted(kin, kd).distance;

        // Bootstrap. The floor is the distance between two independent
        // resamples of the kinetic set: once the coupling has decorrelated,
        // W1(kin, kd) compares two independent samples and sits at this level.
        std::uint64_t const reps = cfg.bootstrap;
        std::vector<double> floor_b(reps), w1_b(reps);
        parallel_for(reps, cfg.threads, [&](std::size_t b) {
            RngStream rng(boot_seed, b);
            auto resample = [&](std::vector<double> const& src) {
                std::vector<double> r(n);
                for (auto& x : r) {
                    auto k = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(n));
                    x = src[std::min(k, n - 1)];
                }
                std::sort(r.begin(), r.end());
                return r;
            };
            auto kin_star = resample(kin);
            auto kd_star = resample(kd);
            auto kin_other = resample(kin);
            floor_b[b] = w1_sorted(kin_other, kin_star).distance;
            w1_b[b] = w1_sorted(kin_star, kd_star).distance;
        });
        double const floor = detail::ordered_mean(floor_b);
        double const w1_mean = detail::ordered_mean(w1_b);
        double ss = 0;
        for (double x : w1_b) {
            ss += (x - w1_mean) * (x - w1_mean);
        }
        double const se = std::sqrt(ss / static_cast<double>(reps - 1));

        out.table.add_row({a, eps, w1, bound_high_collisional(p, dt, dt).local, floor, se});
    }
    return out;
}

/**
 * Kinetic, KD and random-walk ensembles from a bimodal velocity source at
 * the origin. Rows of kind "count" hold histogram bins; "underflow" and
 * "overflow" the out-of-range counts; "mean" and "std" the sample moments;
 * "w1" the distance of each scheme to the kinetic ensemble; "collisions"
 * the executed collisions.
 */
inline ExperimentResult run_histogram(ExperimentConfig const& cfg)
{
    std::uint64_t const n = cfg.particles;
    ExperimentResult out;
    out.table.header = {"eps", "kind", "lo", "hi", "kinetic", "kd", "random_walk"};
    double const inf = std::numeric_limits<double>::infinity();

    for (std::size_t j = 0; j < cfg.eps_grid.size(); ++j) {
        double const eps = cfg.eps_grid[j];
        BackgroundParams const p(cfg.sigma, cfg.u, cfg.temperature, eps);
        HomogeneousField const field(p);
        std::uint64_t const point_seed = derive_seed(cfg.seed, j);

        std::vector<double> kin(n), kd(n), rw(n);
        std::vector<std::uint64_t> kin_coll(n), kd_coll(n);
        parallel_for(n, cfg.threads, [&](std::size_t i) {
            RngStream rng(point_seed, i);
            double sign = rng.uniform() <= 0.5 ? -1.0 : 1.0;
            double v0 = sign * cfg.source_velocity + cfg.source_spread * rng.normal();
            ParticleState start{0, v0, 0};
            RngStream kd_rng = rng;
            RngStream rw_rng = rng;
            auto k = simulate_kinetic(start, cfg.t_end, field, rng);
            auto d = simulate_kd(start, cfg.dt, cfg.t_end, field, kd_rng);
            kin[i] = k.final_state.x;
            kd[i] = d.final_state.x;
            rw[i] = simulate_random_walk(start, cfg.dt, cfg.t_end, p, rw_rng).x;
            kin_coll[i] = k.collisions_executed;
            kd_coll[i] = d.collisions_executed;
        });

        auto sk = summarize(std::span<double const>(kin), cfg.histogram);
        auto sd = summarize(std::span<double const>(kd), cfg.histogram);
        auto sr = summarize(std::span<double const>(rw), cfg.histogram);
        auto count = [](std::uint64_t c) { return static_cast<std::int64_t>(c); };
        for (std::size_t b = 0; b < cfg.histogram.bins; ++b) {
            out.table.add_row({eps, std::string("count"), sk.histogram.edge(b),
                               sk.histogram.edge(b + 1), count(sk.histogram.counts[b]),
                               count(sd.histogram.counts[b]), count(sr.histogram.counts[b])});
        }
        out.table.add_row({eps, std::string("underflow"), -inf, cfg.histogram.lo,
                           count(sk.histogram.underflow), count(sd.histogram.underflow),
                           count(sr.histogram.underflow)});
        out.table.add_row({eps, std::string("overflow"), cfg.histogram.hi, inf,
                           count(sk.histogram.overflow), count(sd.histogram.overflow),
                           count(sr.histogram.overflow)});
        out.table.add_row({eps, std::string("mean"), -inf, inf, sk.mean, sd.mean, sr.mean});
        out.table.add_row({eps, std::string("std"), -inf, inf, std::sqrt(sk.variance),
                           std::sqrt(sd.variance), std::sqrt(sr.variance)});
        out.table.add_row({eps, std::string("w1"), -inf, inf, 0.0,
                           w1_empirical(kin, kd).distance, w1_empirical(kin, rw).distance});
        auto total = [](std::vector<std::uint64_t> const& c) {
            return static_cast<std::int64_t>(std::accumulate(c.begin(), c.end(), std::uint64_t{0}));
        };
        out.table.add_row({eps, std::string("collisions"), -inf, inf, total(kin_coll),
                           total(kd_coll), std::int64_t{0}});
    }
    return out;
}

/**
 * Executed collisions and stepping wall time of kinetic and KD ensembles.
 * The last three columns are timings and vary between runs.
 */
inline ExperimentResult run_speedup(ExperimentConfig const& cfg)
{
    using clock = std::chrono::steady_clock;
    std::uint64_t const n = cfg.particles;
    ExperimentResult out;
    out.table.header = {"collisionality", "eps", "kinetic_collisions", "kd_collisions",
                        "collision_ratio", "analytic_ratio", "kinetic_seconds", "kd_seconds",
                        "speedup"};

    for (std::size_t j = 0; j < cfg.collisionality_grid.size(); ++j) {
        double const a = cfg.collisionality_grid[j];
        double const eps = detail::eps_for(a, cfg.sigma, cfg.dt);
        BackgroundParams const p(cfg.sigma, cfg.u, cfg.temperature, eps);
        HomogeneousField const field(p);
        std::uint64_t const point_seed = derive_seed(cfg.seed, j);

        std::vector<RngStream> streams;
        std::vector<double> v0(n);
        streams.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            streams.emplace_back(point_seed, i);
            v0[i] = sample_maxwellian(p, streams.back());
        }

        std::vector<double> x(n);
        std::vector<std::uint64_t> coll(n);
        auto timed = [&](auto&& step) {
            std::vector<double> seconds;
            std::uint64_t collisions = 0;
            for (std::uint64_t r = 0; r < cfg.repetitions; ++r) {
                auto start = clock::now();
                parallel_for(n, cfg.threads, [&](std::size_t i) {
                    RngStream rng = streams[i];
                    step(i, rng);
                });
                seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
                if (r == 0) {
                    collisions = std::accumulate(coll.begin(), coll.end(), std::uint64_t{0});
                }
            }
            std::sort(seconds.begin(), seconds.end());
            return std::pair{collisions, seconds[seconds.size() / 2]};
        };

        auto [kin_coll, kin_time] = timed([&](std::size_t i, RngStream& rng) {
            auto rec = simulate_kinetic(ParticleState{0, v0[i], 0}, cfg.t_end, field, rng);
            x[i] = rec.final_state.x;
            coll[i] = rec.collisions_executed;
        });
        auto [kd_coll, kd_time] = timed([&](std::size_t i, RngStream& rng) {
            auto rec = simulate_kd(ParticleState{0, v0[i], 0}, cfg.dt, cfg.t_end, field, rng);
            x[i] = rec.final_state.x;
            coll[i] = rec.collisions_executed;
        });

        double ratio = kd_coll > 0 ? static_cast<double>(kin_coll) / static_cast<double>(kd_coll)
                                   : std::numeric_limits<double>::quiet_NaN();
        out.table.add_row({a, eps, static_cast<std::int64_t>(kin_coll),
                           static_cast<std::int64_t>(kd_coll), ratio, a / one_minus_exp(a),
                           kin_time, kd_time, kin_time / kd_time});
    }
    return out;
}

/// Closed-form moments against brute-force ensembles.
inline ExperimentResult run_moments_check(ExperimentConfig const& cfg)
{
    ExperimentResult out;
    out.table.header = {"kind", "collisionality", "temperature", "u", "v_offset",
                        "eps", "v_final", "mean_formula", "mean_mc", "se_mean",
                        "var_formula", "var_mc", "se_var", "z_mean", "z_var", "pass"};
    double const dt = cfg.dt;
    double const nan = std::numeric_limits<double>::quiet_NaN();
    auto zscore = [](double mc, double formula, double se) {
        if (se > 0) {
            return (mc - formula) / se;
        }
        return mc == formula ? 0.0 : std::numeric_limits<double>::infinity();
    };
    std::uint64_t case_id = 0;
    std::size_t failures = 0;
    std::size_t rows = 0;
    auto add = [&](char const* kind, double a, double temp, double u, double offset, double eps,
                   double v_final, StepMoments formula, SampleMoments const& mc) {
        double zm = zscore(mc.mean, formula.mean, mc.se_mean);
        double zv = zscore(mc.variance, formula.variance, mc.se_variance);
        bool ok = std::abs(zm) <= cfg.se_tolerance && std::abs(zv) <= cfg.se_tolerance;
        failures += ok ? 0 : 1;
        ++rows;
        out.table.add_row({std::string(kind), a, temp, u, offset, eps, v_final, formula.mean,
                           mc.mean, mc.se_mean, formula.variance, mc.variance, mc.se_variance,
                           zm, zv, std::int64_t{ok ? 1 : 0}});
    };

    for (double a : cfg.collisionality_grid) {
        for (double temp : cfg.temperature_grid) {
            for (double u : cfg.drift_grid) {
                double const eps = detail::eps_for(a, cfg.sigma, dt);
                BackgroundParams const p(cfg.sigma, u, temp, eps);
                HomogeneousField const field(p);

                std::uint64_t seed = derive_seed(cfg.seed, case_id++);
                std::vector<double> dx(cfg.particles);
                parallel_for(cfg.particles, cfg.threads, [&](std::size_t i) {
                    RngStream rng(seed, i);
                    double v0 = sample_maxwellian(p, rng);
                    dx[i] = simulate_kinetic(ParticleState{0, v0, 0}, dt, field, rng).final_state.x;
                });
                add("unconditioned", a, temp, u, nan, eps, nan,
                    {mean_unconditioned(p, dt), var_unconditioned(p, dt)}, sample_moments(dx));

                for (double offset : cfg.final_velocity_grid) {
                    double v_final = eps * u + offset * std::sqrt(temp);
                    seed = derive_seed(cfg.seed, case_id++);
                    auto mc = oracle_conditioned_increment(p, dt, v_final, cfg.particles, seed,
                                                           cfg.threads);
                    add("conditioned", a, temp, u, offset, eps, v_final,
                        conditioned_moments(p, dt, v_final), mc);
                }
            }
        }
    }
    out.checks.push_back({"moments within " + format_double(cfg.se_tolerance) + " SE",
                          failures == 0,
                          std::to_string(rows - failures) + "/" + std::to_string(rows)
                              + " cases agree"});
    return out;
}

/// Quadrature of the two integrals behind the bound constants.
inline ExperimentResult run_constants_check(ExperimentConfig const& cfg)
{
    auto r = verify_bound_constants(static_cast<int>(cfg.quadrature_panels));
    ExperimentResult out;
    out.table.header = {"quantity", "value", "refined", "target", "tolerance", "pass"};
    auto add = [&](std::string name, double value, double refined, double target, double tol) {
        bool ok = std::abs(refined - target) <= tol && std::abs(refined - value) < 1e-6;
        out.table.add_row({name, value, refined, target, tol, std::int64_t{ok ? 1 : 0}});
        out.checks.push_back({name, ok,
                              format_double(refined) + " vs " + format_double(target) + " +- "
                                  + format_double(tol)});
    };
    add("sqrt_gaussian_integral", r.sqrt_gaussian_integral, r.sqrt_gaussian_integral_refined,
        1.3545, 5e-4);
    add("hermite_w1_norm", r.hermite_w1_norm, r.hermite_w1_norm_refined, 1.51, 1e-2);
    add("low_collisional_constant", r.low_collisional_constant, r.low_collisional_constant,
        low_collisional_constant, 1e-4);
    return out;
}

inline ExperimentResult run_experiment(ExperimentConfig const& cfg)
{
    validate(cfg);
    switch (cfg.experiment) {
    case Experiment::single_step_low: return run_single_step_low(cfg);
    case Experiment::single_step_high: return run_single_step_high(cfg);
    case Experiment::histogram: return run_histogram(cfg);
    case Experiment::speedup: return run_speedup(cfg);
    case Experiment::moments_check: return run_moments_check(cfg);
    case Experiment::constants_check: return run_constants_check(cfg);
    }
    throw std::logic_error("unhandled experiment");
}

}  // namespace kdmc
