// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: JSON parsing, defaults and validation.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <tuple>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "../metrics.hpp"
#include "csv.hpp"

namespace kdmc {

enum class Experiment
{
    single_step_low,
    single_step_high,
    histogram,
    speedup,
    moments_check,
    constants_check,
};

inline constexpr Experiment all_experiments[] = {
    Experiment::single_step_low,
    Experiment::single_step_high,
    Experiment::histogram,
    Experiment::speedup,
    Experiment::moments_check,
    Experiment::constants_check,
};

inline char const* to_string(Experiment e)
{
    switch (e) {
    case Experiment::single_step_low: return "single-step-low";
    case Experiment::single_step_high: return "single-step-high";
    case Experiment::histogram: return "histogram";
    case Experiment::speedup: return "speedup";
    case Experiment::moments_check: return "moments-check";
    case Experiment::constants_check: return "constants-check";
    }
    return "?";
}

inline std::optional<Experiment> experiment_from_string(std::string const& name)
{
    for (auto e : all_experiments) {
        if (name == to_string(e)) {
            return e;
        }
    }
    return std::nullopt;
}

class ConfigError : public std::runtime_error
{
  public:
    enum class Kind
    {
        malformed,
        missing_field,
        unknown_key,
        invalid_value,
    };

    ConfigError(Kind kind, std::string const& what) : std::runtime_error(what), kind_{kind} {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

struct ExperimentConfig
{
    Experiment experiment{Experiment::histogram};
    std::uint64_t seed{0};
    std::uint64_t particles{1};
    unsigned threads{1};
    std::string output;  //!< empty writes to stdout

    double sigma{1};
    double u{0};
    double temperature{1};
    double eps{1};
    double dt{1};
    double t_end{1};

    std::vector<double> dt_grid;
    std::vector<double> collisionality_grid;
    std::vector<double> eps_grid;
    std::vector<double> temperature_grid;
    std::vector<double> drift_grid;
    std::vector<double> final_velocity_grid;  //!< offsets from eps*u in units of sqrt(T)

    std::optional<double> final_velocity;    //!< same units as final_velocity_grid
    std::optional<double> initial_velocity;  //!< unset means eps*u

    double source_velocity{10};
    double source_spread{1};
    HistogramSpec histogram;

    std::uint64_t inner_samples{1024};
    std::uint64_t velocity_bins{50};
    std::uint64_t bootstrap{10};
    std::uint64_t repetitions{5};
    std::uint64_t quadrature_panels{64};
    double se_tolerance{4};

    bool operator==(ExperimentConfig const& other) const
    {
        auto hist = [](HistogramSpec const& h) { return std::tie(h.lo, h.hi, h.bins); };
        auto key = [](ExperimentConfig const& c) {
            return std::tie(c.experiment, c.seed, c.particles, c.threads, c.output, c.sigma,
                            c.u, c.temperature, c.eps, c.dt, c.t_end, c.dt_grid,
                            c.collisionality_grid, c.eps_grid, c.temperature_grid,
                            c.drift_grid, c.final_velocity_grid, c.final_velocity,
                            c.initial_velocity, c.source_velocity, c.source_spread,
                            c.inner_samples, c.velocity_bins, c.bootstrap, c.repetitions,
                            c.quadrature_panels, c.se_tolerance);
        };
        return key(*this) == key(other) && hist(histogram) == hist(other.histogram);
    }
};

inline std::vector<double> log_grid(double lo_exp, double hi_exp, std::size_t points)
{
    std::vector<double> g;
    for (std::size_t i = 0; i < points; ++i) {
        double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        g.push_back(std::pow(10.0, lo_exp + f * (hi_exp - lo_exp)));
    }
    return g;
}

/// Desk-scale defaults for each experiment.
inline ExperimentConfig default_config(Experiment e)
{
    ExperimentConfig c;
    c.experiment = e;
    switch (e) {
    case Experiment::single_step_low:
        c.particles = 200000;
        c.u = 1;
        c.dt_grid = log_grid(-2, 0, 9);
        break;
    case Experiment::single_step_high:
        c.particles = 400000;
        c.collisionality_grid = log_grid(1, 3, 9);
        break;
    case Experiment::histogram:
        c.particles = 100000;
        c.eps_grid = {0.1, 1, 10};
        break;
    case Experiment::speedup:
        c.particles = 50000;
        c.collisionality_grid = {0.01, 0.1, 1, 10, 100, 1000};
        break;
    case Experiment::moments_check:
        c.particles = 1000000;
        c.collisionality_grid = {0.1, 1, 10, 100};
        c.temperature_grid = {0.5, 1};
        c.drift_grid = {0, 1};
        c.final_velocity_grid = {-2, 0, 2};
        break;
    case Experiment::constants_check:
        break;
    }
    return c;
}

namespace detail {

inline std::set<std::string> allowed_keys(Experiment e)
{
    std::set<std::string> keys{"experiment", "seed", "threads", "output"};
    auto add = [&keys](std::initializer_list<char const*> more) {
        keys.insert(more.begin(), more.end());
    };
    switch (e) {
    case Experiment::single_step_low:
        add({"particles", "sigma", "u", "temperature", "eps", "dt_grid", "initial_velocity",
             "inner_samples", "velocity_bins"});
        break;
    case Experiment::single_step_high:
        add({"particles", "sigma", "u", "temperature", "dt", "collisionality_grid",
             "final_velocity", "bootstrap"});
        break;
    case Experiment::histogram:
        add({"particles", "sigma", "u", "temperature", "dt", "t_end", "eps_grid",
             "source_velocity", "source_spread", "histogram"});
        break;
    case Experiment::speedup:
        add({"particles", "sigma", "u", "temperature", "dt", "t_end", "collisionality_grid",
             "repetitions"});
        break;
    case Experiment::moments_check:
        add({"particles", "sigma", "dt", "collisionality_grid", "temperature_grid",
             "drift_grid", "final_velocity_grid", "se_tolerance"});
        break;
    case Experiment::constants_check: add({"quadrature_panels"}); break;
    }
    return keys;
}

[[noreturn]] inline void invalid(std::string const& what)
{
    throw ConfigError(ConfigError::Kind::invalid_value, what);
}

inline double get_number(nlohmann::json const& j, char const* key)
{
    if (!j.is_number()) {
        invalid(std::string("'") + key + "' must be a number");
    }
    double v = j.get<double>();
    if (!std::isfinite(v)) {
        invalid(std::string("'") + key + "' must be finite");
    }
    return v;
}

inline std::uint64_t get_count(nlohmann::json const& j, char const* key)
{
    if (j.is_number_unsigned()) {
        return j.get<std::uint64_t>();
    }
    if (j.is_number_integer()) {
        invalid(std::string("'") + key + "' must be non-negative");
    }
    invalid(std::string("'") + key + "' must be an integer");
}

inline std::vector<double> get_grid(nlohmann::json const& j, char const* key)
{
    if (!j.is_array()) {
        invalid(std::string("'") + key + "' must be an array of numbers");
    }
    std::vector<double> g;
    for (auto const& item : j) {
        g.push_back(get_number(item, key));
    }
    return g;
}

}  // namespace detail

/// Rejects configurations no experiment can run.
inline void validate(ExperimentConfig const& c)
{
    using detail::invalid;
    auto positive = [](double v, char const* name) {
        if (!(v > 0)) {
            invalid(std::string("'") + name + "' must be positive");
        }
    };
    auto grid = [](std::vector<double> const& g, char const* name, bool need_positive) {
        if (g.empty()) {
            invalid(std::string("'") + name + "' must not be empty");
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (need_positive && !(g[i] > 0)) {
                invalid(std::string("'") + name + "' entries must be positive");
            }
            if (i > 0 && !(g[i] > g[i - 1])) {
                invalid(std::string("'") + name + "' must be strictly increasing");
            }
        }
    };
    auto aligned = [](double dt, double t_end) {
        double steps = std::round(t_end / dt);
        if (steps < 1 || std::abs(steps * dt - t_end) > 1e-9 * std::max(t_end, dt)) {
            invalid("'t_end' must be a positive multiple of 'dt'");
        }
    };
    if (c.particles == 0) {
        invalid("'particles' must be positive");
    }
    if (c.threads == 0) {
        invalid("'threads' must be positive");
    }
    positive(c.sigma, "sigma");
    positive(c.temperature, "temperature");
    positive(c.eps, "eps");
    positive(c.dt, "dt");
    positive(c.t_end, "t_end");
    switch (c.experiment) {
    case Experiment::single_step_low:
        grid(c.dt_grid, "dt_grid", true);
        if (c.inner_samples == 0) {
            invalid("'inner_samples' must be positive");
        }
        if (c.velocity_bins == 0 || c.velocity_bins > c.particles) {
            invalid("'velocity_bins' must be between 1 and 'particles'");
        }
        break;
    case Experiment::single_step_high:
        grid(c.collisionality_grid, "collisionality_grid", true);
        if (c.bootstrap < 2) {
            invalid("'bootstrap' must be at least 2");
        }
        if (c.particles < 2) {
            invalid("'particles' must be at least 2");
        }
        break;
    case Experiment::histogram:
        grid(c.eps_grid, "eps_grid", true);
        aligned(c.dt, c.t_end);
        if (c.histogram.bins == 0 || !(c.histogram.hi > c.histogram.lo)) {
            invalid("'histogram' needs bins > 0 and hi > lo");
        }
        if (!(c.source_spread >= 0)) {
            invalid("'source_spread' must be non-negative");
        }
        break;
    case Experiment::speedup:
        grid(c.collisionality_grid, "collisionality_grid", true);
        aligned(c.dt, c.t_end);
        if (c.repetitions == 0) {
            invalid("'repetitions' must be positive");
        }
        break;
    case Experiment::moments_check:
        grid(c.collisionality_grid, "collisionality_grid", true);
        grid(c.temperature_grid, "temperature_grid", true);
        grid(c.drift_grid, "drift_grid", false);
        grid(c.final_velocity_grid, "final_velocity_grid", false);
        positive(c.se_tolerance, "se_tolerance");
        if (c.particles < 2) {
            invalid("'particles' must be at least 2");
        }
        break;
    case Experiment::constants_check:
        if (c.quadrature_panels == 0) {
            invalid("'quadrature_panels' must be positive");
        }
        break;
    }
}

/// Builds a configuration from a parsed JSON document.
inline ExperimentConfig config_from_json(nlohmann::json const& doc)
{
    using detail::get_count;
    using detail::get_grid;
    using detail::get_number;
    if (!doc.is_object()) {
        throw ConfigError(ConfigError::Kind::malformed, "config must be a JSON object");
    }
    if (!doc.contains("experiment")) {
        throw ConfigError(ConfigError::Kind::missing_field, "missing required field 'experiment'");
    }
    if (!doc["experiment"].is_string()) {
        detail::invalid("'experiment' must be a string");
    }
    auto name = doc["experiment"].get<std::string>();
    auto which = experiment_from_string(name);
    if (!which) {
        detail::invalid("unknown experiment '" + name + "'");
    }
    if (!doc.contains("seed")) {
        throw ConfigError(ConfigError::Kind::missing_field, "missing required field 'seed'");
    }

    auto allowed = detail::allowed_keys(*which);
    for (auto const& item : doc.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError(ConfigError::Kind::unknown_key,
                              "unknown key '" + item.key() + "' for experiment " + name);
        }
    }

    ExperimentConfig c = default_config(*which);
    c.seed = get_count(doc["seed"], "seed");
    for (auto const& item : doc.items()) {
        auto const& key = item.key();
        auto const& v = item.value();
        char const* k = key.c_str();
        if (key == "experiment" || key == "seed") {
            continue;
        } else if (key == "particles") {
            c.particles = get_count(v, k);
        } else if (key == "threads") {
            auto t = get_count(v, k);
            if (t == 0 || t > 1024) {
                detail::invalid("'threads' must be between 1 and 1024");
            }
            c.threads = static_cast<unsigned>(t);
        } else if (key == "output") {
            if (!v.is_string()) {
                detail::invalid("'output' must be a string");
            }
            c.output = v.get<std::string>();
        } else if (key == "sigma") {
            c.sigma = get_number(v, k);
        } else if (key == "u") {
            c.u = get_number(v, k);
        } else if (key == "temperature") {
            c.temperature = get_number(v, k);
        } else if (key == "eps") {
            c.eps = get_number(v, k);
        } else if (key == "dt") {
            c.dt = get_number(v, k);
        } else if (key == "t_end") {
            c.t_end = get_number(v, k);
        } else if (key == "dt_grid") {
            c.dt_grid = get_grid(v, k);
        } else if (key == "collisionality_grid") {
            c.collisionality_grid = get_grid(v, k);
        } else if (key == "eps_grid") {
            c.eps_grid = get_grid(v, k);
        } else if (key == "temperature_grid") {
            c.temperature_grid = get_grid(v, k);
        } else if (key == "drift_grid") {
            c.drift_grid = get_grid(v, k);
        } else if (key == "final_velocity_grid") {
            c.final_velocity_grid = get_grid(v, k);
        } else if (key == "final_velocity") {
            c.final_velocity = v.is_null() ? std::nullopt : std::optional(get_number(v, k));
        } else if (key == "initial_velocity") {
            c.initial_velocity = v.is_null() ? std::nullopt : std::optional(get_number(v, k));
        } else if (key == "source_velocity") {
            c.source_velocity = get_number(v, k);
        } else if (key == "source_spread") {
            c.source_spread = get_number(v, k);
        } else if (key == "inner_samples") {
            c.inner_samples = get_count(v, k);
        } else if (key == "velocity_bins") {
            c.velocity_bins = get_count(v, k);
        } else if (key == "bootstrap") {
            c.bootstrap = get_count(v, k);
        } else if (key == "repetitions") {
            c.repetitions = get_count(v, k);
        } else if (key == "quadrature_panels") {
            c.quadrature_panels = get_count(v, k);
        } else if (key == "se_tolerance") {
            c.se_tolerance = get_number(v, k);
        } else if (key == "histogram") {
            if (!v.is_object()) {
                detail::invalid("'histogram' must be an object");
            }
            for (auto const& h : v.items()) {
                if (h.key() == "lo") {
                    c.histogram.lo = get_number(h.value(), "histogram.lo");
                } else if (h.key() == "hi") {
                    c.histogram.hi = get_number(h.value(), "histogram.hi");
                } else if (h.key() == "bins") {
                    c.histogram.bins = get_count(h.value(), "histogram.bins");
                } else {
                    throw ConfigError(ConfigError::Kind::unknown_key,
                                      "unknown key 'histogram." + h.key() + "'");
                }
            }
        }
    }
    validate(c);
    return c;
}

inline ExperimentConfig parse_config_text(std::string const& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const& e) {
        throw ConfigError(ConfigError::Kind::malformed, std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(doc);
}

inline ExperimentConfig parse_config(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read config '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str());
    } catch (ConfigError const& e) {
        throw ConfigError(e.kind(), path + ": " + e.what());
    }
}

/// JSON document holding every key the experiment accepts.
inline nlohmann::json config_to_json(ExperimentConfig const& c)
{
    nlohmann::json j;
    j["experiment"] = to_string(c.experiment);
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output"] = c.output;
    auto opt = [](std::optional<double> const& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (auto const& key : detail::allowed_keys(c.experiment)) {
        if (key == "particles") j[key] = c.particles;
        else if (key == "sigma") j[key] = c.sigma;
        else if (key == "u") j[key] = c.u;
        else if (key == "temperature") j[key] = c.temperature;
        else if (key == "eps") j[key] = c.eps;
        else if (key == "dt") j[key] = c.dt;
        else if (key == "t_end") j[key] = c.t_end;
        else if (key == "dt_grid") j[key] = c.dt_grid;
        else if (key == "collisionality_grid") j[key] = c.collisionality_grid;
        else if (key == "eps_grid") j[key] = c.eps_grid;
        else if (key == "temperature_grid") j[key] = c.temperature_grid;
        else if (key == "drift_grid") j[key] = c.drift_grid;
        else if (key == "final_velocity_grid") j[key] = c.final_velocity_grid;
        else if (key == "final_velocity") j[key] = opt(c.final_velocity);
        else if (key == "initial_velocity") j[key] = opt(c.initial_velocity);
        else if (key == "source_velocity") j[key] = c.source_velocity;
        else if (key == "source_spread") j[key] = c.source_spread;
        else if (key == "inner_samples") j[key] = c.inner_samples;
        else if (key == "velocity_bins") j[key] = c.velocity_bins;
        else if (key == "bootstrap") j[key] = c.bootstrap;
        else if (key == "repetitions") j[key] = c.repetitions;
        else if (key == "quadrature_panels") j[key] = c.quadrature_panels;
        else if (key == "se_tolerance") j[key] = c.se_tolerance;
        else if (key == "histogram")
            j[key] = {{"lo", c.histogram.lo}, {"hi", c.histogram.hi}, {"bins", c.histogram.bins}};
    }
    return j;
}

}  // namespace kdmc
