// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: kdmc <experiment> --config <path> [overrides].

#pragma once

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "config.hpp"
#include "csv.hpp"
#include "experiments.hpp"

namespace kdmc {

enum class ExitCode : int
{
    ok = 0,
    usage = 2,
    malformed_config = 3,
    missing_field = 4,
    unknown_key = 5,
    invalid_value = 6,
    io_error = 7,
    runtime_error = 8,
    check_failed = 9,
};

inline ExitCode exit_code_for(ConfigError::Kind kind)
{
    switch (kind) {
    case ConfigError::Kind::malformed: return ExitCode::malformed_config;
    case ConfigError::Kind::missing_field: return ExitCode::missing_field;
    case ConfigError::Kind::unknown_key: return ExitCode::unknown_key;
    case ConfigError::Kind::invalid_value: return ExitCode::invalid_value;
    }
    return ExitCode::invalid_value;
}

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Kinetic and kinetic-diffusion particle Monte Carlo experiments", "kdmc"};
    std::string experiment_name;
    std::string config_path;
    std::optional<std::uint64_t> particles;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::optional<unsigned> threads;

    std::vector<std::string> names;
    for (auto e : all_experiments) {
        names.emplace_back(to_string(e));
    }
    app.add_option("experiment", experiment_name, "Experiment to run")
        ->required()
        ->check(CLI::IsMember(names));
    app.add_option("--config", config_path, "JSON configuration")->required();
    app.add_option("--particles", particles, "Override the particle count");
    app.add_option("--seed", seed, "Override the seed");
    app.add_option("--out", output, "Write CSV here instead of the configured output");
    app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (CLI::CallForHelp const&) {
        out << app.help();
        return static_cast<int>(ExitCode::ok);
    } catch (CLI::ParseError const& e) {
        err << "kdmc: " << e.what() << '\n' << app.help();
        return static_cast<int>(ExitCode::usage);
    }

    try {
        ExperimentConfig cfg = parse_config(config_path);
        if (experiment_name != to_string(cfg.experiment)) {
            throw ConfigError(ConfigError::Kind::invalid_value,
                              config_path + ": config describes '" + to_string(cfg.experiment)
                                  + "', not '" + experiment_name + "'");
        }
        if (particles) {
            cfg.particles = *particles;
        }
        if (seed) {
            cfg.seed = *seed;
        }
        if (output) {
            cfg.output = *output;
        }
        if (threads) {
            cfg.threads = *threads;
        }
        validate(cfg);

        ExperimentResult result = run_experiment(cfg);
        if (cfg.output.empty()) {
            write_csv(out, result.table);
        } else {
            emit_csv(result.table, cfg.output);
        }
        for (auto const& c : result.checks) {
            err << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        }
        return static_cast<int>(result.passed() ? ExitCode::ok : ExitCode::check_failed);
    } catch (ConfigError const& e) {
        err << "kdmc: config error: " << e.what() << '\n';
        return static_cast<int>(exit_code_for(e.kind()));
    } catch (IoError const& e) {
        err << "kdmc: I/O error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::io_error);
    } catch (std::exception const& e) {
        err << "kdmc: error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::runtime_error);
    }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(std::move(args), out, err);
}

}  // namespace kdmc
