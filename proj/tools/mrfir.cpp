/*
 * Copyright 2026 The mrfir Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// mrfir: fast-rate FIR identification from slow-rate output measurements.
//
//   mrfir identify    --config cfg.json [--out dir]
//   mrfir tune        --config cfg.json [--out dir]
//   mrfir frf         --config cfg.json [--out dir]
//   mrfir simulate-mc --config cfg.json [--seed N] [--out dir]
//
// Exit codes: 0 success, 1 numerical failure, 2 input/config error.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mrfir/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Kernel-regularized fast-rate FIR identification from slow-rate outputs"};
    app.require_subcommand(1);

    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    app.add_option("--config", config, "Experiment configuration (JSON)")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Override the configured RNG seed");
    auto* out_opt = app.add_option("--out", out, "Override the configured output directory");
    app.fallthrough();

    const char* commands[][2] = {{"identify", "Identify FIR models from CSV data"},
                                 {"simulate-mc", "Run the two-mass Monte Carlo study"},
                                 {"frf", "Evaluate the FRF of a model file"},
                                 {"tune", "Tune kernel hyperparameters by marginal likelihood"}};
    for (const auto& c : commands) app.add_subcommand(c[0], c[1]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mrfir::cli::input_error;
    }

    mrfir::cli::Overrides o;
    if (*seed_opt) o.seed = seed;
    if (*out_opt) o.output_dir = out;
    try {
        o.threads = mrfir::cli::thread_budget();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mrfir::cli::input_error;
    }
    return mrfir::cli::run_file(app.get_subcommands().front()->get_name(), config, o, std::cout, std::cerr);
}
