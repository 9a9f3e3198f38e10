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

#ifndef MRFIR_COMMANDS_HPP
#define MRFIR_COMMANDS_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mrfir/config.hpp"
#include "mrfir/error.hpp"
#include "mrfir/estimator.hpp"
#include "mrfir/io.hpp"
#include "mrfir/regressor.hpp"
#include "mrfir/signals.hpp"
#include "mrfir/sim.hpp"
#include "mrfir/tuning.hpp"

namespace mrfir::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { success = 0, numerical_failure = 1, input_error = 2 };

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> output_dir;
    std::optional<unsigned> threads;
};

inline void apply(ExperimentConfig& c, const Overrides& o)
{
    if (o.seed) {
        c.seed = *o.seed;
        if (c.monte_carlo) c.monte_carlo->seed = *o.seed;
    }
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (c.monte_carlo) c.monte_carlo->threads = o.threads.value_or(1);
}

/// Worker count: hardware concurrency, capped by NB_THREADS when set.
inline unsigned thread_budget()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NB_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
            throw ConfigError(std::string("NB_THREADS must be a positive integer (got '") + env + "')");
        }
    }
    return n;
}

inline std::string csv_quote(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

namespace detail {

inline const fs::path& require_path(const std::optional<fs::path>& p, const char* what)
{
    if (!p) throw ConfigError(std::string("config: data.") + what + " is required for this command");
    if (!fs::exists(*p)) throw ConfigError("input file not found: " + p->string());
    return *p;
}

struct TrainingData {
    FastSignal u;
    SlowSignal y;
    std::optional<FastSignal> u_val;
    std::optional<FastSignal> y_val;
};

inline TrainingData load_training(const ExperimentConfig& c)
{
    const double T = c.sampling.fast_period;
    const int F = c.sampling.factor;
    FastSignal u(io::read_signal_csv(require_path(c.data.input, "input")), T);
    SlowSignal y(io::read_signal_csv(require_path(c.data.output, "output")), T, F);
    if (y.size() > max_output_length(u.size(), F))
        throw ConfigError("output has " + std::to_string(y.size()) + " samples but an input of " +
                          std::to_string(u.size()) + " samples with F=" + std::to_string(F) + " supports at most " +
                          std::to_string(max_output_length(u.size(), F)));
    TrainingData d{std::move(u), std::move(y), std::nullopt, std::nullopt};
    if (c.data.validation_input) {
        d.u_val = FastSignal(io::read_signal_csv(require_path(c.data.validation_input, "validation_input")), T);
        d.y_val = FastSignal(io::read_signal_csv(require_path(c.data.validation_output, "validation_output")), T);
        if (d.u_val->size() != d.y_val->size())
            throw ConfigError("validation input and output lengths differ");
    }
    return d;
}

inline std::vector<FrfSample> model_frf(const FirModel& m, const ExperimentConfig& c)
{
    const auto grid = io::linear_grid(c.frf.omega_min, c.omega_max(), c.frf.points);
    return fir_frf(m, grid);
}

inline json identifiability_json(const IdentifiabilityReport& r)
{
    return {{"unique", r.unique},
            {"reason", to_string(r.reason)},
            {"rank", r.rank},
            {"null_dimension", r.null_dimension},
            {"tolerance", r.tolerance}};
}

inline json nan_or(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

} // namespace detail

/// Identification from CSV data: every configured estimator at every order.
/// Writes <name>_P<order>_{model.json,theta.csv,frf.csv}, fit_report.json and
/// fit_report.csv. Least squares without a unique minimizer is reported in
/// <name>_P<order>_identifiability.json and makes the command exit with 1
/// after all other estimators have been written.
inline int cmd_identify(const ExperimentConfig& c, std::ostream& log)
{
    if (c.estimators.empty()) throw ConfigError("config: at least one estimator is required");
    if (c.orders.empty()) throw ConfigError("config: 'orders' is required");
    const auto d = detail::load_training(c);
    const std::size_t N = d.u.size();
    const std::size_t M = d.y.size();
    for (auto P : c.orders)
        if (P > N) throw ConfigError("order " + std::to_string(P) + " exceeds the input length N=" + std::to_string(N));

    fs::create_directories(c.output_dir);
    json report = json::array();
    std::string csv = "estimator,order,status,gof,gof_basis,rmse,marginal_likelihood,gamma\n";
    bool non_unique = false;

    for (auto P : c.orders) {
        const auto phi = build_regressor(d.u, c.sampling.factor, P, M);
        for (const auto& est : c.estimators) {
            const std::string stem = est.name + "_P" + std::to_string(P);
            json entry = {{"estimator", est.name}, {"order", P}};
            try {
                const auto fit = fit_estimator(est, phi, d.y);
                double gof = 0.0, err = 0.0;
                std::string basis;
                if (d.u_val) {
                    const auto yhat = predict_fast_output(fit.model, *d.u_val);
                    gof = goodness_of_fit(*d.y_val, yhat);
                    err = rmse(d.y_val->samples(), yhat.samples());
                    basis = "validation";
                } else {
                    const auto yhat = decimate(predict_fast_output(fit.model, d.u).samples(), c.sampling.factor);
                    const std::span<const double> yh(yhat.data(), M);
                    gof = goodness_of_fit(d.y.samples(), yh);
                    err = rmse(d.y.samples(), yh);
                    basis = "training_slow";
                }
                const FitReport fr{fit.model, gof, err, fit.marginal_likelihood};
                io::write_model(c.output_dir / (stem + "_model.json"), fr.model);
                io::write_text(c.output_dir / (stem + "_theta.csv"), io::theta_csv(fr.model));
                io::write_text(c.output_dir / (stem + "_frf.csv"), io::frf_csv(detail::model_frf(fr.model, c)));
                const double gamma = est.kind == EstimatorKind::kernel ? fit.gamma : std::nan("");
                entry.update({{"status", "ok"},
                              {"gof", fr.gof},
                              {"gof_basis", basis},
                              {"rmse", fr.rmse},
                              {"marginal_likelihood", detail::nan_or(fr.marginal_likelihood)},
                              {"gamma", detail::nan_or(gamma)},
                              {"model_file", stem + "_model.json"}});
                if (est.kind == EstimatorKind::kernel) entry["kernel"] = io::kernel_to_json(fit.kernel);
                csv += est.name + "," + std::to_string(P) + ",ok," + io::format_double(fr.gof) + "," + basis + "," +
                       io::format_double(fr.rmse) + "," + io::format_double(fr.marginal_likelihood) + "," +
                       io::format_double(gamma) + "\n";
                log << stem << ": GoF " << fr.gof << " % (" << basis << ")\n";
            } catch (const NonUniqueModel& e) {
                non_unique = true;
                const json idr = detail::identifiability_json(e.report());
                io::write_text(c.output_dir / (stem + "_identifiability.json"), idr.dump(2) + "\n");
                entry.update({{"status", "non_unique"}, {"identifiability", idr}});
                csv += est.name + "," + std::to_string(P) + ",non_unique,,,,,\n";
                log << stem << ": " << e.what() << "\n";
            }
            report.push_back(entry);
        }
    }
    io::write_text(c.output_dir / "fit_report.json", json{{"fits", report}}.dump(2) + "\n");
    io::write_text(c.output_dir / "fit_report.csv", csv);
    return non_unique ? numerical_failure : success;
}

/// FRF of a model file on the configured grid, written to frf.csv.
inline int cmd_frf(const ExperimentConfig& c, std::ostream& log)
{
    const auto& path = detail::require_path(c.data.model, "model");
    const FirModel model = io::read_model(path);
    const auto grid = io::linear_grid(c.frf.omega_min, c.frf.omega_max.value_or(std::numbers::pi / model.period()),
                                      c.frf.points);
    io::write_text(c.output_dir / "frf.csv", io::frf_csv(fir_frf(model, grid)));
    log << "wrote " << (c.output_dir / "frf.csv").string() << " (" << grid.size() << " points)\n";
    return success;
}

/// Marginal-likelihood tuning of one kernel estimator. Writes
/// tuned_hyperparameters.json, tune_trace.csv and tuned_config.json (the
/// input config with the tuned kernel and gamma substituted).
inline int cmd_tune(const ExperimentConfig& c, std::ostream& log)
{
    if (c.tune.estimator.empty()) throw ConfigError("config: 'tune.estimator' is required");
    const EstimatorSpec& est = c.estimator(c.tune.estimator);
    if (est.kind != EstimatorKind::kernel) throw ConfigError("tune: estimator '" + est.name + "' is not a kernel estimator");
    if (est.tune.empty()) throw ConfigError("tune: estimator '" + est.name + "' lists no tune.parameters");
    const auto d = detail::load_training(c);
    const std::size_t P = c.tune.order.value_or(c.orders.empty() ? d.u.size() : c.orders.front());
    if (P < 1 || P > d.u.size()) throw ConfigError("tune: order outside [1, N]");

    const auto phi = build_regressor(d.u, c.sampling.factor, P, d.y.size());
    const auto res = optimize_hyperparameters(phi, d.y, est.kernel, est.gamma, initial_hyperparameters(est), est.search);

    double gamma = est.gamma;
    const KernelSpec tuned = apply_hyperparameters(est.kernel, res.eta, gamma);

    fs::create_directories(c.output_dir);
    json values = json::object();
    for (const auto& h : res.eta.entries()) values[h.name] = h.value;
    const json summary = {{"estimator", est.name},
                          {"order", P},
                          {"hyperparameters", values},
                          {"objective_initial", res.initial_objective},
                          {"objective_final", res.objective},
                          {"evaluations", res.evaluations},
                          {"kernel", io::kernel_to_json(tuned)},
                          {"gamma", gamma}};
    io::write_text(c.output_dir / "tuned_hyperparameters.json", summary.dump(2) + "\n");

    std::string trace = "evaluation";
    for (const auto& h : res.eta.entries()) trace += "," + csv_quote(h.name);
    trace += ",objective,accepted\n";
    for (const auto& t : res.trace) {
        trace += std::to_string(t.evaluation);
        for (double v : t.values) trace += "," + io::format_double(v);
        trace += "," + io::format_double(t.objective) + "," + (t.accepted ? "1" : "0") + "\n";
    }
    io::write_text(c.output_dir / "tune_trace.csv", trace);

    json cfg = c.raw;
    for (auto& e : cfg["estimators"])
        if (e.value("name", std::string()) == est.name) {
            e["kernel"] = io::kernel_to_json(tuned);
            e["gamma"] = gamma;
        }
    io::write_text(c.output_dir / "tuned_config.json", cfg.dump(2) + "\n");
    log << est.name << " (P=" << P << "): objective " << res.initial_objective << " -> " << res.objective << " in "
        << res.evaluations << " evaluations\n";
    return success;
}

inline std::string records_csv(const MonteCarloResult& r)
{
    std::string s = "run,seed,order,estimator,status,gof,gamma,snr_target,snr_measured,m1,m2,k1,k2,d1,d2,message\n";
    using io::format_double;
    for (const auto& x : r.records) {
        s += std::to_string(x.run) + "," + std::to_string(x.seed) + "," + std::to_string(x.order) + "," +
             csv_quote(x.estimator) + "," + to_string(x.status) + "," + format_double(x.gof) + "," +
             format_double(x.gamma) + "," + format_double(x.snr_target) + "," + format_double(x.snr_measured) + "," +
             format_double(x.plant.m1) + "," + format_double(x.plant.m2) + "," + format_double(x.plant.k1) + "," +
             format_double(x.plant.k2) + "," + format_double(x.plant.d1) + "," + format_double(x.plant.d2) + "," +
             csv_quote(x.message) + "\n";
    }
    return s;
}

/// Mean GoF with the +-2 sample-standard-deviation band per order and
/// estimator.
inline std::string summary_csv(const MonteCarloResult& r)
{
    std::string s = "estimator,order,count,mean_gof,std_gof,lower_2std,upper_2std\n";
    using io::format_double;
    for (const auto& x : r.summary)
        s += csv_quote(x.estimator) + "," + std::to_string(x.order) + "," + std::to_string(x.count) + "," +
             format_double(x.mean) + "," + format_double(x.std) + "," + format_double(x.mean - 2.0 * x.std) + "," +
             format_double(x.mean + 2.0 * x.std) + "\n";
    return s;
}

/// Impulse-response length used for the exported nominal plant model.
inline constexpr std::size_t plant_export_length = 4000;

/// Monte Carlo study. Writes mc_records.csv, mc_summary.csv and, for the
/// nominal plant, plant_model.json (truncated impulse response) and
/// plant_frf.csv.
inline int cmd_simulate_mc(const ExperimentConfig& c, std::ostream& log)
{
    if (!c.monte_carlo) throw ConfigError("config: 'monte_carlo' section is required");
    const MonteCarloConfig& mc = *c.monte_carlo;
    const auto result = run_monte_carlo(mc);

    fs::create_directories(c.output_dir);
    io::write_text(c.output_dir / "mc_records.csv", records_csv(result));
    io::write_text(c.output_dir / "mc_summary.csv", summary_csv(result));

    const DiscretePlant nominal = zoh_discretize(build_plant(mc.nominal), mc.period);
    io::write_model(c.output_dir / "plant_model.json", plant_impulse_response(nominal, plant_export_length));
    const auto grid = io::linear_grid(c.frf.omega_min, c.omega_max(), c.frf.points);
    io::write_text(c.output_dir / "plant_frf.csv", io::frf_csv(plant_frf(nominal, grid)));

    std::size_t errors = 0;
    for (const auto& r : result.records)
        if (r.status == RecordStatus::error) {
            ++errors;
            log << "error: " << r.message << "\n";
        }
    for (const auto& row : result.summary)
        log << row.estimator << " P=" << row.order << ": mean GoF " << row.mean << " (std " << row.std << ", n="
            << row.count << ")\n";
    return errors ? numerical_failure : success;
}

/// Runs `mode` and maps failures to exit codes: 2 for input/config problems,
/// 1 for numerical failures.
inline int run(const std::string& mode, ExperimentConfig config, const Overrides& o, std::ostream& log,
               std::ostream& err)
{
    try {
        if (config.mode && *config.mode != mode)
            throw ConfigError("config mode '" + *config.mode + "' does not match command '" + mode + "'");
        apply(config, o);
        if (mode == "identify") return cmd_identify(config, log);
        if (mode == "frf") return cmd_frf(config, log);
        if (mode == "tune") return cmd_tune(config, log);
        if (mode == "simulate-mc") return cmd_simulate_mc(config, log);
        throw ConfigError("unknown command '" + mode + "'");
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed config: " << e.what() << "\n";
        return input_error;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return numerical_failure;
    }
}

/// Loads the config file, then dispatches to run().
inline int run_file(const std::string& mode, const fs::path& config_path, const Overrides& o, std::ostream& log,
                    std::ostream& err)
{
    try {
        return run(mode, load_config(config_path), o, log, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed config: " << e.what() << "\n";
        return input_error;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    }
}

} // namespace mrfir::cli

#endif
