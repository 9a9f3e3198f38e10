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

#ifndef MRFIR_CONFIG_HPP
#define MRFIR_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrfir/error.hpp"
#include "mrfir/io.hpp"
#include "mrfir/kernels.hpp"
#include "mrfir/sim.hpp"
#include "mrfir/tuning.hpp"

namespace mrfir {

struct SamplingConfig {
    double fast_period = 0.0; ///< T_h [s]
    int factor = 1;           ///< F
};

struct DataPaths {
    std::optional<std::filesystem::path> input;             ///< fast-rate u, signal CSV
    std::optional<std::filesystem::path> output;            ///< slow-rate y, signal CSV
    std::optional<std::filesystem::path> validation_input;  ///< fast-rate u, signal CSV
    std::optional<std::filesystem::path> validation_output; ///< fast-rate y, signal CSV
    std::optional<std::filesystem::path> model;             ///< model JSON (frf mode)
};

struct FrfGrid {
    std::size_t points = 1000;
    double omega_min = 0.0;
    std::optional<double> omega_max; ///< pi / T_h when empty
};

struct TuneTarget {
    std::string estimator;
    std::optional<std::size_t> order;
};

/// Parsed and validated experiment configuration.
struct ExperimentConfig {
    std::optional<std::string> mode;
    SamplingConfig sampling;
    DataPaths data;
    std::vector<std::size_t> orders;
    std::vector<EstimatorSpec> estimators;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    FrfGrid frf;
    TuneTarget tune;
    std::optional<MonteCarloConfig> monte_carlo;
    nlohmann::json raw;

    const EstimatorSpec& estimator(const std::string& name) const
    {
        for (const auto& e : estimators)
            if (e.name == name) return e;
        throw ConfigError("no estimator named '" + name + "'");
    }

    double omega_max() const { return frf.omega_max.value_or(std::numbers::pi / sampling.fast_period); }
};

namespace detail {

using nlohmann::json;

inline const json& field(const json& j, const char* name, const std::string& ctx)
{
    if (!j.contains(name)) throw ConfigError(ctx + ": missing field '" + name + "'");
    return j.at(name);
}

inline double number(const json& j, const char* name, const std::string& ctx)
{
    const json& v = field(j, name, ctx);
    if (!v.is_number()) throw ConfigError(ctx + ": '" + name + "' must be a number");
    return v.get<double>();
}

inline std::size_t count(const json& v, const std::string& ctx)
{
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(ctx + " must be a non-negative integer");
    return v.get<std::size_t>();
}

inline std::vector<std::size_t> orders(const json& v, const std::string& ctx)
{
    std::vector<std::size_t> out;
    if (v.is_number()) {
        out.push_back(count(v, ctx));
    } else if (v.is_array() && !v.empty()) {
        for (const auto& o : v) out.push_back(count(o, ctx + " entry"));
    } else {
        throw ConfigError(ctx + " must be an integer or non-empty array");
    }
    for (auto P : out)
        if (P < 1) throw ConfigError(ctx + ": model order must be >= 1");
    return out;
}

/// Default search box for a hyperparameter, by base name.
inline Hyperparameter default_bounds(const std::string& name)
{
    const auto dot = name.rfind('.');
    const std::string base = dot == std::string::npos ? name : name.substr(dot + 1);
    constexpr double edge = 1e-6;
    if (base == "gamma") return {name, 0.0, 1e-12, 1e4, SearchScale::log};
    if (base == "lambda") return {name, 0.0, 1e-10, 1e6, SearchScale::log};
    if (base == "sigma1" || base == "sigma2") return {name, 0.0, 1e-6, 1e4, SearchScale::log};
    if (base == "alpha" || base == "alpha_n") return {name, 0.0, edge, 1.0 - edge, SearchScale::linear};
    if (base == "beta") return {name, 0.0, -1.0 + edge, 1.0 - edge, SearchScale::linear};
    if (base == "omega_n") return {name, 0.0, 0.0, std::numbers::pi, SearchScale::linear};
    throw ConfigError("unknown hyperparameter '" + name + "'");
}

inline EstimatorSpec parse_estimator(const json& e, std::optional<double> fast_period)
{
    if (!e.is_object()) throw ConfigError("estimators: entries must be objects");
    EstimatorSpec est;
    const json& name = field(e, "name", "estimator");
    if (!name.is_string() || name.get<std::string>().empty())
        throw ConfigError("estimator: 'name' must be a non-empty string");
    est.name = name.get<std::string>();
    const std::string ctx = "estimator '" + est.name + "'";
    const std::string method = e.value("method", std::string("kernel"));
    if (method == "ls") {
        est.kind = EstimatorKind::least_squares;
        return est;
    }
    if (method != "kernel") throw ConfigError(ctx + ": method must be 'ls' or 'kernel'");
    est.kind = EstimatorKind::kernel;
    est.kernel = io::kernel_from_json(field(e, "kernel", ctx), fast_period);
    try {
        validate(est.kernel);
    } catch (const InvalidArgument& err) {
        throw ConfigError(ctx + ": " + err.what());
    }
    est.gamma = number(e, "gamma", ctx);
    if (!(est.gamma > 0.0))
        throw ConfigError(ctx + ": gamma must satisfy gamma>0 for a unique regularized estimate (got " +
                          std::to_string(est.gamma) + ")");

    if (e.contains("tune")) {
        const json& t = e.at("tune");
        if (!t.is_object()) throw ConfigError(ctx + ": 'tune' must be an object");
        if (t.contains("budget")) est.search.budget = count(t.at("budget"), ctx + ": tune.budget");
        if (est.search.budget < 1) throw ConfigError(ctx + ": tune.budget must be >= 1");
        if (t.contains("initial_step")) est.search.initial_step = number(t, "initial_step", ctx);
        if (!(est.search.initial_step > 0.0 && est.search.initial_step <= 1.0))
            throw ConfigError(ctx + ": tune.initial_step must be in (0, 1]");
        const json& params = field(t, "parameters", ctx + ".tune");
        if (!params.is_array()) throw ConfigError(ctx + ": tune.parameters must be an array");
        std::set<std::string> seen;
        for (const auto& p : params) {
            const std::string pname = p.is_string() ? p.get<std::string>() : p.value("name", std::string());
            if (pname.empty()) throw ConfigError(ctx + ": tune parameter needs a name");
            if (!seen.insert(pname).second) throw ConfigError(ctx + ": duplicate tune parameter '" + pname + "'");
            if (pname != "gamma" && !has_parameter(est.kernel, pname))
                throw ConfigError(ctx + ": kernel has no hyperparameter '" + pname + "'");
            Hyperparameter h = default_bounds(pname);
            if (p.is_object()) {
                if (p.contains("lower")) h.lower = number(p, "lower", ctx);
                if (p.contains("upper")) h.upper = number(p, "upper", ctx);
                if (p.contains("scale")) {
                    const std::string sc = p.at("scale").get<std::string>();
                    if (sc != "log" && sc != "linear") throw ConfigError(ctx + ": scale must be 'log' or 'linear'");
                    h.scale = sc == "log" ? SearchScale::log : SearchScale::linear;
                }
            }
            if (!(h.lower <= h.upper)) throw ConfigError(ctx + ": bounds of '" + pname + "' are reversed");
            // Every point of the box must be a valid hyperparameter.
            for (double edge : {h.lower, h.upper}) {
                if (pname == "gamma") {
                    if (!(edge > 0.0)) throw ConfigError(ctx + ": gamma bounds must satisfy gamma>0");
                    continue;
                }
                KernelSpec probe = est.kernel;
                set_parameter(probe, pname, edge);
                try {
                    validate(probe);
                } catch (const InvalidArgument& err) {
                    throw ConfigError(ctx + ": bound of '" + pname + "' out of range: " + err.what());
                }
            }
            if (h.scale == SearchScale::log && !(h.lower > 0.0))
                throw ConfigError(ctx + ": log-scale parameter '" + pname + "' needs a positive lower bound");
            est.tune.push_back(h);
        }
        try {
            (void)initial_hyperparameters(est);
        } catch (const InvalidArgument& err) {
            throw ConfigError(ctx + ": initial value outside tuning bounds: " + err.what());
        }
    }
    return est;
}

inline ContinuousPlant parse_plant(const json& p)
{
    ContinuousPlant c;
    const std::string ctx = "monte_carlo.plant";
    if (p.contains("m1")) c.m1 = number(p, "m1", ctx);
    if (p.contains("m2")) c.m2 = number(p, "m2", ctx);
    if (p.contains("k1")) c.k1 = number(p, "k1", ctx);
    if (p.contains("k2")) c.k2 = number(p, "k2", ctx);
    if (p.contains("d1")) c.d1 = number(p, "d1", ctx);
    if (p.contains("d2")) c.d2 = number(p, "d2", ctx);
    try {
        validate(c);
    } catch (const InvalidArgument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    return c;
}

inline std::optional<std::filesystem::path> path_field(const json& d, const char* name,
                                                       const std::filesystem::path& base)
{
    if (!d.contains(name)) return std::nullopt;
    if (!d.at(name).is_string()) throw ConfigError(std::string("data.") + name + " must be a string");
    std::filesystem::path p = d.at(name).get<std::string>();
    return p.is_absolute() ? p : base / p;
}

} // namespace detail

/// Parses and validates a configuration. Relative data paths are resolved
/// against `base_dir` (normally the directory of the config file).
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {})
{
    using detail::field;
    using detail::number;
    if (!j.is_object()) throw ConfigError("config: top-level JSON object required");
    ExperimentConfig c;
    c.raw = j;

    if (j.contains("mode")) {
        const std::string m = j.at("mode").get<std::string>();
        if (m != "identify" && m != "simulate-mc" && m != "frf" && m != "tune")
            throw ConfigError("config: unknown mode '" + m + "'");
        c.mode = m;
    }

    const auto& s = field(j, "sampling", "config");
    c.sampling.fast_period = number(s, "T_h", "sampling");
    if (!(c.sampling.fast_period > 0.0)) throw ConfigError("sampling: T_h must be > 0");
    const double F = s.contains("F") ? number(s, "F", "sampling") : 1.0;
    if (F < 1.0 || F != std::floor(F)) throw ConfigError("sampling: F must be an integer >= 1");
    c.sampling.factor = static_cast<int>(F);

    if (j.contains("data")) {
        const auto& d = j.at("data");
        c.data.input = detail::path_field(d, "input", base_dir);
        c.data.output = detail::path_field(d, "output", base_dir);
        c.data.validation_input = detail::path_field(d, "validation_input", base_dir);
        c.data.validation_output = detail::path_field(d, "validation_output", base_dir);
        c.data.model = detail::path_field(d, "model", base_dir);
        if (c.data.validation_input.has_value() != c.data.validation_output.has_value())
            throw ConfigError("data: validation_input and validation_output must be given together");
    }

    if (j.contains("orders")) c.orders = detail::orders(j.at("orders"), "orders");

    if (j.contains("estimators")) {
        if (!j.at("estimators").is_array()) throw ConfigError("estimators must be an array");
        std::set<std::string> names;
        for (const auto& e : j.at("estimators")) {
            c.estimators.push_back(detail::parse_estimator(e, c.sampling.fast_period));
            if (!names.insert(c.estimators.back().name).second)
                throw ConfigError("estimators: duplicate name '" + c.estimators.back().name + "'");
        }
    }

    if (j.contains("seed")) {
        const nlohmann::json& sv = j.at("seed");
        if (!sv.is_number_unsigned() && !(sv.is_number_integer() && sv.get<long long>() >= 0))
            throw ConfigError("seed must be a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("frf")) {
        const auto& f = j.at("frf");
        if (f.contains("points")) c.frf.points = detail::count(f.at("points"), "frf.points");
        if (c.frf.points < 1) throw ConfigError("frf.points must be >= 1");
        if (f.contains("omega_min")) c.frf.omega_min = number(f, "omega_min", "frf");
        if (f.contains("omega_max")) c.frf.omega_max = number(f, "omega_max", "frf");
        if (f.contains("f_max_hz")) c.frf.omega_max = 2.0 * std::numbers::pi * number(f, "f_max_hz", "frf");
        if (c.frf.omega_min < 0.0 || c.omega_max() < c.frf.omega_min)
            throw ConfigError("frf: need 0 <= omega_min <= omega_max");
    }

    if (j.contains("tune")) {
        const auto& t = j.at("tune");
        c.tune.estimator = field(t, "estimator", "tune").get<std::string>();
        if (t.contains("order")) c.tune.order = detail::count(t.at("order"), "tune.order");
    }

    if (j.contains("monte_carlo")) {
        const auto& m = j.at("monte_carlo");
        MonteCarloConfig mc;
        mc.period = c.sampling.fast_period;
        mc.factor = c.sampling.factor;
        mc.seed = c.seed;
        if (m.contains("runs")) mc.runs = detail::count(m.at("runs"), "monte_carlo.runs");
        if (mc.runs < 1) throw ConfigError("monte_carlo.runs must be >= 1");
        if (m.contains("perturbation")) mc.perturbation = number(m, "perturbation", "monte_carlo");
        if (m.contains("N")) mc.samples = detail::count(m.at("N"), "monte_carlo.N");
        if (m.contains("orders")) mc.orders = detail::orders(m.at("orders"), "monte_carlo.orders");
        else if (!c.orders.empty()) mc.orders = c.orders;
        if (m.contains("snr")) {
            const auto& r = m.at("snr");
            if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
                throw ConfigError("monte_carlo.snr must be [min, max]");
            mc.snr_min = r[0].get<double>();
            mc.snr_max = r[1].get<double>();
        }
        if (m.contains("input_rms")) mc.input_rms = number(m, "input_rms", "monte_carlo");
        if (m.contains("band")) {
            const auto& b = m.at("band");
            if (!b.is_array() || b.size() != 2) throw ConfigError("monte_carlo.band must be [first_bin, last_bin]");
            mc.band = FrequencyBand{detail::count(b[0], "monte_carlo.band"), detail::count(b[1], "monte_carlo.band")};
            if (mc.band->first < 1 || mc.band->last > mc.samples / 2 || mc.band->first > mc.band->last)
                throw ConfigError("monte_carlo.band must satisfy 1 <= first <= last <= N/2");
        }
        if (m.contains("plant")) mc.nominal = detail::parse_plant(m.at("plant"));
        mc.estimators = c.estimators;
        try {
            validate(mc);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        c.monte_carlo = std::move(mc);
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    return parse_config(io::read_json(path), path.parent_path());
}

} // namespace mrfir

#endif
