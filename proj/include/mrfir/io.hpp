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

#ifndef MRFIR_IO_HPP
#define MRFIR_IO_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrfir/error.hpp"
#include "mrfir/kernels.hpp"
#include "mrfir/signals.hpp"

namespace mrfir::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// 17 significant digits, enough to round-trip any double. NaN is written
/// as an empty field.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << text;
}

inline json read_json(const fs::path& path)
{
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Signal CSV: header "index,value", one row per sample, indices 0..n-1.

inline std::string signal_csv(std::span<const double> x)
{
    std::string s = "index,value\n";
    for (std::size_t t = 0; t < x.size(); ++t) s += std::to_string(t) + "," + format_double(x[t]) + "\n";
    return s;
}

inline std::vector<double> parse_signal_csv(const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(origin + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "index,value") throw ConfigError(origin + ": expected header 'index,value'");
    std::vector<double> x;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": missing comma");
        std::size_t idx = 0;
        double v = 0.0;
        try {
            std::size_t used = 0;
            idx = std::stoul(line.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("index");
            const std::string vs = line.substr(comma + 1);
            v = std::stod(vs, &used);
            if (used != vs.size()) throw std::invalid_argument("value");
        } catch (const std::exception&) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
        }
        if (idx != x.size())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected index " + std::to_string(x.size()));
        if (!std::isfinite(v)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": non-finite value");
        x.push_back(v);
    }
    if (x.empty()) throw ConfigError(origin + ": no samples");
    return x;
}

inline std::vector<double> read_signal_csv(const fs::path& path)
{
    return parse_signal_csv(read_text(path), path.string());
}

inline void write_signal_csv(const fs::path& path, std::span<const double> x) { write_text(path, signal_csv(x)); }

// ---------------------------------------------------------------------------
// Model file: {"period_s": T_h, "theta": [...]}

inline json model_to_json(const FirModel& m) { return json{{"period_s", m.period()}, {"theta", m.theta()}}; }

inline FirModel model_from_json(const json& j, const std::string& origin = "model")
{
    try {
        if (!j.is_object() || !j.contains("period_s") || !j.contains("theta"))
            throw ConfigError(origin + ": model must be an object with 'period_s' and 'theta'");
        if (!j.at("period_s").is_number()) throw ConfigError(origin + ": 'period_s' must be a number");
        if (!j.at("theta").is_array() || j.at("theta").empty())
            throw ConfigError(origin + ": 'theta' must be a non-empty array");
        std::vector<double> theta;
        for (const auto& v : j.at("theta")) {
            if (!v.is_number()) throw ConfigError(origin + ": 'theta' entries must be numbers");
            theta.push_back(v.get<double>());
        }
        return {std::move(theta), j.at("period_s").get<double>()};
    } catch (const InvalidArgument& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline std::string model_text(const FirModel& m) { return model_to_json(m).dump(2) + "\n"; }

inline FirModel read_model(const fs::path& path) { return model_from_json(read_json(path), path.string()); }

inline void write_model(const fs::path& path, const FirModel& m) { write_text(path, model_text(m)); }

inline std::string theta_csv(const FirModel& m) { return signal_csv(m.theta()); }

// ---------------------------------------------------------------------------
// FRF CSV: omega_rad_s,freq_hz,magnitude,phase_rad

/// n points linearly spaced on [lo, hi] (n == 1 gives lo).
inline std::vector<double> linear_grid(double lo, double hi, std::size_t n)
{
    detail::require(n >= 1, "frequency grid needs at least one point");
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k)
        g[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return g;
}

inline std::string frf_csv(std::span<const FrfSample> frf)
{
    std::string s = "omega_rad_s,freq_hz,magnitude,phase_rad\n";
    for (const auto& f : frf)
        s += format_double(f.omega) + "," + format_double(f.omega / (2.0 * std::numbers::pi)) + "," +
             format_double(std::abs(f.value)) + "," + format_double(std::arg(f.value)) + "\n";
    return s;
}

struct FrfRow {
    double omega, freq_hz, magnitude, phase;
};

inline std::vector<FrfRow> parse_frf_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "omega_rad_s,freq_hz,magnitude,phase_rad") throw ConfigError("FRF CSV: unexpected header");
    std::vector<FrfRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        FrfRow r{};
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r.omega, &r.freq_hz, &r.magnitude, &r.phase) != 4)
            throw ConfigError("FRF CSV: malformed row '" + line + "'");
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// KernelSpec JSON: {"type": "dc"|"ss"|"tikhonov"|"pk"|"sum", parameters by
// name, "terms" for sum}. Decay parameters (alpha, beta, alpha_n) also accept
// {"rate": c} meaning exp(-c T_h); omega_n accepts {"hz": f} meaning
// 2 pi f T_h. Both forms need the fast period.

namespace detail {

inline double kernel_number(const json& k, const char* name, std::optional<double> fast_period, bool decay,
                            bool frequency)
{
    if (!k.contains(name)) throw ConfigError(std::string("kernel: missing parameter '") + name + "'");
    const json& v = k.at(name);
    if (v.is_number()) return v.get<double>();
    if (v.is_object()) {
        if (!fast_period)
            throw ConfigError(std::string("kernel: parameter '") + name + "' uses a rate form but T_h is unknown");
        if (decay && v.contains("rate") && v.at("rate").is_number())
            return std::exp(-v.at("rate").get<double>() * *fast_period);
        if (frequency && v.contains("hz") && v.at("hz").is_number())
            return 2.0 * std::numbers::pi * v.at("hz").get<double>() * *fast_period;
    }
    throw ConfigError(std::string("kernel: parameter '") + name + "' has an unsupported form");
}

} // namespace detail

inline KernelSpec kernel_from_json(const json& k, std::optional<double> fast_period = std::nullopt)
{
    if (!k.is_object() || !k.contains("type") || !k.at("type").is_string())
        throw ConfigError("kernel: object with string 'type' required");
    const std::string type = k.at("type").get<std::string>();
    using detail::kernel_number;
    if (type == "tikhonov") return Tikhonov{};
    if (type == "dc")
        return DiagonalCorrelated{kernel_number(k, "lambda", fast_period, false, false),
                                  kernel_number(k, "alpha", fast_period, true, false),
                                  kernel_number(k, "beta", fast_period, true, false)};
    if (type == "ss")
        return StableSpline{kernel_number(k, "lambda", fast_period, false, false),
                            kernel_number(k, "alpha", fast_period, true, false)};
    if (type == "pk")
        return PriorKnowledge{kernel_number(k, "alpha_n", fast_period, true, false),
                              kernel_number(k, "omega_n", fast_period, false, true),
                              kernel_number(k, "sigma1", fast_period, false, false),
                              kernel_number(k, "sigma2", fast_period, false, false)};
    if (type == "sum") {
        if (!k.contains("terms") || !k.at("terms").is_array() || k.at("terms").empty())
            throw ConfigError("kernel: sum requires a non-empty 'terms' array");
        std::vector<KernelSpec> terms;
        for (const auto& t : k.at("terms")) terms.push_back(kernel_from_json(t, fast_period));
        return kernel_sum(std::move(terms));
    }
    throw ConfigError("kernel: unknown type '" + type + "'");
}

inline json kernel_to_json(const KernelSpec& spec)
{
    return std::visit(
        [](const auto& k) -> json {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Tikhonov>) {
                return {{"type", "tikhonov"}};
            } else if constexpr (std::is_same_v<T, DiagonalCorrelated>) {
                return {{"type", "dc"}, {"lambda", k.lambda}, {"alpha", k.alpha}, {"beta", k.beta}};
            } else if constexpr (std::is_same_v<T, StableSpline>) {
                return {{"type", "ss"}, {"lambda", k.lambda}, {"alpha", k.alpha}};
            } else if constexpr (std::is_same_v<T, PriorKnowledge>) {
                return {{"type", "pk"},
                        {"alpha_n", k.alpha_n},
                        {"omega_n", k.omega_n},
                        {"sigma1", k.sigma1},
                        {"sigma2", k.sigma2}};
            } else {
                json terms = json::array();
                for (const auto& t : k.terms) terms.push_back(kernel_to_json(t));
                return {{"type", "sum"}, {"terms", terms}};
            }
        },
        spec.value());
}

} // namespace mrfir::io

#endif
