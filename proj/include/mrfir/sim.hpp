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

#ifndef MRFIR_SIM_HPP
#define MRFIR_SIM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <boost/random/uniform_01.hpp>

#include "mrfir/error.hpp"
#include "mrfir/estimator.hpp"
#include "mrfir/kernels.hpp"
#include "mrfir/regressor.hpp"
#include "mrfir/signals.hpp"
#include "mrfir/tuning.hpp"

namespace mrfir {

/// Two-mass benchmark: ground -(k1, d1)- m1 -(k2, d2)- m2, force on m1,
/// displacement of m2 measured.
struct ContinuousPlant {
    double m1 = 1.0;
    double m2 = 1.0;
    double k1 = 15.0;
    double k2 = 100.0;
    double d1 = 0.45;
    double d2 = 0.06;

    bool operator==(const ContinuousPlant&) const = default;
};

/// Continuous-time SISO state space  x' = A x + B u,  y = C x + D u.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;
};

/// Discrete-time SISO state space  x(t+1) = A x(t) + B u(t),  y = C x + D u.
struct DiscretePlant {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;
    double period = 1.0;
};

inline void validate(const ContinuousPlant& p)
{
    const std::pair<const char*, double> params[] = {{"m1", p.m1}, {"m2", p.m2}, {"k1", p.k1},
                                                     {"k2", p.k2}, {"d1", p.d1}, {"d2", p.d2}};
    for (const auto& [name, v] : params)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument(std::string("plant parameter ") + name + " must be positive (got " +
                                  std::to_string(v) + ")");
}

/// Mass-spring-damper state space with state [q1, q2, q1', q2'].
/// Damping may be zero here (undamped analysis); build_plant enforces the
/// positive-parameter contract.
inline StateSpace two_mass_state_space(const ContinuousPlant& p)
{
    Eigen::Matrix2d Minv = Eigen::Vector2d(1.0 / p.m1, 1.0 / p.m2).asDiagonal();
    Eigen::Matrix2d Ks;
    Ks << p.k1 + p.k2, -p.k2, -p.k2, p.k2;
    Eigen::Matrix2d Ds;
    Ds << p.d1 + p.d2, -p.d2, -p.d2, p.d2;

    StateSpace ss;
    ss.A = Eigen::MatrixXd::Zero(4, 4);
    ss.A.block<2, 2>(0, 2) = Eigen::Matrix2d::Identity();
    ss.A.block<2, 2>(2, 0) = -Minv * Ks;
    ss.A.block<2, 2>(2, 2) = -Minv * Ds;
    ss.B = Eigen::VectorXd::Zero(4);
    ss.B(2) = 1.0 / p.m1;
    ss.C = Eigen::RowVectorXd::Zero(4);
    ss.C(1) = 1.0;
    ss.D = 0.0;
    return ss;
}

inline StateSpace build_plant(const ContinuousPlant& p)
{
    validate(p);
    return two_mass_state_space(p);
}

/// Exact zero-order-hold discretization from the exponential of the
/// augmented matrix [[A, B], [0, 0]] T.
inline DiscretePlant zoh_discretize(const StateSpace& ss, double period)
{
    detail::require(period > 0.0 && std::isfinite(period), "zoh_discretize: period must be positive");
    const Eigen::Index n = ss.A.rows();
    detail::require(ss.A.cols() == n && ss.B.size() == n && ss.C.size() == n,
                    "zoh_discretize: inconsistent state-space dimensions");
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = ss.A * period;
    aug.topRightCorner(n, 1) = ss.B * period;
    const Eigen::MatrixXd E = aug.exp();
    return {E.topLeftCorner(n, n), E.topRightCorner(n, 1), ss.C, ss.D, period};
}

/// State recursion from x0 (zero when omitted).
inline FastSignal simulate(const DiscretePlant& plant, const FastSignal& u,
                           const std::optional<Eigen::VectorXd>& x0 = std::nullopt)
{
    const Eigen::Index n = plant.A.rows();
    Eigen::VectorXd x = x0.value_or(Eigen::VectorXd::Zero(n));
    detail::require(x.size() == n, "simulate: initial state has wrong dimension");
    std::vector<double> y(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) {
        y[t] = plant.C.dot(x) + plant.D * u[t];
        x = plant.A * x + plant.B * u[t];
    }
    return {std::move(y), u.period()};
}

/// C (e^{j w T} I - A)^{-1} B + D.
inline Complex plant_frequency_response(const DiscretePlant& plant, double omega)
{
    const Complex z = std::polar(1.0, omega * plant.period);
    Eigen::MatrixXcd R = -plant.A.cast<Complex>();
    R.diagonal().array() += z;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(R);
    if (!(lu.rcond() > 1e-14))
        throw NumericalError("plant_frf: e^{jwT} is (numerically) an eigenvalue of A at w=" + std::to_string(omega));
    const Eigen::VectorXcd x = lu.solve(plant.B.cast<Complex>());
    return (plant.C.cast<Complex>() * x)(0) + plant.D;
}

inline std::vector<FrfSample> plant_frf(const DiscretePlant& plant, std::span<const double> omegas)
{
    std::vector<FrfSample> out;
    out.reserve(omegas.size());
    for (double w : omegas) out.push_back({w, plant_frequency_response(plant, w)});
    return out;
}

/// First `length` Markov parameters: D, CB, CAB, ...
inline FirModel plant_impulse_response(const DiscretePlant& plant, std::size_t length)
{
    detail::require(length >= 1, "plant_impulse_response: length must be >= 1");
    std::vector<double> h(length);
    h[0] = plant.D;
    Eigen::VectorXd v = plant.B;
    for (std::size_t t = 1; t < length; ++t) {
        h[t] = plant.C.dot(v);
        v = plant.A * v;
    }
    return {std::move(h), plant.period};
}

/// Each parameter scaled by an independent factor uniform on [1-r, 1+r].
inline ContinuousPlant perturb_plant(const ContinuousPlant& nominal, double relative, Rng& rng)
{
    detail::require(relative >= 0.0 && relative < 1.0, "perturb_plant: relative bound must be in [0, 1)");
    boost::random::uniform_01<double> unit;
    auto draw = [&](double v) { return v * (1.0 + relative * (2.0 * unit(rng) - 1.0)); };
    ContinuousPlant p;
    p.m1 = draw(nominal.m1);
    p.m2 = draw(nominal.m2);
    p.k1 = draw(nominal.k1);
    p.k2 = draw(nominal.k2);
    p.d1 = draw(nominal.d1);
    p.d2 = draw(nominal.d2);
    return p;
}

// ---------------------------------------------------------------------------
// Monte Carlo study

enum class EstimatorKind { least_squares, kernel };

/// One estimator in a comparison. Kernel estimators optionally tune the
/// hyperparameters listed in `tune` by marginal likelihood before fitting;
/// their starting values are taken from `kernel` / `gamma`.
struct EstimatorSpec {
    std::string name;
    EstimatorKind kind = EstimatorKind::kernel;
    KernelSpec kernel;
    double gamma = 1.0;
    std::vector<Hyperparameter> tune;
    SearchOptions search;
};

/// Starting point for tuning: the current kernel/gamma values placed into
/// the configured bounds.
inline HyperparameterVector initial_hyperparameters(const EstimatorSpec& est)
{
    std::vector<Hyperparameter> entries = est.tune;
    for (auto& h : entries) h.value = h.name == "gamma" ? est.gamma : get_parameter(est.kernel, h.name);
    return HyperparameterVector(std::move(entries));
}

struct FittedEstimate {
    FirModel model;
    KernelSpec kernel;
    double gamma = 0.0;
    double marginal_likelihood = std::numeric_limits<double>::quiet_NaN();
    std::optional<TuningResult> tuning;
};

/// Fits one estimator on (Phi, y). Throws NonUniqueModel for least squares
/// without a unique minimizer.
inline FittedEstimate fit_estimator(const EstimatorSpec& est, const RegressorMatrix& phi, const SlowSignal& y)
{
    if (est.kind == EstimatorKind::least_squares)
        return {least_squares_fir(phi, y), KernelSpec{}, 0.0, std::numeric_limits<double>::quiet_NaN(), {}};

    KernelSpec kernel = est.kernel;
    double gamma = est.gamma;
    std::optional<TuningResult> tuning;
    if (!est.tune.empty()) {
        tuning = optimize_hyperparameters(phi, y, est.kernel, est.gamma, initial_hyperparameters(est), est.search);
        kernel = apply_hyperparameters(est.kernel, tuning->eta, gamma);
    }
    const auto K = build_kernel_matrix(kernel, static_cast<std::size_t>(phi.order()));
    auto sol = regularized_solve(phi.matrix(), y.vector(), K.matrix(), gamma);
    const double ml = marginal_likelihood(phi.matrix(), y.vector(), K.matrix(), gamma);
    return {FirModel(sol.theta, y.fast_period()), std::move(kernel), gamma, ml, std::move(tuning)};
}

struct MonteCarloConfig {
    std::size_t runs = 100;
    double perturbation = 0.10;
    std::size_t samples = 600; ///< N
    int factor = 3;            ///< F
    double period = 0.1;       ///< T_h
    std::vector<std::size_t> orders{50, 100, 150, 200, 300, 450, 600};
    double snr_min = 40.0;
    double snr_max = 60.0;
    std::uint64_t seed = 1;
    double input_rms = 1.0;
    std::optional<FrequencyBand> band; ///< full band when empty
    ContinuousPlant nominal;
    std::vector<EstimatorSpec> estimators;
    unsigned threads = 1;
};

/// Validates ranges; throws InvalidArgument naming the offending field.
inline void validate(const MonteCarloConfig& c)
{
    detail::require(c.runs >= 1, "monte_carlo: runs must be >= 1");
    detail::require(c.perturbation >= 0.0 && c.perturbation < 1.0, "monte_carlo: perturbation must be in [0, 1)");
    detail::require(c.samples >= 2, "monte_carlo: N must be >= 2");
    detail::require(c.factor >= 1, "monte_carlo: F must be >= 1");
    detail::require(c.period > 0.0, "monte_carlo: T_h must be positive");
    detail::require(!c.orders.empty(), "monte_carlo: at least one order required");
    for (auto P : c.orders)
        detail::require(P >= 1 && P <= c.samples, "monte_carlo: order " + std::to_string(P) + " outside [1, N]");
    detail::require(c.snr_min > 0.0 && c.snr_min <= c.snr_max, "monte_carlo: invalid SNR range");
    detail::require(c.input_rms > 0.0, "monte_carlo: input_rms must be positive");
    detail::require(!c.estimators.empty(), "monte_carlo: at least one estimator required");
    validate(c.nominal);
    for (const auto& e : c.estimators) {
        if (e.kind == EstimatorKind::kernel) {
            validate(e.kernel);
            detail::require(e.gamma > 0.0, "monte_carlo: estimator " + e.name + ": gamma must be > 0");
            if (!e.tune.empty()) (void)initial_hyperparameters(e);
        }
    }
}

enum class RecordStatus { ok, non_unique, error };

inline const char* to_string(RecordStatus s)
{
    switch (s) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::non_unique: return "non_unique";
    case RecordStatus::error: return "error";
    }
    return "unknown";
}

struct RunRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    ContinuousPlant plant;
    double snr_target = 0.0;
    double snr_measured = 0.0;
    std::size_t order = 0;
    std::string estimator;
    RecordStatus status = RecordStatus::ok;
    double gof = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::string message;
};

struct SummaryRow {
    std::string estimator;
    std::size_t order = 0;
    std::size_t count = 0; ///< runs with a finite GoF
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std = std::numeric_limits<double>::quiet_NaN(); ///< sample standard deviation
};

struct MonteCarloResult {
    std::vector<RunRecord> records; ///< run-major, then order, then estimator
    std::vector<SummaryRow> summary; ///< estimator-major, then order

    const SummaryRow& row(const std::string& estimator, std::size_t order) const
    {
        for (const auto& r : summary)
            if (r.estimator == estimator && r.order == order) return r;
        throw InvalidArgument("no summary row for " + estimator + " at order " + std::to_string(order));
    }
};

/// Training and validation data of one Monte Carlo run.
struct RunData {
    ContinuousPlant plant;
    DiscretePlant discrete;
    FastSignal u_train;
    FastSignal y_train_clean;
    FastSignal noise;
    SlowSignal y_slow;
    FastSignal u_val;
    FastSignal y_val;
    double snr_target;
    double snr_measured;
};

/// Scales `white` so that var(y)/var(noise) equals `snr` on this realization.
inline FastSignal scale_noise_to_snr(const FastSignal& y, const FastSignal& white, double snr)
{
    detail::require(snr > 0.0, "scale_noise_to_snr: ratio must be positive");
    const double vw = population_variance(white.samples());
    if (!(vw > 0.0)) throw UndefinedRatio("scale_noise_to_snr: noise realization has zero variance");
    const double s = std::sqrt(population_variance(y.samples()) / snr / vw);
    std::vector<double> e = white.samples();
    for (double& v : e) v *= s;
    return {std::move(e), white.period()};
}

/// Draws the perturbed plant, excitation, SNR and noise of run `run`.
/// Stream k of the run seed feeds: 0 plant, 1 training input, 2 validation
/// input, 3 SNR, 4 noise.
inline RunData generate_run(const MonteCarloConfig& c, std::size_t run)
{
    const std::uint64_t rs = derive_seed(c.seed, run);
    Rng plant_rng(derive_seed(rs, 0));
    const ContinuousPlant plant = perturb_plant(c.nominal, c.perturbation, plant_rng);
    const DiscretePlant dp = zoh_discretize(build_plant(plant), c.period);
    const FrequencyBand band = c.band.value_or(full_band(c.samples));

    FastSignal u_train = random_multisine(c.samples, c.period, band, c.input_rms, derive_seed(rs, 1));
    FastSignal u_val = random_multisine(c.samples, c.period, band, c.input_rms, derive_seed(rs, 2));
    FastSignal y_clean = simulate(dp, u_train);
    FastSignal y_val = simulate(dp, u_val);

    Rng snr_rng(derive_seed(rs, 3));
    boost::random::uniform_01<double> unit;
    const double snr = c.snr_min + (c.snr_max - c.snr_min) * unit(snr_rng);
    FastSignal noise =
        scale_noise_to_snr(y_clean, random_noise(c.samples, c.period, 1.0, derive_seed(rs, 4)), snr);

    std::vector<double> y_noisy = y_clean.samples();
    for (std::size_t t = 0; t < y_noisy.size(); ++t) y_noisy[t] += noise[t];
    SlowSignal y_slow = downsample(FastSignal(std::move(y_noisy), c.period), c.factor);
    const double measured = snr_variance_ratio(y_clean, noise);
    return {plant,          dp,    std::move(u_train), std::move(y_clean), std::move(noise), std::move(y_slow),
            std::move(u_val), std::move(y_val), snr, measured};
}

/// All records of one run, order-major then estimator.
inline std::vector<RunRecord> run_single(const MonteCarloConfig& c, std::size_t run)
{
    std::vector<RunRecord> out;
    RunRecord base;
    base.run = run;
    base.seed = derive_seed(c.seed, run);

    std::optional<RunData> data;
    std::string failure;
    try {
        data = generate_run(c, run);
        base.plant = data->plant;
        base.snr_target = data->snr_target;
        base.snr_measured = data->snr_measured;
    } catch (const std::exception& e) {
        failure = std::string("run ") + std::to_string(run) + ": data generation failed: " + e.what();
    }

    for (std::size_t P : c.orders) {
        std::optional<RegressorMatrix> phi;
        if (data) phi = build_regressor(data->u_train, c.factor, P, data->y_slow.size());
        for (const auto& est : c.estimators) {
            RunRecord r = base;
            r.order = P;
            r.estimator = est.name;
            if (!data) {
                r.status = RecordStatus::error;
                r.message = failure;
                out.push_back(std::move(r));
                continue;
            }
            try {
                auto fit = fit_estimator(est, *phi, data->y_slow);
                const FastSignal yhat = predict_fast_output(fit.model, data->u_val);
                r.gof = goodness_of_fit(data->y_val, yhat);
                r.gamma = est.kind == EstimatorKind::kernel ? fit.gamma : std::numeric_limits<double>::quiet_NaN();
            } catch (const NonUniqueModel& e) {
                r.status = RecordStatus::non_unique;
                r.message = e.what();
            } catch (const std::exception& e) {
                r.status = RecordStatus::error;
                r.message = "run " + std::to_string(run) + ", order " + std::to_string(P) + ", " + est.name + ": " +
                            e.what();
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

/// Mean and sample standard deviation of the finite GoF values per
/// (estimator, order).
inline std::vector<SummaryRow> summarize(const MonteCarloConfig& c, const std::vector<RunRecord>& records)
{
    std::vector<SummaryRow> rows;
    for (const auto& est : c.estimators) {
        for (std::size_t P : c.orders) {
            SummaryRow row{est.name, P};
            double sum = 0.0;
            std::vector<double> vals;
            for (const auto& r : records)
                if (r.estimator == est.name && r.order == P && r.status == RecordStatus::ok && std::isfinite(r.gof))
                    vals.push_back(r.gof);
            row.count = vals.size();
            if (!vals.empty()) {
                for (double v : vals) sum += v;
                row.mean = sum / static_cast<double>(vals.size());
                if (vals.size() >= 2) {
                    double ss = 0.0;
                    for (double v : vals) ss += (v - row.mean) * (v - row.mean);
                    row.std = std::sqrt(ss / static_cast<double>(vals.size() - 1));
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

/// Runs are independent; run k always uses stream derive_seed(seed, k) and its
/// records land in slot k, so the result does not depend on `threads`.
inline MonteCarloResult run_monte_carlo(const MonteCarloConfig& c)
{
    validate(c);
    std::vector<std::vector<RunRecord>> per_run(c.runs);
    const unsigned threads = std::max(1u, std::min<unsigned>(c.threads, static_cast<unsigned>(c.runs)));
    if (threads == 1) {
        for (std::size_t k = 0; k < c.runs; ++k) per_run[k] = run_single(c, k);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < c.runs; k += threads) per_run[k] = run_single(c, k);
            });
        for (auto& t : pool) t.join();
    }
    MonteCarloResult res;
    for (auto& v : per_run)
        for (auto& r : v) res.records.push_back(std::move(r));
    res.summary = summarize(c, res.records);
    return res;
}

} // namespace mrfir

#endif
