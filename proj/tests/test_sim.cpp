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

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "mrfir/sim.hpp"
#include "oracles.hpp"

using namespace mrfir;

namespace {

constexpr double pi = std::numbers::pi;

// Local maxima of |G| on a dense grid over (0, pi/T) that rise at least 3 dB
// above the lower of the neighbouring minima.
int count_peaks(const DiscretePlant& plant)
{
    const std::size_t n = 4000;
    std::vector<double> mag(n);
    for (std::size_t k = 0; k < n; ++k)
        mag[k] = std::abs(plant_frequency_response(plant, (static_cast<double>(k) + 0.5) * pi / plant.period / n));
    int peaks = 0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (!(mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])) continue;
        double left = mag[k], right = mag[k];
        for (std::size_t j = k; j-- > 0;) left = std::min(left, mag[j]);
        for (std::size_t j = k + 1; j < n; ++j) right = std::min(right, mag[j]);
        if (mag[k] > std::sqrt(2.0) * std::max(left, right)) ++peaks;
    }
    return peaks;
}

DiscretePlant nominal_plant() { return zoh_discretize(build_plant(ContinuousPlant{}), 0.1); }

EstimatorSpec ls_estimator() { return {"LS", EstimatorKind::least_squares, {}, 1.0, {}, {}}; }

EstimatorSpec dc_estimator()
{
    return {"DC", EstimatorKind::kernel, DiagonalCorrelated{1e-4, std::exp(-0.05), std::exp(-0.01)}, 1e-5, {}, {}};
}

} // namespace

TEST(Plant, NominalHasTwoResonancesBelowNyquist)
{
    EXPECT_EQ(count_peaks(nominal_plant()), 2);
    Eigen::EigenSolver<Eigen::MatrixXd> es(nominal_plant().A);
    for (Eigen::Index k = 0; k < 4; ++k) EXPECT_LT(std::abs(es.eigenvalues()(k)), 1.0);
}

TEST(Plant, StiffCouplingMergesPeaks)
{
    ContinuousPlant p;
    p.k2 = 1e6;
    p.d2 = 10.0;
    EXPECT_EQ(count_peaks(zoh_discretize(build_plant(p), 0.1)), 1);
}

TEST(Plant, UndampedEigenvaluesMatchStiffnessMassPencil)
{
    ContinuousPlant p{1.3, 0.7, 15.0, 100.0, 0.0, 0.0};
    const auto ss = two_mass_state_space(p);
    Eigen::EigenSolver<Eigen::MatrixXd> es(ss.A);
    std::vector<double> freqs;
    for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_NEAR(es.eigenvalues()(k).real(), 0.0, 1e-9);
        if (es.eigenvalues()(k).imag() > 0.0) freqs.push_back(es.eigenvalues()(k).imag());
    }
    std::sort(freqs.begin(), freqs.end());
    Eigen::Matrix2d K, M;
    K << p.k1 + p.k2, -p.k2, -p.k2, p.k2;
    M << p.m1, 0.0, 0.0, p.m2;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> ges(K, M);
    ASSERT_EQ(freqs.size(), 2u);
    EXPECT_NEAR(freqs[0] * freqs[0], ges.eigenvalues()(0), 1e-8 * ges.eigenvalues()(1));
    EXPECT_NEAR(freqs[1] * freqs[1], ges.eigenvalues()(1), 1e-8 * ges.eigenvalues()(1));
    EXPECT_THROW(build_plant(p), InvalidArgument);
}

TEST(Plant, RejectsNonPositiveParameters)
{
    ContinuousPlant p;
    p.m2 = 0.0;
    try {
        build_plant(p);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("m2"), std::string::npos);
    }
}

TEST(Zoh, PureIntegrators)
{
    StateSpace ss{Eigen::MatrixXd::Zero(3, 3), Eigen::Vector3d(1.0, -2.0, 0.5), Eigen::RowVector3d(1, 0, 0), 0.0};
    const auto d = zoh_discretize(ss, 0.25);
    EXPECT_TRUE(d.A.isIdentity(1e-15));
    EXPECT_LE((d.B - 0.25 * ss.B).norm(), 1e-15);
}

TEST(Zoh, ScalarDecay)
{
    StateSpace ss{Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::VectorXd::Ones(1), Eigen::RowVectorXd::Ones(1), 0.0};
    const auto d = zoh_discretize(ss, 0.3);
    EXPECT_NEAR(d.A(0, 0), std::exp(-0.3), 1e-15);
    EXPECT_NEAR(d.B(0), 1.0 - std::exp(-0.3), 1e-15);
}

TEST(Zoh, SemigroupProperty)
{
    std::mt19937_64 rng(81);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd A(4, 4);
        for (Eigen::Index k = 0; k < A.size(); ++k) A(k) = oracle::gaussian_vector(rng, 1)[0];
        // shift the spectrum into the left half plane
        Eigen::EigenSolver<Eigen::MatrixXd> es(A);
        A.diagonal().array() -= es.eigenvalues().real().maxCoeff() + 0.5;
        const StateSpace ss{A, Eigen::Vector4d::Ones(), Eigen::RowVector4d::Ones(), 0.0};
        const auto one = zoh_discretize(ss, 0.1), two = zoh_discretize(ss, 0.2);
        EXPECT_LE((two.A - one.A * one.A).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((two.B - (one.A * one.B + one.B)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Simulate, ZeroInputZeroState)
{
    const auto y = simulate(nominal_plant(), FastSignal(std::vector<double>(50, 0.0), 0.1));
    for (double v : y.samples()) EXPECT_EQ(v, 0.0);
}

TEST(Simulate, ImpulseResponseIsMarkovSequence)
{
    auto plant = nominal_plant();
    plant.D = 0.3;
    std::vector<double> u(20, 0.0);
    u[0] = 1.0;
    const auto y = simulate(plant, FastSignal(u, 0.1));
    const auto h = oracle::markov_parameters(plant.A, plant.B, plant.C, plant.D, 20);
    for (std::size_t t = 0; t < 20; ++t) EXPECT_NEAR(y[t], h[t], 1e-10);
    const auto fir = plant_impulse_response(plant, 20);
    for (std::size_t t = 0; t < 20; ++t) EXPECT_NEAR(fir[t], h[t], 1e-12);
}

TEST(Simulate, InitialStateDecays)
{
    const auto plant = nominal_plant();
    const Eigen::Vector4d x0(1.0, 0.0, 0.0, 0.0);
    const auto y = simulate(plant, FastSignal(std::vector<double>(3, 0.0), 0.1), x0);
    EXPECT_EQ(y[0], 0.0); // output is q2
    EXPECT_NEAR(y[1], (plant.C * plant.A * x0)(0), 1e-15);
    EXPECT_THROW(simulate(plant, FastSignal({0.0}, 0.1), Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST(Simulate, SteadyStateSpectralRatioMatchesFrf)
{
    const auto plant = nominal_plant();
    const std::size_t n = 6000;
    const double T = plant.period;
    const auto u = random_multisine(n, T, full_band(n), 1.0, 5);
    // two periods; the second one is in periodic steady state
    std::vector<double> uu = u.samples();
    uu.insert(uu.end(), u.samples().begin(), u.samples().end());
    const auto yy = simulate(plant, FastSignal(uu, T));
    const std::vector<double> y(yy.samples().begin() + static_cast<std::ptrdiff_t>(n), yy.samples().end());
    const auto U = dft(u), Y = dft(y);
    Eigen::EigenSolver<Eigen::MatrixXd> es(plant.A);
    std::vector<double> res;
    for (Eigen::Index k = 0; k < 4; ++k)
        if (std::arg(es.eigenvalues()(k)) > 0) res.push_back(std::arg(es.eigenvalues()(k)) / T);
    int checked = 0;
    for (std::size_t k = 1; k <= full_band(n).last; ++k) {
        const double w = 2.0 * pi * static_cast<double>(k) / (static_cast<double>(n) * T);
        bool near = false;
        for (double r : res) near = near || std::abs(w - r) < 0.25 * r;
        if (near) continue;
        const Complex g = plant_frequency_response(plant, w);
        EXPECT_LE(std::abs(Y[k] / U[k] - g), 0.02 * std::abs(g)) << "w=" << w;
        ++checked;
    }
    EXPECT_GT(checked, 1000);
}

TEST(PlantFrf, ScalarDcGainAndFeedthrough)
{
    const DiscretePlant scalar{Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::VectorXd::Constant(1, 0.5),
                               Eigen::RowVectorXd::Ones(1), 0.0, 1.0};
    EXPECT_NEAR(std::abs(plant_frequency_response(scalar, 0.0) - Complex(1.0)), 0.0, 1e-15);

    const DiscretePlant d_only{Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2), Eigen::RowVectorXd::Zero(2), 2.5,
                               0.1};
    for (const auto& s : plant_frf(d_only, std::vector<double>{0.0, 3.0, 20.0, 31.4}))
        EXPECT_NEAR(std::abs(s.value - Complex(2.5)), 0.0, 1e-15);
}

TEST(PlantFrf, SingularResolventThrows)
{
    const DiscretePlant integrator{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), Eigen::RowVectorXd::Ones(1),
                                   0.0, 1.0};
    EXPECT_THROW(plant_frequency_response(integrator, 0.0), NumericalError);
}

TEST(PlantFrf, MatchesLongTruncatedImpulseResponse)
{
    const auto plant = nominal_plant();
    const auto fir = plant_impulse_response(plant, 4000);
    for (const double w : [] { std::vector<double> g; for (int k = 0; k <= 200; ++k) g.push_back(k * pi / 0.1 / 200); return g; }()) {
        const Complex a = plant_frequency_response(plant, w);
        const Complex b = fir_frequency_response(fir, w);
        EXPECT_LE(std::abs(a - b), 1e-6) << "w=" << w;
    }
}

TEST(Perturbation, StaysWithinBounds)
{
    Rng rng(82);
    const ContinuousPlant nominal;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = perturb_plant(nominal, 0.1, rng);
        for (auto [v, v0] : {std::pair{p.m1, nominal.m1}, {p.m2, nominal.m2}, {p.k1, nominal.k1}, {p.k2, nominal.k2},
                             {p.d1, nominal.d1}, {p.d2, nominal.d2}}) {
            EXPECT_GT(v, 0.0);
            EXPECT_LE(std::abs(v / v0 - 1.0), 0.1 + 1e-15);
        }
    }
}

TEST(MonteCarlo, NoiseHitsDrawnSnr)
{
    MonteCarloConfig c;
    c.estimators = {dc_estimator()};
    for (std::size_t run = 0; run < 20; ++run) {
        const auto d = generate_run(c, run);
        EXPECT_GE(d.snr_target, 40.0);
        EXPECT_LE(d.snr_target, 60.0);
        EXPECT_LE(std::abs(d.snr_measured / d.snr_target - 1.0), 0.05);
        EXPECT_EQ(d.y_slow.size(), 200u);
        EXPECT_EQ(d.u_train.size(), 600u);
        EXPECT_NE(d.u_train, d.u_val);
    }
}

TEST(MonteCarlo, RunsAreReproducible)
{
    MonteCarloConfig c;
    c.seed = 9;
    const auto a = generate_run(c, 3), b = generate_run(c, 3), other = generate_run(c, 4);
    EXPECT_EQ(a.plant, b.plant);
    EXPECT_EQ(a.y_slow, b.y_slow);
    EXPECT_EQ(a.u_val, b.u_val);
    EXPECT_NE(a.y_slow, other.y_slow);
}

TEST(MonteCarlo, SmokeSingleRun)
{
    MonteCarloConfig c;
    c.runs = 1;
    c.orders = {100};
    c.estimators = {dc_estimator()};
    const auto r = run_monte_carlo(c);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].status, RecordStatus::ok);
    EXPECT_TRUE(std::isfinite(r.records[0].gof));
    EXPECT_EQ(r.row("DC", 100).count, 1u);
}

TEST(MonteCarlo, LeastSquaresAboveOutputLengthIsNonUnique)
{
    MonteCarloConfig c;
    c.runs = 2;
    c.orders = {150, 200, 300};
    c.estimators = {ls_estimator(), dc_estimator()};
    const auto r = run_monte_carlo(c);
    ASSERT_EQ(r.records.size(), 2u * 3u * 2u);
    for (const auto& rec : r.records) {
        if (rec.estimator == "LS" && rec.order >= 200) {
            EXPECT_EQ(rec.status, RecordStatus::non_unique);
            EXPECT_TRUE(std::isnan(rec.gof));
        } else {
            EXPECT_EQ(rec.status, RecordStatus::ok) << rec.message;
            EXPECT_TRUE(std::isfinite(rec.gof));
        }
    }
    EXPECT_EQ(r.row("LS", 300).count, 0u);
    EXPECT_TRUE(std::isnan(r.row("LS", 300).mean));
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults)
{
    MonteCarloConfig c;
    c.runs = 5;
    c.samples = 300;
    c.orders = {40, 120};
    c.estimators = {ls_estimator(), dc_estimator()};
    c.threads = 1;
    const auto a = run_monte_carlo(c);
    c.threads = 4;
    const auto b = run_monte_carlo(c);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        EXPECT_EQ(a.records[k].run, b.records[k].run);
        EXPECT_EQ(a.records[k].seed, b.records[k].seed);
        EXPECT_EQ(std::isnan(a.records[k].gof), std::isnan(b.records[k].gof));
        if (!std::isnan(a.records[k].gof)) {
            EXPECT_EQ(a.records[k].gof, b.records[k].gof);
        }
    }
    for (std::size_t k = 0; k < a.summary.size(); ++k) {
        EXPECT_EQ(a.summary[k].count, b.summary[k].count);
        if (a.summary[k].count > 0) {
            EXPECT_EQ(a.summary[k].mean, b.summary[k].mean);
        }
    }
}

TEST(MonteCarlo, ConfigValidation)
{
    MonteCarloConfig c;
    c.estimators = {dc_estimator()};
    EXPECT_NO_THROW(validate(c));
    auto bad = c;
    bad.runs = 0;
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad = c;
    bad.orders = {601};
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad = c;
    bad.estimators[0].gamma = 0.0;
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad = c;
    bad.snr_min = 70.0;
    EXPECT_THROW(validate(bad), InvalidArgument);
}

// Full-rate sampling of a noiseless FIR system: least squares is exact.
TEST(MonteCarlo, FullRateNoiselessLeastSquaresIsExact)
{
    std::mt19937_64 rng(83);
    const auto theta0 = oracle::gaussian_vector(rng, 25);
    const FirModel truth(theta0, 0.1);
    const auto u = random_multisine(400, 0.1, full_band(400), 1.0, 1);
    const auto uv = random_multisine(400, 0.1, full_band(400), 1.0, 2);
    const auto y = predict_fast_output(truth, u);
    const auto phi = build_regressor(u, 1, 25);
    const auto model = least_squares_fir(phi, downsample(y, 1));
    EXPECT_NEAR(goodness_of_fit(predict_fast_output(truth, uv), predict_fast_output(model, uv)), 100.0, 1e-6);
}
