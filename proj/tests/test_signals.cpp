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

#include <gtest/gtest.h>

#include "mrfir/estimator.hpp"
#include "mrfir/signals.hpp"
#include "mrfir/sim.hpp"
#include "oracles.hpp"

using namespace mrfir;

namespace {

constexpr double pi = std::numbers::pi;

double rms(const std::vector<double>& x)
{
    double ss = 0.0;
    for (double v : x) ss += v * v;
    return std::sqrt(ss / static_cast<double>(x.size()));
}

} // namespace

TEST(Signals, ConstructorsRejectInvalidData)
{
    EXPECT_THROW(FastSignal({}, 0.1), InvalidArgument);
    EXPECT_THROW(FastSignal({1.0}, 0.0), InvalidArgument);
    EXPECT_THROW(FastSignal({1.0, NAN}, 0.1), InvalidArgument);
    EXPECT_THROW(SlowSignal({1.0}, 0.1, 0), InvalidArgument);
    EXPECT_THROW(FirModel(std::vector<double>{}, 0.1), InvalidArgument);
    EXPECT_THROW(FirModel(std::vector<double>{INFINITY}, 0.1), InvalidArgument);
}

TEST(Downsample, KeepsEveryFthSample)
{
    const FastSignal x({1, 2, 3, 4, 5, 6}, 0.1);
    const auto y = downsample(x, 3);
    EXPECT_EQ(y.samples(), (std::vector<double>{1, 4}));
    EXPECT_EQ(y.factor(), 3);
    EXPECT_NEAR(y.period(), 0.3, 1e-15);
}

TEST(Downsample, FactorOneIsIdentity)
{
    const FastSignal x({3, -1, 4, 1, -5}, 0.01);
    EXPECT_EQ(downsample(x, 1).samples(), x.samples());
}

TEST(Downsample, TableLengths)
{
    const FastSignal x(std::vector<double>(600, 1.0), 0.1);
    EXPECT_EQ(downsample(x, 3).size(), 200u);
    EXPECT_EQ(downsample(FastSignal(std::vector<double>(7, 0.0), 1.0), 3).size(), 3u);
}

TEST(Downsample, RejectsNonPositiveFactor)
{
    const FastSignal x({1, 2, 3}, 0.1);
    EXPECT_THROW(downsample(x, 0), InvalidArgument);
    EXPECT_THROW(downsample(x, -2), InvalidArgument);
}

TEST(Downsample, CompositionMultipliesFactors)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 200), fac(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const FastSignal x(oracle::gaussian_vector(rng, static_cast<std::size_t>(len(rng))), 0.1);
        const int f1 = fac(rng), f2 = fac(rng);
        const auto twice = downsample(downsample(x, f1), f2);
        const auto once = downsample(x, f1 * f2);
        ASSERT_EQ(twice.size(), once.size());
        EXPECT_EQ(twice.samples(), once.samples());
        EXPECT_EQ(twice.factor(), f1 * f2);
    }
}

TEST(Multisine, SingleBinIsPureCosine)
{
    const std::size_t n = 64;
    const double T = 0.5;
    const auto x = random_multisine(n, T, {5, 5}, 2.0, 99);
    EXPECT_NEAR(rms(x.samples()), 2.0, 1e-12 * 2.0);
    // a cos(w t + phi): recover phase from the first sample and check the rest
    const double a = 2.0 * std::sqrt(2.0);
    const double w = 2.0 * pi * 5.0 / (static_cast<double>(n) * T);
    const auto X = oracle::naive_dft(x.samples());
    const double phi = std::arg(X[5]);
    for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(x[t], a * std::cos(w * T * static_cast<double>(t) + phi), 1e-12);
}

TEST(Multisine, DeterministicInSeed)
{
    const auto a = random_multisine(300, 0.1, full_band(300), 1.0, 7);
    const auto b = random_multisine(300, 0.1, full_band(300), 1.0, 7);
    const auto c = random_multisine(300, 0.1, full_band(300), 1.0, 8);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Multisine, FlatSpectrumOverFullBand)
{
    const std::size_t n = 600;
    const auto band = full_band(n);
    const auto x = random_multisine(n, 0.1, band, 1.0, 2024);
    EXPECT_NEAR(rms(x.samples()), 1.0, 1e-12);
    const auto X = oracle::naive_dft(x.samples());
    const double ref = std::abs(X[band.first]);
    double peak = 0.0;
    for (std::size_t k = band.first; k <= band.last; ++k) {
        EXPECT_NEAR(std::abs(X[k]) / ref, 1.0, 1e-9) << "bin " << k;
        peak = std::max(peak, std::abs(X[k]));
    }
    EXPECT_LT(std::abs(X[0]), 1e-9 * peak);
    EXPECT_LT(std::abs(X[n / 2]), 1e-9 * peak);
}

TEST(Multisine, NyquistBinHasMatchingMagnitude)
{
    const std::size_t n = 40;
    const auto x = random_multisine(n, 1.0, {1, n / 2}, 1.0, 3);
    const auto X = oracle::naive_dft(x.samples());
    for (std::size_t k = 2; k <= n / 2; ++k) EXPECT_NEAR(std::abs(X[k]) / std::abs(X[1]), 1.0, 1e-9);
}

TEST(Multisine, RejectsEmptyOrOutOfRangeBand)
{
    EXPECT_THROW(random_multisine(100, 0.1, {0, 10}, 1.0, 1), InvalidArgument);
    EXPECT_THROW(random_multisine(100, 0.1, {10, 9}, 1.0, 1), InvalidArgument);
    EXPECT_THROW(random_multisine(100, 0.1, {1, 51}, 1.0, 1), InvalidArgument);
    EXPECT_THROW(random_multisine(100, 0.1, {1, 10}, 0.0, 1), InvalidArgument);
}

TEST(Noise, MomentsAndDeterminism)
{
    const auto e = random_noise(100000, 0.1, 1.0, 5);
    double mean = 0.0;
    for (double v : e.samples()) mean += v;
    mean /= static_cast<double>(e.size());
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(population_variance(e.samples()), 1.0, 0.1);
    EXPECT_EQ(random_noise(50, 0.1, 1.0, 5), random_noise(50, 0.1, 1.0, 5));
    EXPECT_THROW(random_noise(10, 0.1, 0.0, 5), InvalidArgument);
    EXPECT_THROW(random_noise(10, 0.1, -1.0, 5), InvalidArgument);
}

TEST(FirFrf, UnitImpulseAndDelay)
{
    const double T = 0.01;
    const std::vector<double> ws{0.0, 1.0, 37.5, 1000.0};
    for (const auto& s : fir_frf(FirModel({1.0}, T), ws)) {
        EXPECT_NEAR(s.value.real(), 1.0, 1e-15);
        EXPECT_NEAR(s.value.imag(), 0.0, 1e-15);
    }
    const FirModel delay({0.0, 1.0}, T);
    EXPECT_NEAR(std::abs(fir_frequency_response(delay, 0.0) - Complex(1.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(fir_frequency_response(delay, pi / T) - Complex(-1.0)), 0.0, 1e-12);
}

TEST(FirFrf, TwoTapAverageAtQuarterRate)
{
    const double T = 0.2;
    const Complex g = fir_frequency_response(FirModel({0.5, 0.5}, T), pi / (2.0 * T));
    EXPECT_NEAR(g.real(), 0.5, 1e-15);
    EXPECT_NEAR(g.imag(), -0.5, 1e-15);
}

TEST(FirFrf, PeriodicInSamplingFrequencyAndMatchesDirectSum)
{
    std::mt19937_64 rng(3);
    const double T = 0.1;
    for (int trial = 0; trial < 20; ++trial) {
        const auto theta = oracle::gaussian_vector(rng, 1 + static_cast<std::size_t>(trial) * 7);
        const FirModel m(theta, T);
        for (double w : {0.0, 3.3, 17.0, 31.4, 50.0}) {
            const Complex a = fir_frequency_response(m, w);
            const Complex b = fir_frequency_response(m, w + 2.0 * pi / T);
            EXPECT_NEAR(std::abs(a - b), 0.0, 1e-12 * (1.0 + std::abs(a)));
            EXPECT_NEAR(std::abs(a - oracle::direct_fir_frf(theta, w, T)), 0.0, 1e-12 * (1.0 + std::abs(a)));
        }
    }
}

TEST(Dft, ImpulseAndConstant)
{
    const auto X = dft(std::vector<double>{1, 0, 0, 0});
    for (const auto& v : X) EXPECT_NEAR(std::abs(v - Complex(1.0)), 0.0, 1e-15);
    const auto Y = dft(std::vector<double>{1, 1, 1, 1});
    EXPECT_NEAR(std::abs(Y[0] - Complex(4.0)), 0.0, 1e-14);
    for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(std::abs(Y[k]), 0.0, 1e-14);
}

TEST(Dft, MatchesNaiveSummation)
{
    std::mt19937_64 rng(17);
    for (std::size_t n : {1u, 2u, 3u, 7u, 64u, 100u, 127u, 256u}) {
        const auto x = oracle::gaussian_vector(rng, n);
        const auto X = dft(x);
        const auto R = oracle::naive_dft(x);
        ASSERT_EQ(X.size(), n);
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(std::abs(X[k] - R[k]), 0.0, 1e-10) << "N=" << n << " k=" << k;
    }
}

TEST(Snr, VarianceRatio)
{
    std::vector<double> y(100), e(100);
    for (std::size_t t = 0; t < 100; ++t) {
        y[t] = (t % 2 ? 1.0 : -1.0) * std::sqrt(40.0);
        e[t] = (t % 2 ? -1.0 : 1.0);
    }
    EXPECT_NEAR(snr_variance_ratio(FastSignal(y, 1.0), FastSignal(e, 1.0)), 40.0, 1e-12);
    EXPECT_NEAR(snr_variance_ratio(FastSignal(y, 1.0), FastSignal(y, 1.0)), 1.0, 1e-15);
    EXPECT_THROW(snr_variance_ratio(FastSignal(y, 1.0), FastSignal(std::vector<double>(100, 2.0), 1.0)),
                 UndefinedRatio);
    EXPECT_THROW(snr_variance_ratio(FastSignal({1.0}, 1.0), FastSignal({1.0}, 1.0)), InvalidArgument);
}

TEST(Snr, ScaledNoiseHitsPrescribedRatio)
{
    const auto y = random_multisine(600, 0.1, full_band(600), 3.0, 1);
    for (double target : {40.0, 47.5, 60.0}) {
        const auto e = scale_noise_to_snr(y, random_noise(600, 0.1, 1.0, 77), target);
        EXPECT_NEAR(snr_variance_ratio(y, e) / target, 1.0, 0.05);
    }
}

TEST(Convolution, ImpulseInputReproducesTheta)
{
    std::mt19937_64 rng(8);
    const auto theta = oracle::gaussian_vector(rng, 12);
    std::vector<double> u(30, 0.0);
    u[0] = 1.0;
    const auto y = predict_fast_output(FirModel(theta, 0.1), FastSignal(u, 0.1));
    for (std::size_t t = 0; t < 30; ++t) EXPECT_EQ(y[t], t < 12 ? theta[t] : 0.0);
}

TEST(Convolution, MatchesNaiveDoubleLoop)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto theta = oracle::gaussian_vector(rng, 1 + static_cast<std::size_t>(trial) * 3);
        const auto u = oracle::gaussian_vector(rng, 50);
        const auto y = predict_fast_output(FirModel(theta, 1.0), FastSignal(u, 1.0));
        const auto r = oracle::naive_convolution(theta, u);
        for (std::size_t t = 0; t < u.size(); ++t) EXPECT_NEAR(y[t], r[t], 1e-12);
    }
    const auto u = oracle::gaussian_vector(rng, 40);
    EXPECT_EQ(predict_fast_output(FirModel({1.0}, 1.0), FastSignal(u, 1.0)).samples(), u);
}

TEST(ZeroOrderHold, RepeatsSlowSamples)
{
    const auto x = zero_order_hold(std::vector<double>{1.0, -2.0}, 3, 0.1);
    EXPECT_EQ(x.samples(), (std::vector<double>{1, 1, 1, -2, -2, -2}));
}
