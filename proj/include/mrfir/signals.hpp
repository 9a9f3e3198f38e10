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

#ifndef MRFIR_SIGNALS_HPP
#define MRFIR_SIGNALS_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "mrfir/error.hpp"

namespace mrfir {

using Complex = std::complex<double>;

/// Seedable generator used by every stochastic routine. Boost's engine and
/// distributions produce the same stream on every platform.
using Rng = boost::random::mt19937_64;

/// Stream seed for sub-experiment `index` of a study seeded with `base`
/// (splitmix64 finalizer over the pair).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace detail {

inline void require_finite(std::span<const double> x, const char* what)
{
    for (double v : x)
        if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite sample");
}

inline Eigen::Map<const Eigen::VectorXd> as_eigen(const std::vector<double>& v)
{
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

} // namespace detail

/// Uniformly sampled signal at the fast (actuator) rate.
class FastSignal {
public:
    FastSignal(std::vector<double> samples, double period)
        : samples_(std::move(samples)), period_(period)
    {
        detail::require(!samples_.empty(), "FastSignal: at least one sample required");
        detail::require(period_ > 0.0 && std::isfinite(period_), "FastSignal: period must be positive");
        detail::require_finite(samples_, "FastSignal");
    }

    std::size_t size() const noexcept { return samples_.size(); }
    double period() const noexcept { return period_; }
    double operator[](std::size_t t) const noexcept { return samples_[t]; }
    const std::vector<double>& samples() const noexcept { return samples_; }
    Eigen::Map<const Eigen::VectorXd> vector() const { return detail::as_eigen(samples_); }

    bool operator==(const FastSignal&) const = default;

private:
    std::vector<double> samples_;
    double period_;
};

/// Signal sampled every `factor` fast periods. `fast_period` is T_h, so the
/// slow period is factor * T_h.
class SlowSignal {
public:
    SlowSignal(std::vector<double> samples, double fast_period, int factor)
        : samples_(std::move(samples)), fast_period_(fast_period), factor_(factor)
    {
        detail::require(!samples_.empty(), "SlowSignal: at least one sample required");
        detail::require(factor_ >= 1, "SlowSignal: factor must be >= 1");
        detail::require(fast_period_ > 0.0 && std::isfinite(fast_period_),
                        "SlowSignal: period must be positive");
        detail::require_finite(samples_, "SlowSignal");
    }

    std::size_t size() const noexcept { return samples_.size(); }
    int factor() const noexcept { return factor_; }
    double fast_period() const noexcept { return fast_period_; }
    double period() const noexcept { return fast_period_ * factor_; }
    double operator[](std::size_t m) const noexcept { return samples_[m]; }
    const std::vector<double>& samples() const noexcept { return samples_; }
    Eigen::Map<const Eigen::VectorXd> vector() const { return detail::as_eigen(samples_); }

    bool operator==(const SlowSignal&) const = default;

private:
    std::vector<double> samples_;
    double fast_period_;
    int factor_;
};

/// Fast-rate FIR model: y(t) = sum_i theta[i] u(t - i).
class FirModel {
public:
    FirModel(std::vector<double> theta, double period) : theta_(std::move(theta)), period_(period)
    {
        detail::require(!theta_.empty(), "FirModel: order must be >= 1");
        detail::require(period_ > 0.0 && std::isfinite(period_), "FirModel: period must be positive");
        detail::require_finite(theta_, "FirModel");
    }

    template <typename Derived>
    FirModel(const Eigen::MatrixBase<Derived>& theta, double period)
        : FirModel(to_std(theta), period)
    {
    }

    std::size_t order() const noexcept { return theta_.size(); }
    double period() const noexcept { return period_; }
    double operator[](std::size_t i) const noexcept { return theta_[i]; }
    const std::vector<double>& theta() const noexcept { return theta_; }
    Eigen::Map<const Eigen::VectorXd> vector() const { return detail::as_eigen(theta_); }

    bool operator==(const FirModel&) const = default;

private:
    template <typename Derived>
    static std::vector<double> to_std(const Eigen::MatrixBase<Derived>& v)
    {
        std::vector<double> out(static_cast<std::size_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
        return out;
    }

    std::vector<double> theta_;
    double period_;
};

struct FrfSample {
    double omega; ///< rad/s
    Complex value;
};

/// Inclusive range of DFT bin indices [first, last].
struct FrequencyBand {
    std::size_t first;
    std::size_t last;
};

/// Keeps samples 0, F, 2F, ...; the output has floor((N-1)/F)+1 samples.
inline std::vector<double> decimate(std::span<const double> x, int factor)
{
    detail::require(factor >= 1, "downsample: factor must be >= 1");
    detail::require(!x.empty(), "downsample: empty signal");
    const auto F = static_cast<std::size_t>(factor);
    std::vector<double> out;
    out.reserve((x.size() - 1) / F + 1);
    for (std::size_t t = 0; t < x.size(); t += F) out.push_back(x[t]);
    return out;
}

inline SlowSignal downsample(const FastSignal& x, int factor)
{
    return {decimate(x.samples(), factor), x.period(), factor};
}

/// Further decimation of an already slow signal; factors multiply.
inline SlowSignal downsample(const SlowSignal& x, int factor)
{
    return {decimate(x.samples(), factor), x.fast_period(), x.factor() * factor};
}

/// Zero-order-hold upsampling: each slow sample is repeated `factor` times.
inline FastSignal zero_order_hold(std::span<const double> slow, int factor, double fast_period)
{
    detail::require(factor >= 1, "zero_order_hold: factor must be >= 1");
    detail::require(!slow.empty(), "zero_order_hold: empty signal");
    std::vector<double> x;
    x.reserve(slow.size() * static_cast<std::size_t>(factor));
    for (double v : slow) x.insert(x.end(), static_cast<std::size_t>(factor), v);
    return {std::move(x), fast_period};
}

/// Full excitable band for an N-sample record: bins 1 .. floor((N-1)/2),
/// i.e. everything except DC and the Nyquist bin.
inline FrequencyBand full_band(std::size_t n)
{
    return {1, (n - 1) / 2};
}

/// Random-phase multisine with a flat amplitude spectrum over `band`,
/// scaled to the requested sample RMS.
///
/// Each excited bin k contributes cos(2 pi k t / N + phi_k) with phi_k
/// uniform on [0, 2 pi). A requested Nyquist bin (k = N/2, N even) can only
/// carry a real phase, so it contributes +-0.5 (-1)^t, which gives it the same
/// DFT magnitude N/2 as every other bin.
inline FastSignal random_multisine(std::size_t n, double period, FrequencyBand band, double rms,
                                   std::uint64_t seed)
{
    detail::require(n >= 1, "random_multisine: N must be >= 1");
    detail::require(rms > 0.0 && std::isfinite(rms), "random_multisine: rms must be positive");
    if (band.first < 1 || band.last > n / 2 || band.first > band.last)
        throw InvalidArgument("random_multisine: empty or out-of-range band [" +
                              std::to_string(band.first) + ", " + std::to_string(band.last) + "]");

    Rng rng(seed);
    boost::random::uniform_01<double> unit;
    std::vector<double> x(n, 0.0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t k = band.first; k <= band.last; ++k) {
        const double phase = two_pi * unit(rng);
        if (2 * k == n) {
            const double sign = std::cos(phase) >= 0.0 ? 0.5 : -0.5;
            for (std::size_t t = 0; t < n; ++t) x[t] += (t % 2 == 0) ? sign : -sign;
            continue;
        }
        // reduce k*t mod N before scaling to keep the angle exact
        for (std::size_t t = 0; t < n; ++t)
            x[t] += std::cos(two_pi * static_cast<double>((k * t) % n) / static_cast<double>(n) + phase);
    }

    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double scale = rms / std::sqrt(ss / static_cast<double>(n));
    for (double& v : x) v *= scale;
    return {std::move(x), period};
}

/// I.i.d. zero-mean Gaussian samples with standard deviation `rms`.
inline FastSignal random_noise(std::size_t n, double period, double rms, std::uint64_t seed)
{
    detail::require(n >= 1, "random_noise: N must be >= 1");
    detail::require(rms > 0.0 && std::isfinite(rms), "random_noise: rms must be positive");
    Rng rng(seed);
    boost::random::normal_distribution<double> normal(0.0, rms);
    std::vector<double> x(n);
    for (double& v : x) v = normal(rng);
    return {std::move(x), period};
}

/// G(e^{j w T}) = sum_i theta_i e^{-j w T i}. Valid at any w, including above
/// the slow-rate Nyquist frequency.
inline Complex fir_frequency_response(const FirModel& model, double omega)
{
    // Horner in z^{-1}
    const Complex zinv = std::polar(1.0, -omega * model.period());
    Complex acc = 0.0;
    const auto& th = model.theta();
    for (std::size_t i = th.size(); i-- > 0;) acc = acc * zinv + th[i];
    return acc;
}

inline std::vector<FrfSample> fir_frf(const FirModel& model, std::span<const double> omegas)
{
    std::vector<FrfSample> out;
    out.reserve(omegas.size());
    for (double w : omegas) out.push_back({w, fir_frequency_response(model, w)});
    return out;
}

/// Unnormalized DFT, X(k) = sum_t x(t) e^{-j 2 pi k t / N}.
inline std::vector<Complex> dft(std::span<const double> x)
{
    detail::require(!x.empty(), "dft: empty signal");
    if (x.size() == 1) return {Complex(x[0])}; // the kissfft backend faults on length one
    std::vector<double> in(x.begin(), x.end());
    std::vector<Complex> out;
    Eigen::FFT<double> fft;
    fft.fwd(out, in);
    return out;
}

inline std::vector<Complex> dft(const FastSignal& x) { return dft(x.samples()); }

inline double population_variance(std::span<const double> x)
{
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size());
}

/// var(y) / var(e), population variances. This is the linear (not dB)
/// signal-to-noise ratio.
inline double snr_variance_ratio(const FastSignal& y, const FastSignal& e)
{
    detail::require(y.size() == e.size(), "snr_variance_ratio: length mismatch");
    detail::require(y.size() >= 2, "snr_variance_ratio: at least two samples required");
    const double ve = population_variance(e.samples());
    if (!(ve > 0.0)) throw UndefinedRatio("snr_variance_ratio: noise variance is zero");
    return population_variance(y.samples()) / ve;
}

/// Causal convolution with zero initial conditions, truncated to the input
/// length.
inline std::vector<double> causal_filter(std::span<const double> theta, std::span<const double> u)
{
    std::vector<double> y(u.size(), 0.0);
    for (std::size_t t = 0; t < u.size(); ++t) {
        const std::size_t imax = std::min(theta.size(), t + 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < imax; ++i) acc += theta[i] * u[t - i];
        y[t] = acc;
    }
    return y;
}

} // namespace mrfir

#endif
