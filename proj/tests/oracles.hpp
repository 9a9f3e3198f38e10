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

// Independent reference implementations used only by the tests. Nothing here
// calls into the code path it checks.

#ifndef MRFIR_TESTS_ORACLES_HPP
#define MRFIR_TESTS_ORACLES_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;

/// O(N^2) DFT by direct summation.
inline std::vector<Complex> naive_dft(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<Complex> X(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) /
                                              static_cast<double>(n));
        X[k] = acc;
    }
    return X;
}

/// Full linear convolution truncated to u's length, double loop.
inline std::vector<double> naive_convolution(const std::vector<double>& theta, const std::vector<double>& u)
{
    std::vector<double> y(u.size(), 0.0);
    for (std::size_t t = 0; t < u.size(); ++t)
        for (std::size_t i = 0; i < theta.size(); ++i)
            if (i <= t) y[t] += theta[i] * u[t - i];
    return y;
}

/// FIR frequency response by direct complex exponentials (no Horner).
inline Complex direct_fir_frf(const std::vector<double>& theta, double omega, double period)
{
    Complex acc = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i)
        acc += theta[i] * std::exp(Complex(0.0, -omega * period * static_cast<double>(i)));
    return acc;
}

/// Negative log evidence with an explicit inverse and determinant.
inline double naive_marginal_likelihood(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                        const Eigen::MatrixXd& K, double gamma)
{
    Eigen::MatrixXd S = phi * K * phi.transpose();
    S += gamma * Eigen::MatrixXd::Identity(S.rows(), S.cols());
    const Eigen::MatrixXd Sinv = S.inverse();
    return y.dot(Sinv * y) + std::log(S.determinant());
}

/// Impulse response by explicit matrix powers: D, CB, CAB, CA^2B, ...
inline std::vector<double> markov_parameters(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                                             const Eigen::RowVectorXd& C, double D, std::size_t n)
{
    std::vector<double> h(n);
    h[0] = D;
    Eigen::MatrixXd Ap = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    for (std::size_t t = 1; t < n; ++t) {
        h[t] = (C * Ap * B)(0);
        Ap = Ap * A;
    }
    return h;
}

inline std::vector<double> gaussian_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0)
{
    std::normal_distribution<double> nd(0.0, sd);
    std::vector<double> v(n);
    for (double& x : v) x = nd(rng);
    return v;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

} // namespace oracle

#endif
