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

#ifndef MRFIR_ESTIMATOR_HPP
#define MRFIR_ESTIMATOR_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mrfir/error.hpp"
#include "mrfir/kernels.hpp"
#include "mrfir/regressor.hpp"
#include "mrfir/signals.hpp"

namespace mrfir {

/// Kernel-regularized FIR problem
///   min ||y - Phi theta||^2 + gamma theta' K^{-1} theta.
struct RegularizedProblem {
    RegressorMatrix phi;
    SlowSignal y;
    KernelSpec kernel;
    double gamma;
};

/// The primal oracle cannot be used because K is not positive definite.
class OracleInapplicable : public NumericalError {
public:
    using NumericalError::NumericalError;
};

namespace detail {

inline void check_problem(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, Eigen::Index kernel_order,
                          double gamma, const char* who)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw InvalidArgument(std::string(who) + ": gamma must be > 0 (got " + std::to_string(gamma) + ")");
    if (phi.rows() != y.size())
        throw InvalidArgument(std::string(who) + ": regressor has " + std::to_string(phi.rows()) +
                              " rows but output has " + std::to_string(y.size()) + " samples");
    if (phi.cols() != kernel_order)
        throw InvalidArgument(std::string(who) + ": kernel order does not match regressor order");
}

/// Phi K Phi' + gamma I, symmetrized.
inline Eigen::MatrixXd output_covariance(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& K, double gamma)
{
    const Eigen::MatrixXd PK = phi * K.selfadjointView<Eigen::Upper>();
    Eigen::MatrixXd S = PK * phi.transpose();
    S = 0.5 * (S + S.transpose()).eval();
    S.diagonal().array() += gamma;
    return S;
}

inline Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& S, double gamma, const char* who)
{
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << who << ": Cholesky factorization of Phi K Phi' + gamma I failed (size " << S.rows()
           << ", gamma=" << gamma << ", max diag=" << S.diagonal().maxCoeff()
           << ", min diag=" << S.diagonal().minCoeff() << ")";
        throw NumericalError(os.str());
    }
    return llt;
}

/// r = y - S z accumulated in extended precision.
inline Eigen::VectorXd extended_residual(const Eigen::MatrixXd& S, const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& y)
{
    Eigen::VectorXd r(y.size());
    for (Eigen::Index m = 0; m < S.rows(); ++m) {
        long double acc = y(m);
        for (Eigen::Index k = 0; k < S.cols(); ++k)
            acc -= static_cast<long double>(S(m, k)) * static_cast<long double>(z(k));
        r(m) = static_cast<double>(acc);
    }
    return r;
}

/// Cholesky solve followed by two steps of iterative refinement.
inline Eigen::VectorXd refined_solve(const Eigen::MatrixXd& S, const Eigen::LLT<Eigen::MatrixXd>& llt,
                                     const Eigen::VectorXd& y)
{
    Eigen::VectorXd z = llt.solve(y);
    for (int step = 0; step < 2; ++step) z += llt.solve(extended_residual(S, z, y));
    return z;
}

/// theta = L b with K = L L' and b the least-squares solution of
/// [Phi L; sqrt(gamma) I] b = [y; 0]. Equal to K Phi' z in exact arithmetic,
/// but free of the cancellation in Phi' z when gamma is tiny and P < M.
inline Eigen::VectorXd square_root_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                         const Eigen::MatrixXd& K, double gamma)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    if (es.info() != Eigen::Success) throw NumericalError("regularized_fir: eigen-decomposition of K failed");
    const Eigen::MatrixXd L = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const Eigen::Index M = phi.rows(), P = phi.cols();
    Eigen::MatrixXd A(M + P, P);
    A.topRows(M) = phi * L;
    A.bottomRows(P) = std::sqrt(gamma) * Eigen::MatrixXd::Identity(P, P);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M + P);
    rhs.head(M) = y;
    return L * A.householderQr().solve(rhs);
}

} // namespace detail

/// Dual-variable solution z of (Phi K Phi' + gamma I) z = y together with
/// the estimate theta = K Phi' z.
struct DualSolution {
    Eigen::VectorXd theta;
    Eigen::VectorXd z;
    Eigen::MatrixXd system; ///< Phi K Phi' + gamma I
};

/// theta = K Phi' (Phi K Phi' + gamma I)^{-1} y. Any gamma > 0 and PSD K give
/// a positive definite M x M system, so the estimate exists for every order
/// and every input, including P >= M and zero-order-hold excitation.
/// The dual system is always solved; for P < M the estimate itself comes from
/// the equivalent square-root form, which stays accurate as gamma -> 0.
inline DualSolution regularized_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& K, double gamma)
{
    detail::check_problem(phi, y, K.rows(), gamma, "regularized_fir");
    DualSolution sol;
    sol.system = detail::output_covariance(phi, K, gamma);
    const auto llt = detail::factor_spd(sol.system, gamma, "regularized_fir");
    sol.z = detail::refined_solve(sol.system, llt, y);
    sol.theta = phi.cols() < phi.rows() ? detail::square_root_solve(phi, y, K, gamma)
                                        : Eigen::VectorXd(K * (phi.transpose() * sol.z));
    if (!sol.theta.allFinite()) throw NumericalError("regularized_fir: non-finite estimate");
    return sol;
}

inline FirModel regularized_fir(const RegularizedProblem& problem)
{
    const auto K = build_kernel_matrix(problem.kernel, static_cast<std::size_t>(problem.phi.order()));
    auto sol = regularized_solve(problem.phi.matrix(), problem.y.vector(), K.matrix(), problem.gamma);
    return {sol.theta, problem.y.fast_period()};
}

/// Primal-form oracle: solves (Phi' Phi + gamma K^{-1}) theta = Phi' y with
/// K = L L' substituted, theta = L b, (L' Phi' Phi L + gamma I) b = L' Phi' y.
/// Test-side cross-check of regularized_fir; requires K positive definite.
inline Eigen::VectorXd primal_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                                    double gamma)
{
    detail::check_problem(phi, y, K.rows(), gamma, "primal_check");
    Eigen::LLT<Eigen::MatrixXd> kfac(K);
    if (kfac.info() != Eigen::Success || kfac.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
        throw OracleInapplicable("primal_check: kernel matrix is not positive definite");
    const Eigen::MatrixXd L = kfac.matrixL();
    const Eigen::MatrixXd PL = phi * L;
    Eigen::MatrixXd A = PL.transpose() * PL;
    A.diagonal().array() += gamma;
    Eigen::LLT<Eigen::MatrixXd> afac(A);
    if (afac.info() != Eigen::Success) throw NumericalError("primal_check: normal equations not positive definite");
    const Eigen::VectorXd b = afac.solve(PL.transpose() * y);
    return L * b;
}

inline FirModel primal_check(const RegularizedProblem& problem)
{
    const auto K = build_kernel_matrix(problem.kernel, static_cast<std::size_t>(problem.phi.order()));
    return {primal_solve(problem.phi.matrix(), problem.y.vector(), K.matrix(), problem.gamma),
            problem.y.fast_period()};
}

/// Negative log evidence of the slow-rate output (up to constants and a
/// factor 2):  y' S^{-1} y + log det S,  S = Phi K Phi' + gamma I.
/// One Cholesky factorization gives both terms.
inline double marginal_likelihood(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                                  double gamma)
{
    detail::check_problem(phi, y, K.rows(), gamma, "marginal_likelihood");
    const Eigen::MatrixXd S = detail::output_covariance(phi, K, gamma);
    const auto llt = detail::factor_spd(S, gamma, "marginal_likelihood");
    const Eigen::VectorXd w = llt.matrixL().solve(y);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return w.squaredNorm() + logdet;
}

inline double marginal_likelihood(const RegressorMatrix& phi, const SlowSignal& y, const KernelSpec& kernel,
                                  double gamma)
{
    const auto K = build_kernel_matrix(kernel, static_cast<std::size_t>(phi.order()));
    return marginal_likelihood(phi.matrix(), y.vector(), K.matrix(), gamma);
}

/// Fast-rate model output: causal convolution of u with theta, zero initial
/// conditions, same length as u.
inline FastSignal predict_fast_output(const FirModel& model, const FastSignal& u)
{
    return {causal_filter(model.theta(), u.samples()), u.period()};
}

/// 100 (1 - ||y - yhat||^2 / ||y - mean(y)||^2).
inline double goodness_of_fit(std::span<const double> y_true, std::span<const double> y_pred)
{
    detail::require(y_true.size() == y_pred.size(), "goodness_of_fit: length mismatch");
    detail::require(y_true.size() >= 2, "goodness_of_fit: at least two samples required");
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(y_true.size());
    double err = 0.0, var = 0.0;
    for (std::size_t t = 0; t < y_true.size(); ++t) {
        err += (y_true[t] - y_pred[t]) * (y_true[t] - y_pred[t]);
        var += (y_true[t] - mean) * (y_true[t] - mean);
    }
    if (!(var > 0.0)) throw UndefinedRatio("goodness_of_fit: reference signal is constant");
    return 100.0 * (1.0 - err / var);
}

inline double goodness_of_fit(const FastSignal& y_true, const FastSignal& y_pred)
{
    return goodness_of_fit(y_true.samples(), y_pred.samples());
}

inline double rmse(std::span<const double> y_true, std::span<const double> y_pred)
{
    detail::require(y_true.size() == y_pred.size() && !y_true.empty(), "rmse: length mismatch");
    double err = 0.0;
    for (std::size_t t = 0; t < y_true.size(); ++t) err += (y_true[t] - y_pred[t]) * (y_true[t] - y_pred[t]);
    return std::sqrt(err / static_cast<double>(y_true.size()));
}

struct FitReport {
    FirModel model;
    double gof;
    double rmse;
    /// NaN for estimators without an evidence (least squares).
    double marginal_likelihood = std::numeric_limits<double>::quiet_NaN();
};

} // namespace mrfir

#endif
