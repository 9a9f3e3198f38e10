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

#ifndef MRFIR_REGRESSOR_HPP
#define MRFIR_REGRESSOR_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mrfir/error.hpp"
#include "mrfir/signals.hpp"

namespace mrfir {

/// M x P map from fast-rate FIR coefficients to the decimated model output,
/// entry(m, i) = u(mF - i) with u(t) = 0 for t < 0.
class RegressorMatrix {
public:
    RegressorMatrix(Eigen::MatrixXd entries, int factor) : entries_(std::move(entries)), factor_(factor)
    {
        detail::require(entries_.rows() >= 1 && entries_.cols() >= 1, "RegressorMatrix: empty matrix");
        detail::require(factor_ >= 1, "RegressorMatrix: factor must be >= 1");
    }

    const Eigen::MatrixXd& matrix() const noexcept { return entries_; }
    Eigen::Index rows() const noexcept { return entries_.rows(); }
    Eigen::Index order() const noexcept { return entries_.cols(); }
    int factor() const noexcept { return factor_; }
    double operator()(Eigen::Index m, Eigen::Index i) const { return entries_(m, i); }

private:
    Eigen::MatrixXd entries_;
    int factor_;
};

/// Largest output length whose regressor rows only reference recorded input.
inline std::size_t max_output_length(std::size_t n, int factor)
{
    return (n - 1) / static_cast<std::size_t>(factor) + 1;
}

inline RegressorMatrix build_regressor(const FastSignal& u, int factor, std::size_t order, std::size_t outputs)
{
    const std::size_t n = u.size();
    detail::require(factor >= 1, "build_regressor: factor must be >= 1");
    detail::require(order >= 1 && order <= n,
                    "build_regressor: order P=" + std::to_string(order) + " outside [1, N=" + std::to_string(n) + "]");
    detail::require(outputs >= 1 && outputs <= max_output_length(n, factor),
                    "build_regressor: output length M=" + std::to_string(outputs) +
                        " inconsistent with N=" + std::to_string(n) + ", F=" + std::to_string(factor));

    const auto F = static_cast<std::size_t>(factor);
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(order));
    for (std::size_t m = 0; m < outputs; ++m) {
        const std::size_t t = m * F;
        const std::size_t imax = std::min(order - 1, t);
        for (std::size_t i = 0; i <= imax; ++i)
            phi(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = u[t - i];
    }
    return {std::move(phi), factor};
}

/// Regressor over the full decimated record, M = floor((N-1)/F) + 1.
inline RegressorMatrix build_regressor(const FastSignal& u, int factor, std::size_t order)
{
    detail::require(factor >= 1, "build_regressor: factor must be >= 1");
    return build_regressor(u, factor, order, max_output_length(u.size(), factor));
}

enum class IdentifiabilityReason { ok, order_exceeds_output_length, rank_deficient_input };

inline const char* to_string(IdentifiabilityReason r)
{
    switch (r) {
    case IdentifiabilityReason::ok: return "ok";
    case IdentifiabilityReason::order_exceeds_output_length: return "order_exceeds_output_length";
    case IdentifiabilityReason::rank_deficient_input: return "rank_deficient_input";
    }
    return "unknown";
}

struct IdentifiabilityReport {
    Eigen::Index rank = 0;
    Eigen::Index null_dimension = 0;
    bool unique = false;
    IdentifiabilityReason reason = IdentifiabilityReason::ok;
    double tolerance = 0.0;
    Eigen::VectorXd singular_values;
    /// Orthonormal basis (P x null_dimension) of the directions theta - theta*
    /// that leave the decimated output unchanged.
    Eigen::MatrixXd null_space;

    std::string describe() const
    {
        return std::string("identifiability: ") + (unique ? "unique" : "non-unique") +
               " (reason=" + to_string(reason) + ", rank=" + std::to_string(rank) +
               ", null_dimension=" + std::to_string(null_dimension) + ")";
    }
};

/// Thrown when the unregularized least-squares FIR estimate is not unique.
class NonUniqueModel : public std::runtime_error {
public:
    explicit NonUniqueModel(IdentifiabilityReport report)
        : std::runtime_error(report.describe()), report_(std::move(report))
    {
    }
    const IdentifiabilityReport& report() const noexcept { return report_; }

private:
    IdentifiabilityReport report_;
};

/// Numerical rank of Phi (SVD, tolerance max(M,P) eps sigma_max) and the
/// resulting uniqueness verdict. Orders P >= M are never unique: an FIR model
/// cannot have more free coefficients than there are slow-rate outputs.
inline IdentifiabilityReport identifiability_check(const RegressorMatrix& phi)
{
    const Eigen::MatrixXd& A = phi.matrix();
    const Eigen::Index M = A.rows();
    const Eigen::Index P = A.cols();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    IdentifiabilityReport rep;
    rep.singular_values = svd.singularValues();
    const double smax = rep.singular_values.size() ? rep.singular_values(0) : 0.0;
    rep.tolerance = static_cast<double>(std::max(M, P)) * std::numeric_limits<double>::epsilon() * smax;
    for (Eigen::Index k = 0; k < rep.singular_values.size(); ++k)
        if (rep.singular_values(k) > rep.tolerance) ++rep.rank;
    rep.null_dimension = P - rep.rank;
    rep.null_space = svd.matrixV().rightCols(rep.null_dimension);

    if (P >= M) {
        rep.reason = IdentifiabilityReason::order_exceeds_output_length;
    } else if (rep.null_dimension > 0) {
        rep.reason = IdentifiabilityReason::rank_deficient_input;
    } else {
        rep.reason = IdentifiabilityReason::ok;
    }
    rep.unique = rep.reason == IdentifiabilityReason::ok;
    return rep;
}

/// argmin_theta ||y - Phi theta||^2 via column-pivoted QR. Throws
/// NonUniqueModel when the minimizer is not unique.
inline FirModel least_squares_fir(const RegressorMatrix& phi, const SlowSignal& y, double fast_period)
{
    detail::require(static_cast<Eigen::Index>(y.size()) == phi.rows(),
                    "least_squares_fir: output length does not match regressor rows");
    auto rep = identifiability_check(phi);
    if (!rep.unique) throw NonUniqueModel(std::move(rep));
    Eigen::VectorXd theta = phi.matrix().colPivHouseholderQr().solve(y.vector());
    if (!theta.allFinite()) throw NumericalError("least_squares_fir: non-finite solution");
    return {theta, fast_period};
}

inline FirModel least_squares_fir(const RegressorMatrix& phi, const SlowSignal& y)
{
    return least_squares_fir(phi, y, y.fast_period());
}

} // namespace mrfir

#endif
