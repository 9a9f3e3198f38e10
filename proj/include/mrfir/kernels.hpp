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

#ifndef MRFIR_KERNELS_HPP
#define MRFIR_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mrfir/error.hpp"

namespace mrfir {

/// Identity kernel (ridge regression).
struct Tikhonov {
    bool operator==(const Tikhonov&) const = default;
};

/// lambda alpha^{(i+j)/2} beta^{|j-i|}
struct DiagonalCorrelated {
    double lambda = 1.0;
    double alpha = 0.9;
    double beta = 0.9;
    bool operator==(const DiagonalCorrelated&) const = default;
};

/// lambda (alpha^{i+j+max(i,j)}/2 - alpha^{3 max(i,j)}/6)
struct StableSpline {
    double lambda = 1.0;
    double alpha = 0.9;
    bool operator==(const StableSpline&) const = default;
};

/// Resonant pole prior:
/// alpha_n^{(i+j)/2} (g1 cos(omega_n (i-j)) + g2 cos(omega_n (i+j))),
/// g1 = (sigma1^2 + sigma2^2)/2, g2 = (sigma1^2 - sigma2^2)/2.
/// omega_n is in rad/sample at the fast rate.
struct PriorKnowledge {
    double alpha_n = 0.9;
    double omega_n = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;

    double gamma1() const noexcept { return 0.5 * (sigma1 * sigma1 + sigma2 * sigma2); }
    double gamma2() const noexcept { return 0.5 * (sigma1 * sigma1 - sigma2 * sigma2); }
    bool operator==(const PriorKnowledge&) const = default;
};

class KernelSpec;

struct KernelSum {
    std::vector<KernelSpec> terms;
    bool operator==(const KernelSum&) const;
};

class KernelSpec {
public:
    using Variant = std::variant<Tikhonov, DiagonalCorrelated, StableSpline, PriorKnowledge, KernelSum>;

    KernelSpec() : value_(Tikhonov{}) {}
    KernelSpec(Tikhonov k) : value_(k) {}
    KernelSpec(DiagonalCorrelated k) : value_(k) {}
    KernelSpec(StableSpline k) : value_(k) {}
    KernelSpec(PriorKnowledge k) : value_(k) {}
    /// Nested sums are flattened so that a sum never contains another sum.
    KernelSpec(KernelSum k) : value_(flatten(std::move(k))) {}

    const Variant& value() const noexcept { return value_; }
    Variant& value() noexcept { return value_; }

    bool is_sum() const noexcept { return std::holds_alternative<KernelSum>(value_); }
    std::size_t term_count() const noexcept
    {
        return is_sum() ? std::get<KernelSum>(value_).terms.size() : 1;
    }

    bool operator==(const KernelSpec&) const = default;

private:
    static KernelSum flatten(KernelSum k)
    {
        KernelSum flat;
        for (auto& t : k.terms) {
            if (t.is_sum())
                for (auto& inner : std::get<KernelSum>(t.value_).terms) flat.terms.push_back(std::move(inner));
            else
                flat.terms.push_back(std::move(t));
        }
        return flat;
    }

    Variant value_;
};

inline bool KernelSum::operator==(const KernelSum& other) const { return terms == other.terms; }

inline KernelSpec kernel_sum(std::vector<KernelSpec> terms) { return KernelSpec(KernelSum{std::move(terms)}); }

inline const char* kernel_type_name(const KernelSpec& spec)
{
    constexpr const char* names[] = {"tikhonov", "dc", "ss", "pk", "sum"};
    return names[spec.value().index()];
}

namespace detail {

inline void check_param(bool ok, const char* kernel, const char* name, double value, const char* range)
{
    if (!ok)
        throw InvalidArgument(std::string(kernel) + " kernel: " + name + "=" + std::to_string(value) +
                              " outside " + range);
}

} // namespace detail

/// Throws InvalidArgument naming the first out-of-range hyperparameter.
inline void validate(const KernelSpec& spec)
{
    std::visit(
        [](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, DiagonalCorrelated>) {
                detail::check_param(k.lambda > 0.0 && std::isfinite(k.lambda), "dc", "lambda", k.lambda, "(0, inf)");
                detail::check_param(k.alpha >= 0.0 && k.alpha < 1.0, "dc", "alpha", k.alpha, "[0, 1)");
                detail::check_param(std::abs(k.beta) < 1.0, "dc", "beta", k.beta, "(-1, 1)");
            } else if constexpr (std::is_same_v<T, StableSpline>) {
                detail::check_param(k.lambda > 0.0 && std::isfinite(k.lambda), "ss", "lambda", k.lambda, "(0, inf)");
                detail::check_param(k.alpha > 0.0 && k.alpha < 1.0, "ss", "alpha", k.alpha, "(0, 1)");
            } else if constexpr (std::is_same_v<T, PriorKnowledge>) {
                detail::check_param(k.alpha_n > 0.0 && k.alpha_n < 1.0, "pk", "alpha_n", k.alpha_n, "(0, 1)");
                detail::check_param(k.omega_n >= 0.0 && k.omega_n < 2.0 * std::numbers::pi, "pk", "omega_n",
                                    k.omega_n, "[0, 2pi)");
                detail::check_param(k.sigma1 >= 0.0 && std::isfinite(k.sigma1), "pk", "sigma1", k.sigma1, "[0, inf)");
                detail::check_param(k.sigma2 >= 0.0 && std::isfinite(k.sigma2), "pk", "sigma2", k.sigma2, "[0, inf)");
            } else if constexpr (std::is_same_v<T, KernelSum>) {
                if (k.terms.empty()) throw InvalidArgument("sum kernel: at least one term required");
                for (const auto& t : k.terms) validate(t);
            }
        },
        spec.value());
}

/// k(i, j) evaluated straight from the closed-form expressions.
inline double kernel_entry(const KernelSpec& spec, std::size_t i, std::size_t j)
{
    validate(spec);
    const double di = static_cast<double>(i);
    const double dj = static_cast<double>(j);
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Tikhonov>) {
                return i == j ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, DiagonalCorrelated>) {
                return k.lambda * std::pow(k.alpha, 0.5 * (di + dj)) * std::pow(k.beta, std::abs(dj - di));
            } else if constexpr (std::is_same_v<T, StableSpline>) {
                const double mx = std::max(di, dj);
                return k.lambda * (std::pow(k.alpha, di + dj + mx) / 2.0 - std::pow(k.alpha, 3.0 * mx) / 6.0);
            } else if constexpr (std::is_same_v<T, PriorKnowledge>) {
                return std::pow(k.alpha_n, 0.5 * (di + dj)) *
                       (k.gamma1() * std::cos(k.omega_n * (di - dj)) + k.gamma2() * std::cos(k.omega_n * (di + dj)));
            } else {
                double s = 0.0;
                for (const auto& t : k.terms) s += kernel_entry(t, i, j);
                return s;
            }
        },
        spec.value());
}

/// Symmetric P x P kernel (prior covariance) matrix.
class KernelMatrix {
public:
    explicit KernelMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries))
    {
        detail::require(entries_.rows() == entries_.cols() && entries_.rows() >= 1,
                        "KernelMatrix: square non-empty matrix required");
    }
    const Eigen::MatrixXd& matrix() const noexcept { return entries_; }
    Eigen::Index order() const noexcept { return entries_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

private:
    Eigen::MatrixXd entries_;
};

namespace detail {

inline Eigen::VectorXd powers(double base, Eigen::Index count)
{
    Eigen::VectorXd p(count);
    double acc = 1.0;
    for (Eigen::Index k = 0; k < count; ++k) {
        p(k) = acc;
        acc *= base;
    }
    return p;
}

inline Eigen::VectorXd half_powers(double base, Eigen::Index count)
{
    Eigen::VectorXd p(count);
    for (Eigen::Index k = 0; k < count; ++k) p(k) = std::pow(base, 0.5 * static_cast<double>(k));
    return p;
}

// Adds the upper triangle (j >= i) of one term into K.
inline void accumulate_upper(const KernelSpec& spec, Eigen::MatrixXd& K)
{
    const Eigen::Index P = K.rows();
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Tikhonov>) {
                K.diagonal().array() += 1.0;
            } else if constexpr (std::is_same_v<T, DiagonalCorrelated>) {
                const Eigen::VectorXd a = half_powers(k.alpha, P);
                const Eigen::VectorXd b = powers(k.beta, P);
                for (Eigen::Index j = 0; j < P; ++j)
                    for (Eigen::Index i = 0; i <= j; ++i) K(i, j) += k.lambda * a(i) * a(j) * b(j - i);
            } else if constexpr (std::is_same_v<T, StableSpline>) {
                const Eigen::VectorXd p = powers(k.alpha, 3 * P);
                for (Eigen::Index j = 0; j < P; ++j)
                    for (Eigen::Index i = 0; i <= j; ++i)
                        K(i, j) += k.lambda * (p(i + 2 * j) / 2.0 - p(3 * j) / 6.0);
            } else if constexpr (std::is_same_v<T, PriorKnowledge>) {
                const Eigen::VectorXd a = half_powers(k.alpha_n, P);
                Eigen::VectorXd c(2 * P);
                for (Eigen::Index m = 0; m < 2 * P; ++m) c(m) = std::cos(k.omega_n * static_cast<double>(m));
                const double g1 = k.gamma1();
                const double g2 = k.gamma2();
                for (Eigen::Index j = 0; j < P; ++j)
                    for (Eigen::Index i = 0; i <= j; ++i) K(i, j) += a(i) * a(j) * (g1 * c(j - i) + g2 * c(i + j));
            } else {
                for (const auto& t : k.terms) accumulate_upper(t, K);
            }
        },
        spec.value());
}

} // namespace detail

/// K(i, j) = k(i, j) for i, j < P. Each unordered pair is computed once and
/// mirrored, so the result is bitwise symmetric.
inline KernelMatrix build_kernel_matrix(const KernelSpec& spec, std::size_t order)
{
    detail::require(order >= 1, "build_kernel_matrix: order must be >= 1");
    validate(spec);
    const auto P = static_cast<Eigen::Index>(order);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(P, P);
    detail::accumulate_upper(spec, K);
    K.triangularView<Eigen::StrictlyLower>() = K.transpose();
    return KernelMatrix(std::move(K));
}

struct PsdReport {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    bool psd = false;
};

/// Smallest/largest eigenvalue and the verdict
/// min >= -1e-9 * max(|max eigenvalue|, tiny).
inline PsdReport validate_psd(const Eigen::MatrixXd& K)
{
    detail::require(K.rows() == K.cols() && K.rows() >= 1, "validate_psd: square matrix required");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("validate_psd: eigenvalue solver failed");
    PsdReport r;
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.max_eigenvalue = es.eigenvalues().maxCoeff();
    const double scale = std::max(std::abs(r.max_eigenvalue), std::numeric_limits<double>::min());
    r.psd = r.min_eigenvalue >= -1e-9 * scale;
    return r;
}

inline PsdReport validate_psd(const KernelMatrix& K) { return validate_psd(K.matrix()); }

// Named access to individual hyperparameters, used by the tuner and the
// config layer. A name is "<param>" for a single kernel or "<term>.<param>"
// for a term of a sum, e.g. "1.omega_n".

namespace detail {

inline double* find_in_term(KernelSpec& term, std::string_view name)
{
    return std::visit(
        [&](auto& k) -> double* {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, DiagonalCorrelated>) {
                if (name == "lambda") return &k.lambda;
                if (name == "alpha") return &k.alpha;
                if (name == "beta") return &k.beta;
            } else if constexpr (std::is_same_v<T, StableSpline>) {
                if (name == "lambda") return &k.lambda;
                if (name == "alpha") return &k.alpha;
            } else if constexpr (std::is_same_v<T, PriorKnowledge>) {
                if (name == "alpha_n") return &k.alpha_n;
                if (name == "omega_n") return &k.omega_n;
                if (name == "sigma1") return &k.sigma1;
                if (name == "sigma2") return &k.sigma2;
            }
            return nullptr;
        },
        term.value());
}

inline double* find_parameter(KernelSpec& spec, std::string_view path)
{
    std::size_t term = 0;
    std::string_view name = path;
    if (auto dot = path.find('.'); dot != std::string_view::npos) {
        const auto idx = path.substr(0, dot);
        if (idx.empty() || idx.find_first_not_of("0123456789") != std::string_view::npos) return nullptr;
        term = std::stoul(std::string(idx));
        name = path.substr(dot + 1);
    }
    if (spec.is_sum()) {
        auto& terms = std::get<KernelSum>(spec.value()).terms;
        if (term >= terms.size()) return nullptr;
        return find_in_term(terms[term], name);
    }
    if (term != 0) return nullptr;
    return find_in_term(spec, name);
}

} // namespace detail

inline bool has_parameter(const KernelSpec& spec, std::string_view path)
{
    KernelSpec copy = spec;
    return detail::find_parameter(copy, path) != nullptr;
}

inline double get_parameter(const KernelSpec& spec, std::string_view path)
{
    KernelSpec copy = spec;
    const double* p = detail::find_parameter(copy, path);
    if (!p) throw InvalidArgument("kernel has no hyperparameter '" + std::string(path) + "'");
    return *p;
}

inline void set_parameter(KernelSpec& spec, std::string_view path, double value)
{
    double* p = detail::find_parameter(spec, path);
    if (!p) throw InvalidArgument("kernel has no hyperparameter '" + std::string(path) + "'");
    *p = value;
}

} // namespace mrfir

#endif
