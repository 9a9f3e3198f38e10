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

#ifndef MRFIR_TUNING_HPP
#define MRFIR_TUNING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <utility>
#include <vector>

#include "mrfir/error.hpp"
#include "mrfir/estimator.hpp"
#include "mrfir/kernels.hpp"
#include "mrfir/regressor.hpp"

namespace mrfir {

/// How a hyperparameter is searched: positive scales (lambda, gamma, sigma)
/// are searched in log space, everything else linearly inside its bounds.
enum class SearchScale { linear, log };

struct Hyperparameter {
    std::string name; ///< "gamma" or a kernel parameter path such as "1.omega_n"
    double value;
    double lower;
    double upper;
    SearchScale scale = SearchScale::linear;
};

/// Default search scale for a parameter path.
inline SearchScale default_scale(std::string_view name)
{
    const auto dot = name.rfind('.');
    const auto base = dot == std::string_view::npos ? name : name.substr(dot + 1);
    if (base == "gamma" || base == "lambda" || base == "sigma1" || base == "sigma2") return SearchScale::log;
    return SearchScale::linear;
}

class HyperparameterVector {
public:
    HyperparameterVector() = default;
    explicit HyperparameterVector(std::vector<Hyperparameter> entries) : entries_(std::move(entries))
    {
        for (const auto& h : entries_) {
            if (!(h.lower <= h.upper))
                throw InvalidArgument("hyperparameter '" + h.name + "': lower bound exceeds upper bound");
            if (!(h.value >= h.lower && h.value <= h.upper))
                throw InvalidArgument("hyperparameter '" + h.name + "': value " + std::to_string(h.value) +
                                      " outside [" + std::to_string(h.lower) + ", " + std::to_string(h.upper) + "]");
            if (h.scale == SearchScale::log && !(h.lower > 0.0))
                throw InvalidArgument("hyperparameter '" + h.name + "': log-scale search needs a positive lower bound");
        }
    }

    std::size_t size() const noexcept { return entries_.size(); }
    const Hyperparameter& operator[](std::size_t k) const { return entries_[k]; }
    const std::vector<Hyperparameter>& entries() const noexcept { return entries_; }

    double value(std::string_view name) const
    {
        for (const auto& h : entries_)
            if (h.name == name) return h.value;
        throw InvalidArgument("no hyperparameter named '" + std::string(name) + "'");
    }

    /// Position of every entry in the unit box used by the search.
    std::vector<double> normalized() const
    {
        std::vector<double> s(entries_.size());
        for (std::size_t k = 0; k < entries_.size(); ++k) s[k] = to_unit(entries_[k], entries_[k].value);
        return s;
    }

    HyperparameterVector with_normalized(const std::vector<double>& s) const
    {
        HyperparameterVector out = *this;
        for (std::size_t k = 0; k < entries_.size(); ++k) out.entries_[k].value = from_unit(entries_[k], s[k]);
        return out;
    }

    bool operator==(const HyperparameterVector& o) const
    {
        if (entries_.size() != o.entries_.size()) return false;
        for (std::size_t k = 0; k < entries_.size(); ++k)
            if (entries_[k].name != o.entries_[k].name || entries_[k].value != o.entries_[k].value) return false;
        return true;
    }

private:
    static double to_unit(const Hyperparameter& h, double v)
    {
        if (h.upper == h.lower) return 0.0;
        if (h.scale == SearchScale::log)
            return (std::log(v) - std::log(h.lower)) / (std::log(h.upper) - std::log(h.lower));
        return (v - h.lower) / (h.upper - h.lower);
    }

    static double from_unit(const Hyperparameter& h, double s)
    {
        if (h.upper == h.lower) return h.lower;
        s = std::clamp(s, 0.0, 1.0);
        double v = h.scale == SearchScale::log
                       ? std::exp(std::log(h.lower) + s * (std::log(h.upper) - std::log(h.lower)))
                       : h.lower + s * (h.upper - h.lower);
        return std::clamp(v, h.lower, h.upper);
    }

    std::vector<Hyperparameter> entries_;
};

/// Writes eta into a copy of the template kernel. "gamma" goes to `gamma`.
inline KernelSpec apply_hyperparameters(const KernelSpec& tmpl, const HyperparameterVector& eta, double& gamma)
{
    KernelSpec spec = tmpl;
    for (const auto& h : eta.entries()) {
        if (h.name == "gamma")
            gamma = h.value;
        else
            set_parameter(spec, h.name, h.value);
    }
    return spec;
}

struct TraceEntry {
    std::size_t evaluation;
    std::vector<double> values;
    double objective;
    bool accepted;
};

struct TuningResult {
    HyperparameterVector eta;
    double objective;
    double initial_objective;
    std::size_t evaluations;
    std::vector<TraceEntry> trace;
};

struct SearchOptions {
    std::size_t budget = 200;
    double initial_step = 0.1; ///< fraction of the unit box
    double min_step = 1e-6;
};

/// Bounded compass search on the unit box. Coordinates are swept in a fixed
/// order, a trial point is accepted only if it strictly lowers the
/// objective, and the step halves after a sweep without improvement. The
/// result never has a larger objective than the start and is a pure function
/// of (objective, eta0, options).
inline TuningResult compass_search(const std::function<double(const HyperparameterVector&)>& objective,
                                   const HyperparameterVector& eta0, const SearchOptions& opt)
{
    detail::require(opt.budget >= 1, "optimize_hyperparameters: budget must be >= 1");
    TuningResult res{eta0, objective(eta0), 0.0, 1, {}};
    res.initial_objective = res.objective;
    if (!std::isfinite(res.objective))
        throw InvalidStart("optimize_hyperparameters: objective is not finite at the initial hyperparameters");
    auto values_of = [](const HyperparameterVector& e) {
        std::vector<double> v;
        for (const auto& h : e.entries()) v.push_back(h.value);
        return v;
    };
    res.trace.push_back({0, values_of(eta0), res.objective, true});

    std::vector<double> x = eta0.normalized();
    double step = opt.initial_step;
    while (res.evaluations < opt.budget && step >= opt.min_step && !x.empty()) {
        bool improved = false;
        for (std::size_t d = 0; d < x.size() && res.evaluations < opt.budget; ++d) {
            for (double dir : {+1.0, -1.0}) {
                if (res.evaluations >= opt.budget) break;
                std::vector<double> trial = x;
                trial[d] = std::clamp(x[d] + dir * step, 0.0, 1.0);
                if (trial[d] == x[d]) continue;
                const auto cand = eta0.with_normalized(trial);
                double f = std::numeric_limits<double>::infinity();
                try {
                    f = objective(cand);
                } catch (const NumericalError&) {
                } catch (const InvalidArgument&) {
                }
                const bool accept = std::isfinite(f) && f < res.objective;
                res.trace.push_back({res.evaluations, values_of(cand), f, accept});
                ++res.evaluations;
                if (accept) {
                    x = std::move(trial);
                    res.eta = cand;
                    res.objective = f;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return res;
}

/// Assembles Phi K Phi' + gamma I for kernels that differ only in their
/// hyperparameters, reusing per-term products across calls.
///
/// Scale parameters (lambda, sigma1, sigma2) multiply cached unit-scale
/// products, so changing them costs O(M^2). A prior-knowledge term is the
/// rank-two Gram form sigma1^2 c c' + sigma2^2 s s' with
/// c_i = alpha^{i/2} cos(omega i), s_i = alpha^{i/2} sin(omega i), so its
/// product needs only Phi c and Phi s.
class OutputCovarianceCache {
public:
    explicit OutputCovarianceCache(const Eigen::MatrixXd& phi) : phi_(phi) {}

    Eigen::MatrixXd assemble(const KernelSpec& spec, double gamma)
    {
        const Eigen::Index M = phi_.rows();
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, M);
        if (spec.is_sum()) {
            const auto& terms = std::get<KernelSum>(spec.value()).terms;
            if (terms_.size() != terms.size()) terms_.assign(terms.size(), Term{});
            for (std::size_t k = 0; k < terms.size(); ++k) add_term(terms[k], terms_[k], S);
        } else {
            if (terms_.size() != 1) terms_.assign(1, Term{});
            add_term(spec, terms_[0], S);
        }
        S.diagonal().array() += gamma;
        return S;
    }

private:
    struct Term {
        std::size_t kind = static_cast<std::size_t>(-1);
        std::vector<double> key;
        Eigen::MatrixXd unit; // Phi K(scale = 1) Phi'
        Eigen::VectorXd gc;   // Phi c (prior-knowledge terms)
        Eigen::VectorXd gs;   // Phi s
    };

    bool fresh(Term& t, std::size_t kind, std::vector<double> key)
    {
        if (t.kind == kind && t.key == key) return true;
        t.kind = kind;
        t.key = std::move(key);
        return false;
    }

    void dense_unit(Term& t, const KernelSpec& unit_spec)
    {
        const auto K = build_kernel_matrix(unit_spec, static_cast<std::size_t>(phi_.cols()));
        t.unit = detail::output_covariance(phi_, K.matrix(), 0.0);
    }

    void add_term(const KernelSpec& spec, Term& t, Eigen::MatrixXd& S)
    {
        const std::size_t kind = spec.value().index();
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Tikhonov>) {
                    if (!fresh(t, kind, {})) dense_unit(t, Tikhonov{});
                    S += t.unit;
                } else if constexpr (std::is_same_v<T, DiagonalCorrelated>) {
                    if (!fresh(t, kind, {k.alpha, k.beta})) dense_unit(t, DiagonalCorrelated{1.0, k.alpha, k.beta});
                    S += k.lambda * t.unit;
                } else if constexpr (std::is_same_v<T, StableSpline>) {
                    if (!fresh(t, kind, {k.alpha})) dense_unit(t, StableSpline{1.0, k.alpha});
                    S += k.lambda * t.unit;
                } else if constexpr (std::is_same_v<T, PriorKnowledge>) {
                    if (!fresh(t, kind, {k.alpha_n, k.omega_n})) {
                        const Eigen::Index P = phi_.cols();
                        Eigen::VectorXd c(P), s(P);
                        for (Eigen::Index i = 0; i < P; ++i) {
                            const double a = std::pow(k.alpha_n, 0.5 * static_cast<double>(i));
                            c(i) = a * std::cos(k.omega_n * static_cast<double>(i));
                            s(i) = a * std::sin(k.omega_n * static_cast<double>(i));
                        }
                        t.gc = phi_ * c;
                        t.gs = phi_ * s;
                    }
                    S.noalias() += (k.sigma1 * k.sigma1) * t.gc * t.gc.transpose();
                    S.noalias() += (k.sigma2 * k.sigma2) * t.gs * t.gs.transpose();
                } else {
                    throw InvalidArgument("nested sum kernel");
                }
            },
            spec.value());
    }

    const Eigen::MatrixXd& phi_;
    std::vector<Term> terms_;
};

/// y' S^{-1} y + log det S for an already assembled S.
inline double evidence_objective(const Eigen::MatrixXd& S, const Eigen::VectorXd& y, double gamma)
{
    const auto llt = detail::factor_spd(S, gamma, "marginal_likelihood");
    const Eigen::VectorXd w = llt.matrixL().solve(y);
    return w.squaredNorm() + 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Minimizes the marginal-likelihood objective over eta, starting at eta0.
/// Entries of eta name kernel parameters of `tmpl` or "gamma"; gamma is held
/// at `gamma0` when it is not part of eta.
inline TuningResult optimize_hyperparameters(const RegressorMatrix& phi, const SlowSignal& y, const KernelSpec& tmpl,
                                             double gamma0, const HyperparameterVector& eta0,
                                             const SearchOptions& opt = {})
{
    const Eigen::MatrixXd& A = phi.matrix();
    const Eigen::VectorXd yv = y.vector();
    const auto P = static_cast<std::size_t>(phi.order());
    {
        double g = gamma0;
        validate(apply_hyperparameters(tmpl, eta0, g));
    }
    detail::check_problem(A, yv, static_cast<Eigen::Index>(P), gamma0 > 0.0 ? gamma0 : 1.0, "optimize_hyperparameters");
    OutputCovarianceCache cache(A);
    auto objective = [&](const HyperparameterVector& eta) {
        double gamma = gamma0;
        const KernelSpec spec = apply_hyperparameters(tmpl, eta, gamma);
        validate(spec);
        if (!(gamma > 0.0)) throw InvalidArgument("optimize_hyperparameters: gamma must be > 0");
        return evidence_objective(cache.assemble(spec, gamma), yv, gamma);
    };
    try {
        return compass_search(objective, eta0, opt);
    } catch (const NumericalError& e) {
        throw InvalidStart(std::string("optimize_hyperparameters: ") + e.what());
    }
}

} // namespace mrfir

#endif
