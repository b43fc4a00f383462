#ifndef SHRINKT_EBTM_HPP
#define SHRINKT_EBTM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "unimodal_prior.hpp"

/**
 * @file ebtm.hpp
 *
 * @brief Empirical Bayes t-means solver.
 *
 * Observations follow beta_hat_j | beta_j ~ t_{df_j}(beta_j, se_j) and the
 * effects follow beta_j / se_j^alpha ~ g, with g a mixture of a point mass
 * and zero-anchored uniforms. The mixture weights are fitted by penalized
 * maximum marginal likelihood using EM.
 */

namespace shrinkt {

/**
 * Per-unit estimate, standard error and degrees of freedom (possibly kInf).
 */
struct SummaryStats {
    std::vector<double> beta_hat;
    std::vector<double> se;
    std::vector<double> df;

    size_t size() const { return beta_hat.size(); }

    /**
     * @param allow_zero_se Accept se == 0 (units that a pipeline will
     * moderate or exclude) rather than requiring se > 0.
     */
    void validate(bool allow_zero_se = false) const {
        if (beta_hat.size() != se.size() || beta_hat.size() != df.size()) {
            throw DataError("SummaryStats: column lengths differ");
        }
        for (size_t j = 0; j < size(); ++j) {
            if (!std::isfinite(beta_hat[j])) {
                throw DataError("SummaryStats: unit " + std::to_string(j) + " has non-finite beta_hat");
            }
            const bool se_ok = allow_zero_se ? se[j] >= 0 : se[j] > 0;
            if (!se_ok || std::isinf(se[j])) {
                throw DataError("SummaryStats: unit " + std::to_string(j) + " has invalid standard error");
            }
            if (!(df[j] > 0)) {
                throw DataError("SummaryStats: unit " + std::to_string(j) + " has non-positive df");
            }
        }
    }
};

/**
 * Log marginal likelihood of one observation under one prior component:
 * the t density itself for the point mass [a, a], otherwise its average
 * over U[a, b].
 */
inline double component_loglik(double beta_hat, double se, double df, const Interval& interval) {
    if (std::isnan(beta_hat) || std::isnan(se) || std::isnan(df) || std::isnan(interval.lower) || std::isnan(interval.upper)) {
        throw DomainError("component_loglik: NaN input");
    }
    if (!(interval.lower <= interval.upper)) {
        throw DomainError("component_loglik: interval lower bound exceeds upper bound");
    }
    if (interval.is_point()) {
        return t_logpdf((beta_hat - interval.lower) / se, df) - std::log(se);
    }
    const double lo = (beta_hat - interval.upper) / se;
    const double hi = (beta_hat - interval.lower) / se;
    return t_log_interval_mass(lo, hi, df) - std::log(interval.width());
}

/**
 * Data on the scale where the prior applies: theta_hat = beta_hat / se^alpha
 * observed with scale se^(1 - alpha). `beta_scale` = se^alpha maps theta
 * back to beta.
 */
struct ScaledData {
    std::vector<double> theta_hat;
    std::vector<double> scale;
    std::vector<double> df;
    std::vector<double> beta_scale;
    double alpha = 0;

    size_t size() const { return theta_hat.size(); }
};

inline ScaledData rescale(const SummaryStats& data, double alpha) {
    data.validate();
    ScaledData out;
    out.alpha = alpha;
    const size_t p = data.size();
    out.theta_hat.resize(p);
    out.scale.resize(p);
    out.beta_scale.resize(p);
    out.df = data.df;
    for (size_t j = 0; j < p; ++j) {
        const double s = data.se[j];
        const double factor = alpha == 0 ? 1.0 : std::pow(s, alpha);
        out.beta_scale[j] = factor;
        out.theta_hat[j] = data.beta_hat[j] / factor;
        out.scale[j] = s / factor;
    }
    return out;
}

/**
 * p x (K+1) matrix of component log-likelihoods on the theta scale, plus
 * the per-unit log Jacobian -alpha ln se_j of the map beta_hat -> theta_hat.
 * Entry (j, k) of the likelihood in beta_hat units is
 * exp(log_theta(j, k) + log_jacobian[j]).
 */
struct LikelihoodMatrix {
    size_t n_units = 0;
    size_t n_components = 0;
    std::vector<double> log_theta;
    std::vector<double> log_jacobian;

    double log_at(size_t j, size_t k) const { return log_theta[j * n_components + k] + log_jacobian[j]; }
    double at(size_t j, size_t k) const { return std::exp(log_at(j, k)); }
};

inline LikelihoodMatrix build_likelihood_matrix(const ScaledData& data, std::span<const Interval> components) {
    LikelihoodMatrix out;
    out.n_units = data.size();
    out.n_components = components.size();
    out.log_theta.resize(out.n_units * out.n_components);
    out.log_jacobian.resize(out.n_units);
    for (size_t j = 0; j < out.n_units; ++j) {
        out.log_jacobian[j] = -std::log(data.beta_scale[j]);
        for (size_t k = 0; k < out.n_components; ++k) {
            out.log_theta[j * out.n_components + k] = component_loglik(data.theta_hat[j], data.scale[j], data.df[j], components[k]);
        }
    }
    return out;
}

inline LikelihoodMatrix build_likelihood_matrix(const SummaryStats& data, std::span<const Interval> components, double alpha) {
    return build_likelihood_matrix(rescale(data, alpha), components);
}

struct FitOptions {
    /**
     * Dirichlet-style weight on the null component; 1 means no penalty.
     */
    double penalty = 10;

    /**
     * Stop once an iteration improves the penalized objective by less than this.
     */
    double tolerance = 1e-8;

    int max_iterations = 5000;
};

struct FitResult {
    UnimodalPrior prior;
    double log_likelihood = 0;
    double penalized_objective = 0;
    std::vector<double> responsibilities;
    double alpha = 0;
    int n_iters = 0;
    bool converged = false;

    /**
     * Penalized objective before the first update and after each iteration.
     */
    std::vector<double> objective_trace;

    double responsibility(size_t j, size_t k) const { return responsibilities[j * prior.size() + k]; }

    /**
     * Smallest change in the penalized objective between consecutive
     * iterations; negative values beyond rounding would indicate a
     * non-monotone step.
     */
    double min_objective_step() const {
        double out = kInf;
        for (size_t i = 1; i < objective_trace.size(); ++i) {
            out = std::min(out, objective_trace[i] - objective_trace[i - 1]);
        }
        return out;
    }

    /**
     * Monotone up to floating-point rounding in the objective sum.
     */
    bool monotone() const {
        const double slack = 1e-10 * (1 + std::abs(penalized_objective));
        return min_objective_step() >= -slack;
    }
};

/**
 * Maximize sum_j log sum_k pi_k L_jk + (penalty - 1) log pi_0 over the
 * simplex by EM, starting from the weights of `init`.
 *
 * Iterations use squared extrapolation (SQUAREM) of the EM map with a
 * fallback to the plain EM double step, which keeps the objective
 * nondecreasing at every iteration.
 */
inline FitResult fit_weights(const LikelihoodMatrix& lik, const UnimodalPrior& init, double alpha = 0, const FitOptions& options = {}) {
    if (!(options.penalty >= 1)) {
        throw DomainError("fit_weights: penalty must be at least 1");
    }
    const size_t p = lik.n_units;
    const size_t K = lik.n_components;
    if (K != init.size()) {
        throw DomainError("fit_weights: likelihood matrix and prior disagree on the number of components");
    }

    // Rows rescaled by their maximum so the EM loop needs no exponentials.
    std::vector<double> relative(p * K);
    std::vector<double> row_offset(p);
    for (size_t j = 0; j < p; ++j) {
        double m = -kInf;
        for (size_t k = 0; k < K; ++k) {
            const double v = lik.log_theta[j * K + k];
            if (std::isnan(v)) {
                throw EstimationError("fit_weights: NaN likelihood for unit " + std::to_string(j));
            }
            m = std::max(m, v);
        }
        if (!std::isfinite(m)) {
            throw EstimationError("fit_weights: unit " + std::to_string(j) + " has zero likelihood under every component");
        }
        row_offset[j] = m + lik.log_jacobian[j];
        for (size_t k = 0; k < K; ++k) {
            relative[j * K + k] = std::exp(lik.log_theta[j * K + k] - m);
        }
    }
    double offset_total = 0;
    for (auto o : row_offset) {
        offset_total += o;
    }

    const double extra = options.penalty - 1;
    const double denom_total = static_cast<double>(p) + extra;
    std::vector<double> counts(K);

    // One EM map: returns the penalized objective at `w` and writes the
    // updated weights into `next`.
    auto em_map = [&](const std::vector<double>& w, std::vector<double>& next) {
        std::fill(counts.begin(), counts.end(), 0.0);
        double loglik = offset_total;
        for (size_t j = 0; j < p; ++j) {
            const double* row = relative.data() + j * K;
            double denom = 0;
            for (size_t k = 0; k < K; ++k) {
                denom += w[k] * row[k];
            }
            loglik += std::log(denom);
            const double inv = 1 / denom;
            for (size_t k = 0; k < K; ++k) {
                counts[k] += w[k] * row[k] * inv;
            }
        }
        next.resize(K);
        double total = 0;
        for (size_t k = 0; k < K; ++k) {
            next[k] = (counts[k] + (k == 0 ? extra : 0.0)) / denom_total;
            total += next[k];
        }
        for (auto& v : next) {
            v /= total;
        }
        const double penalty_term = extra > 0 ? extra * std::log(w[0]) : 0.0;
        return loglik + penalty_term;
    };

    FitResult result{init, 0, 0, {}, alpha, 0, false, {}};
    std::vector<double> weights(init.weights().begin(), init.weights().end());
    std::vector<double> mapped, w1, w2, w1_mapped, w2_mapped, jump, jump_mapped;
    double objective = em_map(weights, mapped);
    result.objective_trace.push_back(objective);

    if (K > 1 && denom_total > 0) {
        // Squared extrapolation over pairs of EM steps. A jump is accepted
        // when its objective is no worse than the current iterate's; otherwise
        // the step length is halved toward -1 (the plain double EM step), so
        // the objective never decreases.
        for (int iter = 1; iter <= options.max_iterations; ++iter) {
            w1 = mapped;
            em_map(w1, w1_mapped);
            w2 = w1_mapped;
            double best = em_map(w2, w2_mapped);
            bool use_jump = false;

            double rr = 0, vv = 0;
            for (size_t k = 0; k < K; ++k) {
                const double r = w1[k] - weights[k];
                const double v = w2[k] - 2 * w1[k] + weights[k];
                rr += r * r;
                vv += v * v;
            }
            double step = vv > 0 ? std::min(-1.0, -std::sqrt(rr / vv)) : -1.0;
            for (int attempt = 0; attempt < 8 && step < -1.0; ++attempt, step = (step - 1) / 2) {
                jump.resize(K);
                double total = 0;
                for (size_t k = 0; k < K; ++k) {
                    const double r = w1[k] - weights[k];
                    const double v = w2[k] - 2 * w1[k] + weights[k];
                    jump[k] = std::max(0.0, weights[k] - 2 * step * r + step * step * v);
                    total += jump[k];
                }
                if (!(total > 0) || (extra > 0 && !(jump[0] > 0))) {
                    continue;
                }
                for (auto& v : jump) {
                    v /= total;
                }
                const double candidate = em_map(jump, jump_mapped);
                if (std::isfinite(candidate) && candidate >= objective) {
                    best = candidate;
                    use_jump = true;
                    break;
                }
            }

            if (use_jump) {
                weights.swap(jump);
                mapped.swap(jump_mapped);
            } else {
                weights.swap(w2);
                mapped.swap(w2_mapped);
            }
            result.objective_trace.push_back(best);
            result.n_iters = iter;
            const double gain = best - objective;
            objective = best;
            if (gain < options.tolerance) {
                result.converged = true;
                break;
            }
        }
    } else {
        result.converged = true;
    }

    result.prior = init.with_weights(weights);
    result.penalized_objective = objective;
    result.log_likelihood = objective - (extra > 0 ? extra * std::log(weights[0]) : 0.0);

    result.responsibilities.resize(p * K);
    for (size_t j = 0; j < p; ++j) {
        const double* row = relative.data() + j * K;
        double denom = 0;
        for (size_t k = 0; k < K; ++k) {
            denom += weights[k] * row[k];
        }
        for (size_t k = 0; k < K; ++k) {
            result.responsibilities[j * K + k] = weights[k] * row[k] / denom;
        }
    }
    return result;
}

/**
 * Grid construction, likelihood and weight fit in one call.
 */
struct EbtmFit {
    ScaledData data;
    FitResult fit;
};

inline EbtmFit fit_ebtm(const SummaryStats& data, double alpha, const GridSpec& grid = {}, const FitOptions& options = {}) {
    auto scaled = rescale(data, alpha);
    auto init = build_grid(scaled.theta_hat, scaled.scale, grid);
    const auto lik = build_likelihood_matrix(scaled, init.components());
    auto fit = fit_weights(lik, init, alpha, options);
    return EbtmFit{std::move(scaled), std::move(fit)};
}

/**
 * Responsibilities under a given prior, with no weight updates.
 */
inline EbtmFit fit_with_prior(const SummaryStats& data, const UnimodalPrior& prior, double alpha = 0) {
    auto scaled = rescale(data, alpha);
    const auto lik = build_likelihood_matrix(scaled, prior.components());
    FitOptions options;
    options.penalty = 1;
    options.max_iterations = 0;
    auto fit = fit_weights(lik, prior, alpha, options);
    return EbtmFit{std::move(scaled), std::move(fit)};
}

}

#endif
