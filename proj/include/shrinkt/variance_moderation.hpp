#ifndef SHRINKT_VARIANCE_MODERATION_HPP
#define SHRINKT_VARIANCE_MODERATION_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "special.hpp"

/**
 * @file variance_moderation.hpp
 *
 * @brief Empirical Bayes shrinkage of estimated variances under a scaled
 * inverse-chi-square prior.
 *
 * Observed variances follow s_hat^2 | s^2 ~ s^2 chi^2_nu / nu, and the true
 * precisions follow s^-2 ~ s0^-2 chi^2_nu0 / nu0. Given (s0^2, nu0) the
 * posterior of s^-2 is again scaled chi-square, with moderated variance
 * (nu0 s0^2 + nu s_hat^2) / (nu0 + nu) and nu0 + nu degrees of freedom.
 */

namespace shrinkt {

/**
 * Observed variances and their per-unit degrees of freedom.
 */
struct VarianceObservations {
    std::vector<double> s2_hat;
    std::vector<double> df;

    size_t size() const { return s2_hat.size(); }

    void validate() const {
        if (s2_hat.size() != df.size()) {
            throw DataError("VarianceObservations: s2_hat and df lengths differ");
        }
        for (size_t j = 0; j < s2_hat.size(); ++j) {
            if (!(s2_hat[j] >= 0) || std::isinf(s2_hat[j])) {
                throw DataError("VarianceObservations: unit " + std::to_string(j) + " has invalid variance");
            }
            if (!(df[j] > 0)) {
                throw DataError("VarianceObservations: unit " + std::to_string(j) + " has non-positive df");
            }
        }
    }
};

/**
 * Estimated prior hyperparameters. `nu0 == kInf` means the prior is a point
 * mass at s0^2.
 */
struct VariancePrior {
    double s0_sq = 1;
    double nu0 = kInf;
};

struct ModeratedStats {
    double s0_sq = 1;
    double nu0 = kInf;
    std::vector<double> s_tilde;
    std::vector<double> nu_tilde;
};

/**
 * ν0 estimates above this are reported as infinite.
 */
inline constexpr double kMaxFiniteNu0 = 1e6;

/**
 * Moment excess at or below this threshold is treated as zero.
 */
inline constexpr double kMomentExcessFloor = 1e-12;

/**
 * Method-of-moments estimate of (s0^2, nu0) from the log variances.
 *
 * With z_j = ln s_hat_j^2,
 *   E[z_j]   = ln s0^2 + psi(nu_j/2) - ln(nu_j/2) - psi(nu0/2) + ln(nu0/2),
 *   Var[z_j] = psi'(nu_j/2) + psi'(nu0/2).
 * The sample variance of the bias-corrected z_j, minus the mean of
 * psi'(nu_j/2), estimates psi'(nu0/2); the mean equation then gives s0^2.
 * Units with s_hat^2 = 0 are skipped.
 */
inline VariancePrior estimate_hyperparams(const VarianceObservations& obs) {
    obs.validate();

    std::vector<double> corrected;
    corrected.reserve(obs.size());
    double sampling_var = 0;
    for (size_t j = 0; j < obs.size(); ++j) {
        if (!(obs.s2_hat[j] > 0)) {
            continue;
        }
        const double nu = obs.df[j];
        double bias = 0;
        if (!std::isinf(nu)) {
            bias = digamma(nu / 2) - std::log(nu / 2);
            sampling_var += trigamma(nu / 2);
        }
        corrected.push_back(std::log(obs.s2_hat[j]) - bias);
    }

    const size_t n = corrected.size();
    if (n == 0) {
        throw EstimationError("estimate_hyperparams: all variances are zero");
    }
    if (n < 2) {
        throw EstimationError("estimate_hyperparams: need at least 2 units with positive variance");
    }

    double mean = 0;
    for (auto z : corrected) {
        mean += z;
    }
    mean /= n;
    double ss = 0;
    for (auto z : corrected) {
        ss += (z - mean) * (z - mean);
    }
    const double excess = ss / (n - 1) - sampling_var / n;

    VariancePrior prior;
    if (excess > kMomentExcessFloor) {
        const double nu0 = 2 * trigamma_inverse(excess);
        if (nu0 <= kMaxFiniteNu0) {
            prior.nu0 = nu0;
            prior.s0_sq = std::exp(mean + digamma(nu0 / 2) - std::log(nu0 / 2));
            return prior;
        }
    }
    prior.nu0 = kInf;
    prior.s0_sq = std::exp(mean);
    return prior;
}

/**
 * Moderated variance for one unit.
 */
inline double moderated_variance(double s2_hat, double nu, double s0_sq, double nu0) {
    if (std::isinf(nu0)) {
        return s0_sq;
    }
    if (std::isinf(nu)) {
        return s2_hat;
    }
    return (nu0 * s0_sq + nu * s2_hat) / (nu0 + nu);
}

inline ModeratedStats moderate(const VarianceObservations& obs, const VariancePrior& prior) {
    obs.validate();
    if (!(prior.s0_sq > 0) || std::isinf(prior.s0_sq)) {
        throw DomainError("moderate: s0_sq must be positive and finite");
    }
    if (!(prior.nu0 > 0)) {
        throw DomainError("moderate: nu0 must be positive");
    }

    ModeratedStats out;
    out.s0_sq = prior.s0_sq;
    out.nu0 = prior.nu0;
    out.s_tilde.resize(obs.size());
    out.nu_tilde.resize(obs.size());
    for (size_t j = 0; j < obs.size(); ++j) {
        out.s_tilde[j] = std::sqrt(moderated_variance(obs.s2_hat[j], obs.df[j], prior.s0_sq, prior.nu0));
        out.nu_tilde[j] = prior.nu0 + obs.df[j];
    }
    return out;
}

inline ModeratedStats moderate(const VarianceObservations& obs) {
    return moderate(obs, estimate_hyperparams(obs));
}

/**
 * Posterior law of the precision s_j^-2 given s_hat_j. An infinite nu0
 * gives a degenerate law at s0^-2, represented with infinite df.
 */
inline ScaledChiSquare posterior_variance_law(double s_hat, double nu, const VariancePrior& prior) {
    const double s2_tilde = moderated_variance(s_hat * s_hat, nu, prior.s0_sq, prior.nu0);
    return ScaledChiSquare{1 / s2_tilde, prior.nu0 + nu};
}

}

#endif
