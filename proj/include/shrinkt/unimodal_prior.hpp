#ifndef SHRINKT_UNIMODAL_PRIOR_HPP
#define SHRINKT_UNIMODAL_PRIOR_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

/**
 * @file unimodal_prior.hpp
 *
 * @brief Unimodal effect priors: a point mass at zero plus uniform
 * components whose supports all contain zero.
 */

namespace shrinkt {

struct Interval {
    double lower = 0;
    double upper = 0;

    double width() const { return upper - lower; }
    bool is_point() const { return lower == upper; }
    bool operator==(const Interval&) const = default;
};

/**
 * Mixture pi_0 delta_0 + sum_k pi_k U[a_k, b_k], with a_k <= 0 <= b_k.
 * Component 0 is always the point mass [0, 0].
 */
class UnimodalPrior {
public:
    UnimodalPrior(std::vector<double> weights, std::vector<Interval> components) :
        weights_(std::move(weights)), components_(std::move(components))
    {
        if (weights_.empty() || weights_.size() != components_.size()) {
            throw DomainError("UnimodalPrior: need one weight per component and at least the null component");
        }
        if (!components_[0].is_point() || components_[0].lower != 0) {
            throw DomainError("UnimodalPrior: component 0 must be the point mass at zero");
        }
        double total = 0;
        for (size_t k = 0; k < weights_.size(); ++k) {
            if (!(weights_[k] >= 0)) {
                throw DomainError("UnimodalPrior: negative weight for component " + std::to_string(k));
            }
            const auto& c = components_[k];
            if (!(c.lower <= 0 && c.upper >= 0)) {
                throw DomainError("UnimodalPrior: component " + std::to_string(k) + " does not contain zero");
            }
            if (k > 0 && c.is_point()) {
                throw DomainError("UnimodalPrior: only component 0 may be a point mass");
            }
            total += weights_[k];
        }
        if (std::abs(total - 1) > 1e-12) {
            throw DomainError("UnimodalPrior: weights must sum to 1");
        }
    }

    size_t size() const { return weights_.size(); }
    std::span<const double> weights() const { return weights_; }
    std::span<const Interval> components() const { return components_; }
    double null_weight() const { return weights_[0]; }

    UnimodalPrior with_weights(std::vector<double> weights) const {
        return UnimodalPrior(std::move(weights), components_);
    }

private:
    std::vector<double> weights_;
    std::vector<Interval> components_;
};

/**
 * Geometric grid of component half-widths.
 */
struct GridSpec {
    double multiplier = std::numbers::sqrt2;

    /**
     * Symmetric components U[-c, c]. When false, each scale contributes the
     * two half-uniforms U[-c, 0] and U[0, c].
     */
    bool symmetric = true;

    /**
     * Defaults to a tenth of the smallest standard error.
     */
    std::optional<double> min_scale;

    /**
     * Defaults to twice the largest absolute estimate.
     */
    std::optional<double> max_scale;
};

/**
 * @return c_1 = min_scale, c_{k+1} = multiplier * c_k, stopping at the first
 * c_k that reaches max_scale (up to a relative rounding slack).
 */
inline std::vector<double> scale_grid(double min_scale, double max_scale, double multiplier) {
    if (!(multiplier > 1)) {
        throw DomainError("scale_grid: multiplier must exceed 1");
    }
    if (!(min_scale > 0) || std::isinf(min_scale)) {
        throw DomainError("scale_grid: min_scale must be positive and finite");
    }
    std::vector<double> out;
    size_t count = 1;
    if (max_scale > min_scale) {
        const double steps = std::log(max_scale / min_scale) / std::log(multiplier);
        count += static_cast<size_t>(std::ceil(steps - 1e-9));
    }
    out.reserve(count);
    for (size_t k = 0; k < count; ++k) {
        out.push_back(min_scale * std::pow(multiplier, static_cast<double>(k)));
    }
    return out;
}

/**
 * Build the component grid with uniform initial weights.
 *
 * @param beta_hat Estimates; only finite values contribute to max_scale.
 * @param scales Standard errors; only finite positive values contribute to min_scale.
 */
inline UnimodalPrior build_grid(std::span<const double> beta_hat, std::span<const double> scales, const GridSpec& spec = {}) {
    if (beta_hat.empty() || scales.empty()) {
        throw DomainError("build_grid: empty data");
    }

    double min_scale = kInf;
    for (auto s : scales) {
        if (s > 0 && std::isfinite(s)) {
            min_scale = std::min(min_scale, s / 10);
        }
    }
    double max_abs = 0;
    for (auto b : beta_hat) {
        if (std::isfinite(b)) {
            max_abs = std::max(max_abs, std::abs(b));
        }
    }
    if (spec.min_scale) {
        min_scale = *spec.min_scale;
    }
    if (std::isinf(min_scale)) {
        throw DomainError("build_grid: no finite positive scale");
    }
    const double max_scale = spec.max_scale ? *spec.max_scale : 2 * max_abs;

    const auto grid = scale_grid(min_scale, max_scale, spec.multiplier);
    std::vector<Interval> components{Interval{0, 0}};
    for (auto c : grid) {
        if (spec.symmetric) {
            components.push_back(Interval{-c, c});
        } else {
            components.push_back(Interval{-c, 0});
            components.push_back(Interval{0, c});
        }
    }
    std::vector<double> weights(components.size(), 1.0 / components.size());
    return UnimodalPrior(std::move(weights), std::move(components));
}

/**
 * Right-continuous mixture distribution function.
 */
inline double prior_cdf(const UnimodalPrior& g, double x) {
    double total = 0;
    const auto w = g.weights();
    const auto comps = g.components();
    for (size_t k = 0; k < g.size(); ++k) {
        const auto& c = comps[k];
        if (c.is_point()) {
            total += x >= c.lower ? w[k] : 0.0;
        } else if (x >= c.upper) {
            total += w[k];
        } else if (x > c.lower) {
            total += w[k] * (x - c.lower) / c.width();
        }
    }
    return std::clamp(total, 0.0, 1.0);
}

inline double prior_sample(const UnimodalPrior& g, Rng& rng) {
    const double u = rng.uniform();
    const auto w = g.weights();
    size_t k = 0;
    double cumulative = w[0];
    while (u > cumulative && k + 1 < g.size()) {
        ++k;
        cumulative += w[k];
    }
    const auto& c = g.components()[k];
    if (c.is_point()) {
        return c.lower;
    }
    return uniform_sample(c.lower, c.upper, rng);
}

}

#endif
