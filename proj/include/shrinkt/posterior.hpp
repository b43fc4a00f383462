#ifndef SHRINKT_POSTERIOR_HPP
#define SHRINKT_POSTERIOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "distributions.hpp"
#include "ebtm.hpp"
#include "errors.hpp"

/**
 * @file posterior.hpp
 *
 * @brief Posterior distributions of the effects under a fitted prior, and
 * the summaries derived from them.
 *
 * Under a uniform component U[a, b] the posterior of theta is the t density
 * centred at theta_hat truncated to [a, b]; under the point mass it is the
 * point mass. The posterior is the responsibility-weighted mixture of these.
 */

namespace shrinkt {

namespace detail {

inline constexpr size_t kQuadratureNodes = 64;

struct GaussLegendreRule {
    std::array<double, kQuadratureNodes> nodes;
    std::array<double, kQuadratureNodes> weights;
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussLegendreRule make_gauss_legendre() {
    GaussLegendreRule rule;
    constexpr size_t n = kQuadratureNodes;
    for (size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double derivative = 0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1, p2 = 0;
            for (size_t m = 1; m <= n; ++m) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * m - 1) * z * p2 - (m - 1.0) * p3) / m;
            }
            derivative = n * (z * p1 - p2) / (z * z - 1);
            const double step = p1 / derivative;
            z -= step;
            if (std::abs(step) < 1e-16) {
                break;
            }
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        const double w = 2 / ((1 - z * z) * derivative * derivative);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

inline const GaussLegendreRule& gauss_legendre() {
    static const GaussLegendreRule rule = make_gauss_legendre();
    return rule;
}

// Accumulates the zeroth, first and second moments of exp(logpdf(u) - peak)
// over [lo, hi].
inline void accumulate_panel(double lo, double hi, double df, double peak, std::array<double, 3>& acc) {
    const auto& rule = gauss_legendre();
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (size_t i = 0; i < kQuadratureNodes; ++i) {
        const double u = mid + half * rule.nodes[i];
        const double w = half * rule.weights[i] * std::exp(t_log_kernel(u, df) - peak);
        acc[0] += w;
        acc[1] += w * u;
        acc[2] += w * u * u;
    }
}

}

struct TruncatedMoments {
    double mean = 0;
    double second_moment = 0;
};

/**
 * Mean and second moment of the generalized t (location, scale, df)
 * truncated to [a, b].
 *
 * The standardized interval is cut into panels walking outward from the
 * density peak, and each panel is integrated with 64-point Gauss-Legendre.
 * A walk stops once a panel's contribution is below 1e-17 of the running
 * totals.
 */
inline TruncatedMoments truncated_t_moments(double location, double scale, double df, double a, double b) {
    if (!(a < b)) {
        throw DomainError("truncated_t_moments: require a < b");
    }
    if (!(scale > 0)) {
        throw DomainError("truncated_t_moments: scale must be positive");
    }
    const double ua = (a - location) / scale;
    const double ub = (b - location) / scale;
    const double anchor = std::clamp(0.0, ua, ub);
    const double peak = t_log_kernel(anchor, df);

    std::array<double, 3> acc{0, 0, 0};

    // Panels grow geometrically away from the peak but never exceed eight
    // local e-folding lengths of the density, so each stays well resolved.
    auto walk = [&](double sign, double limit) {
        double inner = anchor;
        while (sign * (limit - inner) > 0) {
            const double r = std::abs(inner);
            double efold = kInf;
            if (r > 0) {
                efold = std::isinf(df) ? 1 / r : (df + r * r) / ((df + 1) * r);
            }
            const double width = std::min(std::max(2.0, r), 8 * efold);
            double outer = inner + sign * width;
            if (sign * (outer - limit) > 0) {
                outer = limit;
            }
            std::array<double, 3> panel{0, 0, 0};
            detail::accumulate_panel(std::min(inner, outer), std::max(inner, outer), df, peak, panel);
            for (size_t i = 0; i < 3; ++i) {
                acc[i] += panel[i];
            }
            if (panel[0] <= 1e-17 * acc[0] && panel[2] <= 1e-17 * acc[2]) {
                break;
            }
            inner = outer;
        }
    };
    walk(1, ub);
    walk(-1, ua);

    if (!(acc[0] > 0)) {
        throw DomainError("truncated_t_moments: negligible normalizing mass");
    }
    const double mean_u = acc[1] / acc[0];
    const double second_u = acc[2] / acc[0];
    TruncatedMoments out;
    out.mean = location + scale * mean_u;
    out.second_moment = location * location + 2 * location * scale * mean_u + scale * scale * second_u;
    return out;
}

/**
 * Posterior of one unit on the theta scale.
 */
class PosteriorMixture {
public:
    struct Segment {
        double weight;
        Interval interval;
        double log_mass; // log P(theta in interval) under the unnormalized t likelihood
    };

    PosteriorMixture(double atom, std::vector<Segment> segments, double location, double scale, double df, double beta_scale) :
        atom_(atom), segments_(std::move(segments)), location_(location), scale_(scale), df_(df), beta_scale_(beta_scale) {}

    double atom() const { return atom_; }
    std::span<const Segment> segments() const { return segments_; }
    double location() const { return location_; }
    double scale() const { return scale_; }
    double df() const { return df_; }
    double beta_scale() const { return beta_scale_; }

    /**
     * P(theta <= x) within one segment.
     */
    double segment_cdf(const Segment& s, double x) const {
        if (x <= s.interval.lower) {
            return 0;
        }
        if (x >= s.interval.upper) {
            return 1;
        }
        const double ua = standardize(s.interval.lower);
        const double ux = standardize(x);
        const double ub = standardize(s.interval.upper);
        // Use the shorter side so the ratio stays accurate near either end.
        if (ux - ua <= ub - ux) {
            return std::exp(t_log_interval_mass(ua, ux, df_) - s.log_mass);
        }
        return 1 - std::exp(t_log_interval_mass(ux, ub, df_) - s.log_mass);
    }

    double segment_sf(const Segment& s, double x) const {
        if (x <= s.interval.lower) {
            return 1;
        }
        if (x >= s.interval.upper) {
            return 0;
        }
        return std::exp(t_log_interval_mass(standardize(x), standardize(s.interval.upper), df_) - s.log_mass);
    }

    /**
     * P(theta < x), excluding the atom when x == 0.
     */
    double cdf_left(double x) const {
        double total = x > 0 ? atom_ : 0.0;
        for (const auto& s : segments_) {
            total += s.weight * segment_cdf(s, x);
        }
        return std::clamp(total, 0.0, 1.0);
    }

    /**
     * P(theta <= x).
     */
    double cdf(double x) const {
        double total = x >= 0 ? atom_ : 0.0;
        for (const auto& s : segments_) {
            total += s.weight * segment_cdf(s, x);
        }
        return std::clamp(total, 0.0, 1.0);
    }

    /**
     * Density of the continuous part at x.
     */
    double density(double x) const {
        double total = 0;
        for (const auto& s : segments_) {
            if (x >= s.interval.lower && x <= s.interval.upper) {
                total += s.weight * std::exp(t_logpdf(standardize(x), df_) - s.log_mass) / scale_;
            }
        }
        return total;
    }

    double lfdr() const { return atom_; }

    /**
     * min(P(theta >= 0), P(theta <= 0)), the atom counted on both sides.
     */
    double lfsr() const {
        double below = atom_;
        double above = atom_;
        for (const auto& s : segments_) {
            below += s.weight * segment_cdf(s, 0);
            above += s.weight * segment_sf(s, 0);
        }
        return std::clamp(std::min(below, above), atom_, 1.0);
    }

    /**
     * Generalized inverse of the theta-scale CDF: the smallest x with
     * P(theta <= x) >= target. Targets that fall inside the atom's jump
     * return 0.
     */
    double quantile(double target) const {
        const double left0 = cdf_left(0);
        const double right0 = cdf(0);
        if (target >= left0 && target <= right0) {
            return 0;
        }

        double lo, hi;
        if (target < left0) {
            hi = 0;
            lo = 0;
            for (const auto& s : segments_) {
                lo = std::min(lo, s.interval.lower);
            }
        } else {
            lo = 0;
            hi = 0;
            for (const auto& s : segments_) {
                hi = std::max(hi, s.interval.upper);
            }
        }

        double x = 0.5 * (lo + hi);
        for (int iter = 0; iter < 400; ++iter) {
            const double gap = cdf(x) - target;
            if (std::abs(gap) <= 1e-13) {
                break;
            }
            if (gap > 0) {
                hi = x;
            } else {
                lo = x;
            }
            const double f = density(x);
            double next = f > 0 ? x - gap / f : lo - 1;
            if (!(next > lo && next < hi)) {
                next = 0.5 * (lo + hi);
            }
            if (hi - lo <= 1e-14 * std::max(1.0, std::abs(x))) {
                x = next;
                break;
            }
            x = next;
        }
        return x;
    }

    /**
     * Posterior mean and second moment of theta.
     */
    TruncatedMoments moments() const {
        TruncatedMoments out{0, 0};
        for (const auto& s : segments_) {
            const auto m = truncated_t_moments(location_, scale_, df_, s.interval.lower, s.interval.upper);
            out.mean += s.weight * m.mean;
            out.second_moment += s.weight * m.second_moment;
        }
        return out;
    }

private:
    double standardize(double x) const { return (x - location_) / scale_; }

    double atom_;
    std::vector<Segment> segments_;
    double location_;
    double scale_;
    double df_;
    double beta_scale_;
};

/**
 * Components whose posterior weight is below this are dropped.
 */
inline constexpr double kNegligibleWeight = 1e-14;

/**
 * Posterior of unit j under a fitted prior. `data` must be the scaled data
 * the fit was computed on.
 */
inline PosteriorMixture posterior_mixture(size_t j, const FitResult& fit, const ScaledData& data) {
    const auto comps = fit.prior.components();
    const double location = data.theta_hat[j];
    const double scale = data.scale[j];
    const double df = data.df[j];

    double atom = 0;
    double kept = 0;
    std::vector<PosteriorMixture::Segment> segments;
    for (size_t k = 0; k < fit.prior.size(); ++k) {
        const double w = fit.responsibility(j, k);
        if (comps[k].is_point()) {
            atom += w;
            kept += w;
            continue;
        }
        if (w < kNegligibleWeight) {
            continue;
        }
        const double lo = (comps[k].lower - location) / scale;
        const double hi = (comps[k].upper - location) / scale;
        const double log_mass = t_log_interval_mass(lo, hi, df);
        if (!std::isfinite(log_mass)) {
            continue;
        }
        segments.push_back({w, comps[k], log_mass});
        kept += w;
    }
    if (kept > 0) {
        atom /= kept;
        for (auto& s : segments) {
            s.weight /= kept;
        }
    }
    return PosteriorMixture(atom, std::move(segments), location, scale, df, data.beta_scale[j]);
}

struct PosteriorSummary {
    double post_mean = 0;
    double post_sd = 0;
    double lfdr = 1;
    double lfsr = 1;
    double qvalue = 1;
    double lower_cred_95 = 0;
    double upper_cred_95 = 0;
};

/**
 * Equal-tail credible bound on the beta scale. The lower bound b satisfies
 * P(beta >= b) = level, the upper bound P(beta <= b) = level.
 */
enum class BoundSide { lower, upper };

inline double credible_bound(const PosteriorMixture& post, double level, BoundSide side) {
    if (!(level > 0 && level < 1)) {
        throw DomainError("credible_bound: level must lie in (0, 1)");
    }
    const double target = side == BoundSide::lower ? 1 - level : level;
    return post.beta_scale() * post.quantile(target);
}

/**
 * Number of units whose posterior variance came out negative from rounding
 * and was clamped to zero.
 */
struct SummaryDiagnostics {
    size_t clamped_variances = 0;
};

inline PosteriorSummary summarize(const PosteriorMixture& post, SummaryDiagnostics* diag = nullptr) {
    PosteriorSummary out;
    const auto m = post.moments();
    const double c = post.beta_scale();
    out.post_mean = c * m.mean;
    double var = m.second_moment - m.mean * m.mean;
    if (var < 0) {
        var = 0;
        if (diag) {
            ++diag->clamped_variances;
        }
    }
    out.post_sd = c * std::sqrt(var);
    out.lfdr = post.lfdr();
    out.lfsr = post.lfsr();
    out.lower_cred_95 = credible_bound(post, 0.95, BoundSide::lower);
    out.upper_cred_95 = credible_bound(post, 0.95, BoundSide::upper);
    out.qvalue = out.lfdr;
    return out;
}

/**
 * q_(i) = mean of the i smallest lfdr values, mapped back to input order.
 * Tied lfdr values share the q-value of the largest rank in the tie.
 */
inline std::vector<double> qvalues(std::span<const double> lfdr) {
    const size_t n = lfdr.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t l, size_t r) { return lfdr[l] < lfdr[r]; });

    std::vector<double> sorted_q(n);
    double running = 0;
    for (size_t i = 0; i < n; ++i) {
        running += lfdr[order[i]];
        sorted_q[i] = running / (i + 1);
    }
    for (size_t i = n; i-- > 1;) {
        if (lfdr[order[i - 1]] == lfdr[order[i]]) {
            sorted_q[i - 1] = sorted_q[i];
        }
    }

    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        out[order[i]] = std::min(sorted_q[i], 1.0);
    }
    return out;
}

/**
 * Summaries for every unit of a fit, with q-values filled in.
 */
inline std::vector<PosteriorSummary> summarize_all(const FitResult& fit, const ScaledData& data, SummaryDiagnostics* diag = nullptr) {
    std::vector<PosteriorSummary> out(data.size());
    std::vector<double> lfdr(data.size());
    for (size_t j = 0; j < data.size(); ++j) {
        out[j] = summarize(posterior_mixture(j, fit, data), diag);
        lfdr[j] = out[j].lfdr;
    }
    const auto q = qvalues(lfdr);
    for (size_t j = 0; j < data.size(); ++j) {
        out[j].qvalue = q[j];
    }
    return out;
}

}

#endif
