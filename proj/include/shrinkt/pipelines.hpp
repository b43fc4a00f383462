#ifndef SHRINKT_PIPELINES_HPP
#define SHRINKT_PIPELINES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "distributions.hpp"
#include "ebtm.hpp"
#include "errors.hpp"
#include "posterior.hpp"
#include "variance_moderation.hpp"

/**
 * @file pipelines.hpp
 *
 * @brief End-to-end analyses from (beta_hat, se_hat, df) to a null-proportion
 * estimate and per-unit posterior summaries.
 *
 * - naive: EB t-means directly on (beta_hat, se_hat, df).
 * - two_step_alpha0 / two_step_alpha1: moderate the variances, then EB
 *   t-means on (beta_hat, s_tilde, nu_tilde) with alpha = 0 or 1.
 * - adhoc_pval2se: moderate, convert each moderated-t p-value into the
 *   normal-equivalent standard error, then EB normal means.
 * - qvalue_baseline: moderated-t p-values with a fixed-lambda Storey pi0
 *   and Benjamini-Hochberg q-values.
 */

namespace shrinkt {

enum class PipelineId { naive, two_step_alpha0, two_step_alpha1, adhoc_pval2se, qvalue_baseline };

inline constexpr std::array<PipelineId, 5> kAllPipelines{
    PipelineId::naive, PipelineId::two_step_alpha0, PipelineId::two_step_alpha1,
    PipelineId::adhoc_pval2se, PipelineId::qvalue_baseline};

inline std::string_view to_string(PipelineId id) {
    switch (id) {
        case PipelineId::naive: return "naive";
        case PipelineId::two_step_alpha0: return "two_step_alpha0";
        case PipelineId::two_step_alpha1: return "two_step_alpha1";
        case PipelineId::adhoc_pval2se: return "adhoc_pval2se";
        case PipelineId::qvalue_baseline: return "qvalue_baseline";
    }
    return "unknown";
}

inline std::optional<PipelineId> parse_pipeline(std::string_view name) {
    for (auto id : kAllPipelines) {
        if (to_string(id) == name) {
            return id;
        }
    }
    return std::nullopt;
}

struct PipelineOptions {
    FitOptions fit;
    GridSpec grid;
};

struct PipelineResult {
    PipelineId id = PipelineId::naive;
    double pi0_hat = 1;

    /**
     * One entry per input unit. Excluded units carry NaN in every field.
     * The q-value baseline reports beta_hat as its estimate and NaN for
     * the posterior-only fields.
     */
    std::vector<PosteriorSummary> summaries;
    std::vector<char> excluded;

    std::optional<ModeratedStats> moderated;
    std::optional<EbtmFit> fit;

    /**
     * Moderated-t two-sided p-values (adhoc and qvalue pipelines).
     */
    std::vector<double> pvalues;

    std::vector<std::string> warnings;
    size_t clamped_variances = 0;

    size_t n_excluded() const { return static_cast<size_t>(std::count(excluded.begin(), excluded.end(), 1)); }
};

namespace detail {

inline PosteriorSummary missing_summary() {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    return PosteriorSummary{nan, nan, nan, nan, nan, nan, nan};
}

// Fits the included units and scatters summaries back to input order.
inline void solve_and_scatter(const SummaryStats& solver_input, double alpha, const PipelineOptions& options, PipelineResult& out) {
    const size_t p = solver_input.size();
    SummaryStats kept;
    std::vector<size_t> index;
    for (size_t j = 0; j < p; ++j) {
        if (!out.excluded[j]) {
            kept.beta_hat.push_back(solver_input.beta_hat[j]);
            kept.se.push_back(solver_input.se[j]);
            kept.df.push_back(solver_input.df[j]);
            index.push_back(j);
        }
    }
    out.summaries.assign(p, missing_summary());
    if (kept.size() == 0) {
        throw EstimationError(std::string(to_string(out.id)) + ": no usable units");
    }

    auto fit = fit_ebtm(kept, alpha, options.grid, options.fit);
    SummaryDiagnostics diag;
    const auto summaries = summarize_all(fit.fit, fit.data, &diag);
    for (size_t i = 0; i < index.size(); ++i) {
        out.summaries[index[i]] = summaries[i];
    }
    out.pi0_hat = fit.fit.prior.null_weight();
    out.clamped_variances = diag.clamped_variances;
    if (diag.clamped_variances > 0) {
        out.warnings.push_back(std::to_string(diag.clamped_variances) + " posterior variances clamped at zero");
    }
    out.fit = std::move(fit);
}

inline ModeratedStats moderate_summary(const SummaryStats& data) {
    VarianceObservations obs;
    obs.s2_hat.resize(data.size());
    for (size_t j = 0; j < data.size(); ++j) {
        obs.s2_hat[j] = data.se[j] * data.se[j];
    }
    obs.df = data.df;
    return moderate(obs);
}

}

/**
 * Two-sided moderated-t p-values 2 P(T_{nu_tilde} > |beta_hat / s_tilde|).
 */
inline std::vector<double> moderated_pvalues(const SummaryStats& data, const ModeratedStats& moderated) {
    std::vector<double> out(data.size());
    for (size_t j = 0; j < data.size(); ++j) {
        out[j] = std::min(1.0, t_two_sided_pvalue(data.beta_hat[j] / moderated.s_tilde[j], moderated.nu_tilde[j]));
    }
    return out;
}

/**
 * p-values below this are floored before normal-quantile inversion.
 */
inline constexpr double kPvalueFloor = 1e-300;

/**
 * Standard error s' such that the two-sided normal p-value of
 * beta_hat / s' equals p, i.e. |beta_hat / z| with z = Phi^-1(1 - p/2).
 */
inline double pval2se(double beta_hat, double p) {
    if (!(p > 0 && p < 1)) {
        throw DomainError("pval2se: p must lie in (0, 1)");
    }
    if (beta_hat == 0 || !std::isfinite(beta_hat)) {
        throw DomainError("pval2se: adjusted standard error undefined for beta_hat = 0");
    }
    // Upper-tail form of Phi^-1(1 - p/2), exact for tiny p.
    const double z = -normal_quantile(std::max(p, kPvalueFloor) / 2);
    return std::abs(beta_hat / z);
}

inline PipelineResult run_naive(const SummaryStats& data, const PipelineOptions& options = {}) {
    data.validate(true);
    PipelineResult out;
    out.id = PipelineId::naive;
    out.excluded.assign(data.size(), 0);
    for (size_t j = 0; j < data.size(); ++j) {
        if (data.se[j] == 0) {
            out.excluded[j] = 1;
        }
    }
    if (out.n_excluded() > 0) {
        out.warnings.push_back(std::to_string(out.n_excluded()) + " units with zero standard error excluded");
    }
    detail::solve_and_scatter(data, 0, options, out);
    return out;
}

inline PipelineResult run_two_step(const SummaryStats& data, double alpha, const PipelineOptions& options = {}) {
    data.validate(true);
    PipelineResult out;
    out.id = alpha == 0 ? PipelineId::two_step_alpha0 : PipelineId::two_step_alpha1;
    out.excluded.assign(data.size(), 0);
    auto moderated = detail::moderate_summary(data);

    SummaryStats solver_input{data.beta_hat, moderated.s_tilde, moderated.nu_tilde};
    out.moderated = std::move(moderated);
    detail::solve_and_scatter(solver_input, alpha, options, out);
    return out;
}

inline PipelineResult run_adhoc(const SummaryStats& data, const PipelineOptions& options = {}) {
    data.validate(true);
    PipelineResult out;
    out.id = PipelineId::adhoc_pval2se;
    out.excluded.assign(data.size(), 0);
    auto moderated = detail::moderate_summary(data);
    out.pvalues = moderated_pvalues(data, moderated);

    SummaryStats solver_input{data.beta_hat, std::vector<double>(data.size(), 1.0), std::vector<double>(data.size(), kInf)};
    for (size_t j = 0; j < data.size(); ++j) {
        if (data.beta_hat[j] == 0) {
            out.excluded[j] = 1;
            continue;
        }
        solver_input.se[j] = pval2se(data.beta_hat[j], out.pvalues[j]);
    }
    if (out.n_excluded() > 0) {
        out.warnings.push_back(std::to_string(out.n_excluded()) + " units with beta_hat = 0 excluded (adjusted standard error undefined)");
    }
    out.moderated = std::move(moderated);
    detail::solve_and_scatter(solver_input, 0, options, out);
    return out;
}

/**
 * Storey's estimate #{p_j > lambda} / ((1 - lambda) m), clamped to (0, 1].
 */
inline double storey_pi0(std::span<const double> pvalues, double lambda = 0.5) {
    if (pvalues.empty()) {
        return 1;
    }
    const auto above = std::count_if(pvalues.begin(), pvalues.end(), [&](double p) { return p > lambda; });
    const double m = static_cast<double>(pvalues.size());
    return std::min(1.0, static_cast<double>(std::max<long>(above, 1)) / ((1 - lambda) * m));
}

/**
 * Benjamini-Hochberg adjusted p-values m p_(i) / i with a running minimum
 * from the largest p-value down, capped at 1.
 */
inline std::vector<double> bh_adjust(std::span<const double> pvalues) {
    const size_t m = pvalues.size();
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t l, size_t r) { return pvalues[l] < pvalues[r]; });
    std::vector<double> out(m);
    double running = 1;
    for (size_t i = m; i-- > 0;) {
        const double adjusted = pvalues[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
        running = std::min(running, adjusted);
        out[order[i]] = running;
    }
    return out;
}

/**
 * pi0_hat and q = pi0_hat * BH(p) from arbitrary p-values.
 */
inline std::pair<double, std::vector<double>> storey_qvalues(std::span<const double> pvalues, double lambda = 0.5) {
    const double pi0 = storey_pi0(pvalues, lambda);
    auto q = bh_adjust(pvalues);
    for (auto& v : q) {
        v = std::min(1.0, pi0 * v);
    }
    return {pi0, std::move(q)};
}

inline PipelineResult run_qvalue_baseline(const SummaryStats& data) {
    data.validate(true);
    PipelineResult out;
    out.id = PipelineId::qvalue_baseline;
    out.excluded.assign(data.size(), 0);
    auto moderated = detail::moderate_summary(data);
    out.pvalues = moderated_pvalues(data, moderated);
    auto [pi0, q] = storey_qvalues(out.pvalues);
    out.pi0_hat = pi0;
    out.summaries.assign(data.size(), detail::missing_summary());
    for (size_t j = 0; j < data.size(); ++j) {
        out.summaries[j].post_mean = data.beta_hat[j];
        out.summaries[j].qvalue = q[j];
    }
    out.moderated = std::move(moderated);
    return out;
}

inline PipelineResult run_pipeline(PipelineId id, const SummaryStats& data, const PipelineOptions& options = {}) {
    switch (id) {
        case PipelineId::naive: return run_naive(data, options);
        case PipelineId::two_step_alpha0: return run_two_step(data, 0, options);
        case PipelineId::two_step_alpha1: return run_two_step(data, 1, options);
        case PipelineId::adhoc_pval2se: return run_adhoc(data, options);
        case PipelineId::qvalue_baseline: return run_qvalue_baseline(data);
    }
    throw DomainError("run_pipeline: unknown pipeline");
}

}

#endif
