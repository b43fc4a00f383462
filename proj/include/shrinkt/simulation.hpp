#ifndef SHRINKT_SIMULATION_HPP
#define SHRINKT_SIMULATION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ebtm.hpp"
#include "errors.hpp"
#include "pipelines.hpp"
#include "random.hpp"

/**
 * @file simulation.hpp
 *
 * @brief Simulated benchmark data and evaluation metrics.
 *
 * Two generators are provided:
 * - counts: synthetic negative-binomial null counts, per-gene random group
 *   assignment, Poisson thinning to implant log2 fold changes, and an
 *   unweighted log-CPM two-group fit per gene.
 * - gaussian: the hierarchical normal / scaled inverse-chi-square model
 *   sampled directly, so moderated t-likelihoods hold exactly.
 */

namespace shrinkt {

struct NormalMixture {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> sds;

    double density(double x) const {
        double total = 0;
        for (size_t k = 0; k < weights.size(); ++k) {
            const double z = (x - means[k]) / sds[k];
            total += weights[k] * std::exp(normal_logpdf(z)) / sds[k];
        }
        return total;
    }

    double variance() const {
        double m1 = 0, m2 = 0;
        for (size_t k = 0; k < weights.size(); ++k) {
            m1 += weights[k] * means[k];
            m2 += weights[k] * (sds[k] * sds[k] + means[k] * means[k]);
        }
        return m2 - m1 * m1;
    }

    double sample(Rng& rng) const {
        const double u = rng.uniform();
        size_t k = 0;
        double cumulative = weights[0];
        while (u > cumulative && k + 1 < weights.size()) {
            ++k;
            cumulative += weights[k];
        }
        return normal_sample(means[k], sds[k], rng);
    }
};

struct Scenario {
    std::string name;
    NormalMixture g1;
};

/**
 * The five alternative-effect distributions.
 */
inline std::vector<Scenario> scenario_densities() {
    std::vector<Scenario> out;
    out.push_back({"spiky", {{0.4, 0.2, 0.2, 0.2}, {0, 0, 0, 0}, {0.25, 0.5, 1, 2}}});
    out.push_back({"near-normal", {{2.0 / 3, 1.0 / 3}, {0, 0}, {1, 2}}});
    NormalMixture flat;
    for (int i = -3; i <= 3; ++i) {
        flat.weights.push_back(1.0 / 7);
        flat.means.push_back(0.5 * i);
        flat.sds.push_back(0.5);
    }
    out.push_back({"flat-top", flat});
    out.push_back({"big-normal", {{1}, {0}, {4}}});
    out.push_back({"bimodal", {{0.5, 0.5}, {-2, 2}, {1, 1}}});
    return out;
}

inline const Scenario& find_scenario(std::string_view name) {
    static const auto all = scenario_densities();
    for (const auto& s : all) {
        if (s.name == name) {
            return s;
        }
    }
    throw DomainError("unknown scenario '" + std::string(name) + "'");
}

/**
 * Divisor applied to non-null effects at 2, 4 and 10 samples per group.
 */
inline double default_scaling(size_t n_per_group) {
    switch (n_per_group) {
        case 2: return 0.125;
        case 4: return 0.5;
        case 10: return 1.5;
        default: return 1;
    }
}

struct ScenarioSpec {
    std::string name = "spiky";
    NormalMixture g1 = find_scenario("spiky").g1;
    size_t n_per_group = 2;
    double scaling = 0.125;

    /**
     * Null proportion; drawn from U[0, 1] per dataset when empty.
     */
    std::optional<double> pi0;
    size_t n_genes = 2000;

    static ScenarioSpec make(std::string_view name, size_t n_per_group, size_t n_genes = 2000) {
        ScenarioSpec spec;
        spec.name = std::string(name);
        spec.g1 = find_scenario(name).g1;
        spec.n_per_group = n_per_group;
        spec.scaling = default_scaling(n_per_group);
        spec.n_genes = n_genes;
        return spec;
    }

    void validate() const {
        double total = 0;
        for (auto w : g1.weights) {
            total += w;
        }
        if (g1.weights.empty() || std::abs(total - 1) > 1e-12) {
            throw DomainError("ScenarioSpec: mixture weights must sum to 1");
        }
        if (g1.means.size() != g1.weights.size() || g1.sds.size() != g1.weights.size()) {
            throw DomainError("ScenarioSpec: mixture parameter lengths differ");
        }
        if (!(scaling > 0)) {
            throw DomainError("ScenarioSpec: scaling must be positive");
        }
        if (pi0 && !(*pi0 >= 0 && *pi0 <= 1)) {
            throw DomainError("ScenarioSpec: pi0 must lie in [0, 1]");
        }
        if (n_genes == 0 || n_per_group == 0) {
            throw DomainError("ScenarioSpec: n_genes and n_per_group must be positive");
        }
    }
};

struct TruthRecord {
    std::vector<double> beta_true;
    std::vector<char> null_mask;
    double pi0_true = 1;
};

/**
 * Exactly round((1 - pi0) p) genes, chosen at random, get effects from g1
 * divided by the scaling. pi0_true is the realized null fraction.
 */
inline TruthRecord draw_effects(const ScenarioSpec& spec, Rng& rng) {
    spec.validate();
    const double pi0 = spec.pi0 ? *spec.pi0 : rng.uniform();
    const size_t p = spec.n_genes;
    const auto n_alt = static_cast<size_t>(std::llround((1 - pi0) * static_cast<double>(p)));

    TruthRecord out;
    out.beta_true.assign(p, 0.0);
    out.null_mask.assign(p, 1);
    for (auto j : sample_without_replacement(p, n_alt, rng)) {
        double b = 0;
        // A continuous draw is zero with probability zero; redraw to keep the mask exact.
        while (b == 0) {
            b = spec.g1.sample(rng) / spec.scaling;
        }
        out.beta_true[j] = b;
        out.null_mask[j] = 0;
    }
    out.pi0_true = static_cast<double>(p - n_alt) / static_cast<double>(p);
    return out;
}

/**
 * Genes x samples count table with per-gene group labels.
 */
struct CountMatrix {
    enum : signed char { unused = -1, group_a = 0, group_b = 1 };

    size_t n_genes = 0;
    size_t n_samples = 0;
    std::vector<uint64_t> counts;
    std::vector<signed char> groups;

    uint64_t& at(size_t j, size_t i) { return counts[j * n_samples + i]; }
    uint64_t at(size_t j, size_t i) const { return counts[j * n_samples + i]; }
    signed char group(size_t j, size_t i) const { return groups[j * n_samples + i]; }
};

struct NullCountModel {
    double log_mean_center = std::log(500.0);
    double log_mean_sd = 1.5;
    double log_dispersion_center = std::log(0.1);
    double log_dispersion_sd = 0.7;
};

/**
 * Independent negative-binomial counts with log-normal per-gene means and
 * dispersions. Groups start out unassigned.
 */
inline CountMatrix synth_null_counts(size_t n_genes, size_t n_samples, Rng& rng, const NullCountModel& model = {}) {
    if (n_genes == 0 || n_samples == 0) {
        throw DomainError("synth_null_counts: dimensions must be positive");
    }
    CountMatrix out;
    out.n_genes = n_genes;
    out.n_samples = n_samples;
    out.counts.resize(n_genes * n_samples);
    out.groups.assign(n_genes * n_samples, CountMatrix::unused);
    for (size_t j = 0; j < n_genes; ++j) {
        const double mean = std::exp(normal_sample(model.log_mean_center, model.log_mean_sd, rng));
        const double dispersion = std::exp(normal_sample(model.log_dispersion_center, model.log_dispersion_sd, rng));
        for (size_t i = 0; i < n_samples; ++i) {
            out.at(j, i) = neg_binomial_sample(mean, dispersion, rng);
        }
    }
    return out;
}

/**
 * Independently at each gene, pick n_a + n_b of the samples and label the
 * first n_a as group A, the rest as group B.
 */
inline void assign_groups(CountMatrix& counts, size_t n_a, size_t n_b, Rng& rng) {
    if (n_a + n_b > counts.n_samples) {
        throw DomainError("assign_groups: not enough samples for the requested group sizes");
    }
    for (size_t j = 0; j < counts.n_genes; ++j) {
        auto row = counts.groups.begin() + static_cast<std::ptrdiff_t>(j * counts.n_samples);
        std::fill(row, row + static_cast<std::ptrdiff_t>(counts.n_samples), CountMatrix::unused);
        const auto picked = sample_without_replacement(counts.n_samples, n_a + n_b, rng);
        for (size_t i = 0; i < picked.size(); ++i) {
            row[static_cast<std::ptrdiff_t>(picked[i])] = i < n_a ? CountMatrix::group_a : CountMatrix::group_b;
        }
    }
}

/**
 * Binomial thinning with probability 2^-|beta_j|: group A when beta_j > 0,
 * group B when beta_j < 0. The log2 ratio B / A then centers on beta_j.
 */
inline void poisson_thin(CountMatrix& counts, const TruthRecord& truth, Rng& rng) {
    if (truth.beta_true.size() != counts.n_genes) {
        throw DomainError("poisson_thin: truth length differs from gene count");
    }
    for (size_t j = 0; j < counts.n_genes; ++j) {
        const double beta = truth.beta_true[j];
        if (beta == 0) {
            continue;
        }
        const double keep = std::exp2(-std::abs(beta));
        if (!(keep > 0 && keep <= 1)) {
            throw EstimationError("poisson_thin: thinning probability outside (0, 1]");
        }
        const signed char target = beta > 0 ? CountMatrix::group_a : CountMatrix::group_b;
        for (size_t i = 0; i < counts.n_samples; ++i) {
            if (counts.group(j, i) == target) {
                counts.at(j, i) = binomial_sample(counts.at(j, i), keep, rng);
            }
        }
    }
}

/**
 * Two-group fit on y = log2((C + 0.5) / (L + 1) * 1e6), L the library size
 * (column total). beta_hat = mean_B - mean_A, pooled variance.
 */
inline SummaryStats fit_per_gene(const CountMatrix& counts) {
    std::vector<double> libsize(counts.n_samples, 0.0);
    for (size_t j = 0; j < counts.n_genes; ++j) {
        for (size_t i = 0; i < counts.n_samples; ++i) {
            libsize[i] += static_cast<double>(counts.at(j, i));
        }
    }

    SummaryStats out;
    out.beta_hat.resize(counts.n_genes);
    out.se.resize(counts.n_genes);
    out.df.resize(counts.n_genes);
    std::vector<double> ya, yb;
    for (size_t j = 0; j < counts.n_genes; ++j) {
        ya.clear();
        yb.clear();
        for (size_t i = 0; i < counts.n_samples; ++i) {
            const auto g = counts.group(j, i);
            if (g == CountMatrix::unused) {
                continue;
            }
            const double y = std::log2((static_cast<double>(counts.at(j, i)) + 0.5) / (libsize[i] + 1) * 1e6);
            (g == CountMatrix::group_a ? ya : yb).push_back(y);
        }
        const size_t na = ya.size(), nb = yb.size();
        if (na == 0 || nb == 0 || na + nb < 3) {
            throw DomainError("fit_per_gene: gene " + std::to_string(j) + " needs both groups and at least 1 residual df");
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0;
            for (auto x : v) {
                s += x;
            }
            return s / static_cast<double>(v.size());
        };
        const double ma = mean(ya), mb = mean(yb);
        double ss = 0;
        for (auto y : ya) {
            ss += (y - ma) * (y - ma);
        }
        for (auto y : yb) {
            ss += (y - mb) * (y - mb);
        }
        const double nu = static_cast<double>(na + nb - 2);
        out.beta_hat[j] = mb - ma;
        out.se[j] = std::sqrt(ss / nu * (1.0 / na + 1.0 / nb));
        out.df[j] = nu;
    }
    return out;
}

/**
 * Generated dataset with its truth.
 */
struct SimulatedData {
    SummaryStats data;
    TruthRecord truth;
};

/**
 * Count-mode dataset: null counts on a sample pool, per-gene groups,
 * thinning, per-gene fit.
 */
inline SimulatedData count_mode_generate(const ScenarioSpec& spec, size_t pool_size, Rng& rng) {
    auto truth = draw_effects(spec, rng);
    auto counts = synth_null_counts(spec.n_genes, std::max(pool_size, 2 * spec.n_per_group), rng);
    assign_groups(counts, spec.n_per_group, spec.n_per_group, rng);
    poisson_thin(counts, truth, rng);
    return {fit_per_gene(counts), std::move(truth)};
}

struct GaussianHyper {
    double s0_sq = 1;
    double nu0 = 4;
    double nu = 2;
};

/**
 * Gaussian analog of n samples per group with unit noise variance:
 * nu = 2n - 2 and s0^2 = 2 / n.
 */
inline GaussianHyper gaussian_analog(size_t n_per_group, double nu0 = 4) {
    if (n_per_group < 2) {
        throw DomainError("gaussian_analog: need at least 2 samples per group");
    }
    const double n = static_cast<double>(n_per_group);
    return GaussianHyper{2 / n, nu0, 2 * n - 2};
}

/**
 * s_j^-2 ~ s0^-2 chi2_nu0 / nu0, s_hat_j^2 ~ s_j^2 chi2_nu / nu,
 * beta_hat_j ~ N(beta_j, s_j^2). nu0 = inf fixes s_j = s0.
 */
inline SimulatedData gaussian_mode_generate(const ScenarioSpec& spec, const GaussianHyper& hyper, Rng& rng) {
    if (!(hyper.s0_sq > 0) || !(hyper.nu0 > 0) || !(hyper.nu > 0)) {
        throw DomainError("gaussian_mode_generate: hyperparameters must be positive");
    }
    auto truth = draw_effects(spec, rng);
    const size_t p = spec.n_genes;
    SummaryStats data;
    data.beta_hat.resize(p);
    data.se.resize(p);
    data.df.assign(p, hyper.nu);
    for (size_t j = 0; j < p; ++j) {
        const double s2 = std::isinf(hyper.nu0) ? hyper.s0_sq : hyper.s0_sq * hyper.nu0 / chisq_sample(hyper.nu0, rng);
        const double s2_hat = std::isinf(hyper.nu) ? s2 : s2 * chisq_sample(hyper.nu, rng) / hyper.nu;
        data.se[j] = std::sqrt(s2_hat);
        data.beta_hat[j] = truth.beta_true[j] + std::sqrt(s2) * normal_sample(rng);
    }
    return {std::move(data), std::move(truth)};
}

/**
 * Metrics for one pipeline on one dataset. Coverage fields are NaN when a
 * stratum is empty or the pipeline has no credible bounds.
 */
struct EvalReport {
    double pi0_hat = 1;
    size_t n_discoveries = 0;
    double fdp = 0;
    double power = 0;
    double rmse = 0;
    double rrmse = 1;
    double coverage_all = std::numeric_limits<double>::quiet_NaN();
    double coverage_neg = std::numeric_limits<double>::quiet_NaN();
    double coverage_pos = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double kDiscoveryThreshold = 0.05;

/**
 * Discoveries are q < 0.05. Units with a missing posterior mean (excluded
 * from the fit) are scored with their unshrunk estimate and are never
 * discoveries. RRMSE is relative to the unshrunk estimates beta_hat.
 */
inline EvalReport evaluate(const TruthRecord& truth, std::span<const double> beta_hat, const PipelineResult& result) {
    const size_t p = truth.beta_true.size();
    if (beta_hat.size() != p || result.summaries.size() != p) {
        throw DomainError("evaluate: lengths differ");
    }
    EvalReport out;
    out.pi0_hat = result.pi0_hat;

    size_t false_disc = 0, true_disc = 0, n_alt = 0;
    double se_method = 0, se_base = 0;
    size_t cov_all = 0, n_all = 0, cov_neg = 0, n_neg = 0, cov_pos = 0, n_pos = 0;
    for (size_t j = 0; j < p; ++j) {
        const auto& s = result.summaries[j];
        const double beta = truth.beta_true[j];
        const bool is_null = truth.null_mask[j] != 0;
        n_alt += is_null ? 0 : 1;

        const bool discovered = s.qvalue < kDiscoveryThreshold;
        if (discovered) {
            ++(is_null ? false_disc : true_disc);
        }

        const double estimate = std::isnan(s.post_mean) ? beta_hat[j] : s.post_mean;
        se_method += (estimate - beta) * (estimate - beta);
        se_base += (beta_hat[j] - beta) * (beta_hat[j] - beta);

        if (!std::isnan(s.lower_cred_95)) {
            const bool covered = beta >= s.lower_cred_95;
            ++n_all;
            cov_all += covered;
            if (discovered && s.post_mean < 0) {
                ++n_neg;
                cov_neg += covered;
            } else if (discovered && s.post_mean > 0) {
                ++n_pos;
                cov_pos += covered;
            }
        }
    }
    out.n_discoveries = false_disc + true_disc;
    out.fdp = static_cast<double>(false_disc) / static_cast<double>(std::max<size_t>(1, out.n_discoveries));
    out.power = static_cast<double>(true_disc) / static_cast<double>(std::max<size_t>(1, n_alt));
    out.rmse = std::sqrt(se_method);
    const double base = std::sqrt(se_base);
    out.rrmse = base > 0 ? out.rmse / base : std::numeric_limits<double>::quiet_NaN();
    auto rate = [](size_t hit, size_t n) {
        return n > 0 ? static_cast<double>(hit) / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    };
    out.coverage_all = rate(cov_all, n_all);
    out.coverage_neg = rate(cov_neg, n_neg);
    out.coverage_pos = rate(cov_pos, n_pos);
    return out;
}

}

#endif
