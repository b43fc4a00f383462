// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <shrinkt/bench.hpp>
#include <shrinkt/ebtm.hpp>
#include <shrinkt/pipelines.hpp>
#include <shrinkt/posterior.hpp>
#include <shrinkt/simulation.hpp>
#include <shrinkt/variance_moderation.hpp>

#include "oracles.hpp"

using namespace shrinkt;

namespace {

std::map<int, std::string> lines;
int failures = 0;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
    char head[64];
    std::snprintf(head, sizeof(head), "%s %d %s: ", passed ? "PASS" : "FAIL", id, name.c_str());
    lines[id] = head + detail;
    std::printf("# done %d\n", id);
    std::fflush(stdout);
    failures += passed ? 0 : 1;
}

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(4);
    s << x;
    return s.str();
}

// Null data from the hierarchical model, binned by s_hat quantile; KS of
// (beta_hat - beta) / s_tilde against t with the moderated df, per bin.
void lemma_monte_carlo() {
    auto spec = ScenarioSpec::make("spiky", 4, 100000);
    spec.pi0 = 1;
    Rng rng(101);
    const auto sim = gaussian_mode_generate(spec, GaussianHyper{1, 4, 4}, rng);
    VarianceObservations obs;
    for (double s : sim.data.se) {
        obs.s2_hat.push_back(s * s);
    }
    obs.df = sim.data.df;
    const auto mod = moderate(obs);

    const size_t p = sim.data.size();
    std::vector<size_t> order(p);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t l, size_t r) { return sim.data.se[l] < sim.data.se[r]; });
    const size_t bins = 20;
    int passing = 0;
    double worst = 1;
    for (size_t b = 0; b < bins; ++b) {
        std::vector<double> pit;
        for (size_t i = b * p / bins; i < (b + 1) * p / bins; ++i) {
            const size_t j = order[i];
            const double t = (sim.data.beta_hat[j] - sim.truth.beta_true[j]) / mod.s_tilde[j];
            pit.push_back(oracle::t_cdf(t, mod.nu_tilde[j]));
        }
        const double pv = ks_uniform_pvalue(pit);
        worst = std::min(worst, pv);
        passing += pv > 0.01;
    }
    report(1, "lemma_monte_carlo", passing >= 18,
           std::to_string(passing) + "/20 bins with KS p > 0.01 (min p " + fmt(worst) + "; nu0_hat " + fmt(mod.nu0) + ")");
}

void chi1_counterexample() {
    Rng rng(202);
    const size_t p = 100000;
    std::vector<double> t_all, bin_normal, bin_t1;
    for (size_t j = 0; j < p; ++j) {
        const double bhat = normal_sample(rng);
        const double s = std::sqrt(chisq_sample(1, rng));
        const double t = bhat / s;
        t_all.push_back(oracle::t_cdf(t, 1));
        if (s >= 0.28 && s <= 0.32) {
            // t ~ N(0, 1 / s^2) given s.
            bin_normal.push_back(oracle::t_cdf(t * s, kInf));
            bin_t1.push_back(oracle::t_cdf(t, 1));
        }
    }
    const double p_marg = ks_uniform_pvalue(t_all);
    const double p_norm = ks_uniform_pvalue(bin_normal);
    const double p_t1 = ks_uniform_pvalue(bin_t1);
    report(2, "chi1_counterexample", p_marg > 0.01 && p_norm > 0.01 && p_t1 < 1e-6,
           "marginal vs t1 p " + fmt(p_marg) + "; bin s_hat in [0.28, 0.32] (" + std::to_string(bin_normal.size()) +
               " units) vs normal p " + fmt(p_norm) + ", vs t1 p " + fmt(p_t1));
}

void hyperparameter_recovery() {
    int total = 0, ok = 0;
    double worst_s0 = 0, worst_nu0 = 0;
    std::string misses;
    for (double nu0 : {2.0, 4.0, 10.0}) {
        for (double nu : {2.0, 4.0, 18.0}) {
            for (uint64_t seed = 1; seed <= 5; ++seed) {
                Rng rng(derive_seed(303, {static_cast<uint64_t>(nu0), static_cast<uint64_t>(nu), seed}));
                VarianceObservations obs;
                obs.df.assign(100000, nu);
                for (size_t j = 0; j < 100000; ++j) {
                    const double s2 = nu0 / chisq_sample(nu0, rng);
                    obs.s2_hat.push_back(s2 * chisq_sample(nu, rng) / nu);
                }
                const auto est = estimate_hyperparams(obs);
                const double e_s0 = std::abs(est.s0_sq - 1);
                const double e_nu0 = std::abs(est.nu0 - nu0) / nu0;
                worst_s0 = std::max(worst_s0, e_s0);
                worst_nu0 = std::max(worst_nu0, std::isfinite(e_nu0) ? e_nu0 : 1e300);
                ++total;
                if (e_s0 <= 0.05 && e_nu0 <= 0.20) {
                    ++ok;
                } else {
                    misses += " (nu0 " + fmt(nu0) + ", nu " + fmt(nu) + ", seed " + std::to_string(seed) + ": s0^2 " + fmt(est.s0_sq) +
                              ", nu0 " + fmt(est.nu0) + ")";
                }
            }
        }
    }
    report(3, "hyperparameter_recovery", ok == total,
           std::to_string(ok) + "/" + std::to_string(total) + " fits in band; worst rel err s0^2 " + fmt(worst_s0) + ", nu0 " +
               fmt(worst_nu0) + misses);
}

std::string results_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    csv::write(out, results_table(rows));
    return out.str();
}

void bench_criteria() {
    BenchConfig config;
    config.seed = 20240601;
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_bench(config);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("# desk bench: %zu rows in %.0f s\n", rows.size(), secs);

    const auto checks = bench_checks(rows);
    auto find = [&](const std::string& name) {
        for (const auto& c : checks) {
            if (c.name == name) {
                return c;
            }
        }
        return CheckResult{name, false, false, "check missing"};
    };
    const auto c4 = find("naive_anticonservative_pi0");
    report(4, "naive_anticonservative_pi0", c4.passed, c4.detail);
    const auto c5 = find("fdr_control");
    report(5, "fdr_control", c5.passed, c5.detail);
    const auto c6 = find("rrmse_below_one");
    report(6, "rrmse_below_one", c6.passed, c6.detail);
    const auto c7 = find("coverage_n10");
    const auto flag = find("coverage_neg_n2_flag");
    report(7, "coverage", c7.passed && flag.passed,
           c7.detail + "; n=2 significant-negative: " + flag.detail + (flag.flagged ? " [FLAGGED]" : ""));

    // Determinism: a reduced configuration run twice must produce identical bytes.
    BenchConfig small = config;
    small.scenarios = {"spiky", "bimodal"};
    small.n_per_group = {2};
    small.replicates = 2;
    small.n_genes = 500;
    const auto first = results_csv(run_bench(small));
    const bool identical = first == results_csv(run_bench(small));
    small.threads = 1;
    const bool thread_invariant = first == results_csv(run_bench(small));
    const auto c9 = find("em_monotone");
    report(9, "em_monotone_and_determinism", c9.passed && identical && thread_invariant,
           c9.detail + "; rerun byte-identical: " + (identical ? "yes" : "no") +
               "; single-thread run identical: " + (thread_invariant ? "yes" : "no"));
}

void oracle_equivalence() {
    // A realistic fitted prior, then 50 random units under it.
    auto spec = ScenarioSpec::make("spiky", 4, 2000);
    spec.pi0 = 0.6;
    Rng rng(404);
    const auto sim = gaussian_mode_generate(spec, gaussian_analog(4), rng);
    const auto fitted = fit_ebtm(sim.data, 0).fit.prior;
    std::vector<oracle::Component> prior;
    for (size_t k = 0; k < fitted.size(); ++k) {
        prior.push_back({fitted.weights()[k], fitted.components()[k].lower, fitted.components()[k].upper});
    }

    double worst_summary = 0;
    double worst_lik = 0;
    std::string where;
    for (int i = 0; i < 50; ++i) {
        const double bhat = 8 * (rng.uniform() - 0.5);
        const double se = 0.2 + 1.8 * rng.uniform();
        const double df = rng.uniform() < 0.2 ? kInf : 1 + 30 * rng.uniform();
        const SummaryStats unit{{bhat}, {se}, {df}};
        const auto fit = fit_with_prior(unit, fitted, 0);
        const auto s = summarize_all(fit.fit, fit.data)[0];
        const auto ref = oracle::grid_posterior(prior, bhat, se, df);
        for (double err : {s.post_mean - ref.mean, s.post_sd - ref.sd, s.lfdr - ref.lfdr, s.lfsr - ref.lfsr,
                           s.lower_cred_95 - ref.lower_95, s.upper_cred_95 - ref.upper_95}) {
            if (std::abs(err) > worst_summary) {
                worst_summary = std::abs(err);
                where = "bhat " + fmt(bhat) + ", se " + fmt(se) + ", df " + fmt(df);
            }
        }
        for (const auto& c : prior) {
            const double r = oracle::component_likelihood(bhat, se, df, c.lower, c.upper);
            if (r > 1e-290) {
                worst_lik = std::max(worst_lik, std::abs(std::exp(component_loglik(bhat, se, df, {c.lower, c.upper})) / r - 1));
            }
        }
    }
    report(8, "oracle_equivalence", worst_summary <= 1e-5 && worst_lik <= 1e-8,
           "max summary abs err " + fmt(worst_summary) + " (" + where + "); max loglik rel err " + fmt(worst_lik));
}

void pval2se_round_trip() {
    Rng rng(505);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        double bhat = 0;
        while (bhat == 0) {
            bhat = 10 * (rng.uniform() - 0.5);
        }
        const double p = rng.uniform();
        const double se = pval2se(bhat, p);
        const double back = 2 * normal_sf(std::abs(bhat) / se);
        worst = std::max(worst, std::abs(back - p));
    }
    report(10, "pval2se_round_trip", worst <= 1e-10, "max |p' - p| " + fmt(worst));
}

}

int main() {
    lemma_monte_carlo();
    chi1_counterexample();
    hyperparameter_recovery();
    oracle_equivalence();
    pval2se_round_trip();
    bench_criteria();
    for (const auto& [id, line] : lines) {
        std::printf("%s\n", line.c_str());
    }
    std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
    return failures == 0 ? 0 : 1;
}
