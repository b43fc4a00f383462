#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <shrinkt/pipelines.hpp>
#include <shrinkt/random.hpp>
#include <shrinkt/simulation.hpp>

#include "oracles.hpp"

using namespace shrinkt;

namespace {

SummaryStats gaussian_data(size_t p, double pi0, double nu, uint64_t seed, double nu0 = 4) {
    auto spec = ScenarioSpec::make("near-normal", 4, p);
    spec.pi0 = pi0;
    Rng rng(seed);
    return gaussian_mode_generate(spec, GaussianHyper{1, nu0, nu}, rng).data;
}

}

TEST(Pval2se, Examples) {
    EXPECT_NEAR(pval2se(2, 0.05), 1.0204270, 1e-7);
    EXPECT_NEAR(pval2se(2, 0.05), 2 / oracle::t_quantile(0.975, kInf), 1e-12);
    EXPECT_NEAR(pval2se(1.959963984540054, 0.05), 1, 1e-12);
    // 3 / z_{0.995} with z_{0.995} = 2.5758293.
    EXPECT_NEAR(pval2se(-3, 0.01), 3 / oracle::t_quantile(0.995, kInf), 1e-12);
    EXPECT_NEAR(pval2se(-3, 0.01), 1.1646734, 1e-7);
}

TEST(Pval2se, RoundTripThroughNormalPvalue) {
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        const double bhat = 10 * (rng.uniform() - 0.5);
        const double p = std::pow(10.0, -12 * rng.uniform());
        if (bhat == 0 || p >= 1) {
            continue;
        }
        const double se = pval2se(bhat, p);
        const double back = 2 * normal_sf(std::abs(bhat) / se);
        EXPECT_NEAR(back / p, 1, 1e-8) << bhat << " " << p;
    }
}

TEST(Pval2se, Errors) {
    EXPECT_THROW(pval2se(0, 0.5), DomainError);
    EXPECT_THROW(pval2se(1, 0), DomainError);
    EXPECT_THROW(pval2se(1, 1), DomainError);
}

TEST(Adhoc, ZeroEstimateIsExcludedWithWarning) {
    auto data = gaussian_data(300, 0.5, 6, 3);
    data.beta_hat[7] = 0;
    const auto r = run_adhoc(data);
    EXPECT_EQ(r.excluded[7], 1);
    EXPECT_EQ(r.n_excluded(), 1u);
    EXPECT_TRUE(std::isnan(r.summaries[7].post_mean));
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_FALSE(std::isnan(r.summaries[8].post_mean));
}

TEST(Naive, InfiniteDfMatchesTwoStepWhenVariancesAreKnown) {
    // Identical known standard errors: moderation leaves them unchanged and nu_tilde = inf.
    Rng rng(5);
    SummaryStats data;
    for (int j = 0; j < 500; ++j) {
        data.beta_hat.push_back((rng.uniform() < 0.5 ? 0 : 2 * normal_sample(rng)) + normal_sample(rng));
        data.se.push_back(1);
        data.df.push_back(1e8);
    }
    const auto naive = run_naive(data);
    const auto two = run_two_step(data, 0);
    ASSERT_TRUE(std::isinf(two.moderated->nu_tilde[0]));
    EXPECT_NEAR(naive.pi0_hat, two.pi0_hat, 1e-4);
    for (size_t j = 0; j < data.size(); j += 25) {
        EXPECT_NEAR(naive.summaries[j].post_mean, two.summaries[j].post_mean, 1e-4);
    }
}

TEST(Naive, SingleUnitRuns) {
    const SummaryStats data{{1.2}, {0.5}, {3}};
    const auto r = run_naive(data);
    ASSERT_EQ(r.summaries.size(), 1u);
    EXPECT_GE(r.pi0_hat, 0);
    EXPECT_LE(r.pi0_hat, 1);
    EXPECT_TRUE(std::isfinite(r.summaries[0].post_mean));
}

TEST(Naive, UnderestimatesNullProportionWhenAllNullWithTwoDf) {
    // Small-sample variance estimates inflate the spread of beta_hat / s_hat.
    const auto data = gaussian_data(2000, 1.0, 2, 41);
    const auto r = run_naive(data);
    EXPECT_LT(r.pi0_hat, 0.9);
}

TEST(TwoStep, AllNullKeepsPi0NearOne) {
    int hits = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        const auto data = gaussian_data(2000, 1.0, 2, 100 + seed);
        hits += run_two_step(data, 0).pi0_hat >= 0.95;
    }
    EXPECT_GE(hits, 9);
}

TEST(TwoStep, IdenticalStandardErrorsMakeAlphaIrrelevant) {
    Rng rng(8);
    SummaryStats data;
    for (int j = 0; j < 400; ++j) {
        data.beta_hat.push_back((rng.uniform() < 0.5 ? 0 : 1.5 * normal_sample(rng)) + normal_sample(rng));
        data.se.push_back(1);
        data.df.push_back(6);
    }
    const auto a0 = run_two_step(data, 0);
    const auto a1 = run_two_step(data, 1);
    // s_tilde is constant, so alpha = 1 only rescales the grid by that constant.
    EXPECT_NEAR(a0.pi0_hat, a1.pi0_hat, 0.02);
    for (size_t j = 0; j < data.size(); j += 20) {
        EXPECT_NEAR(a0.summaries[j].lfsr, a1.summaries[j].lfsr, 0.02);
    }
}

TEST(Adhoc, InfiniteModeratedDfMatchesTwoStep) {
    Rng rng(9);
    SummaryStats data;
    for (int j = 0; j < 500; ++j) {
        data.beta_hat.push_back((rng.uniform() < 0.5 ? 0 : 2 * normal_sample(rng)) + 0.7 * normal_sample(rng));
        data.se.push_back(0.7);
        data.df.push_back(5);
    }
    const auto two = run_two_step(data, 0);
    const auto adhoc = run_adhoc(data);
    ASSERT_TRUE(std::isinf(adhoc.moderated->nu_tilde[0]));
    // With nu_tilde infinite the p-value inversion returns s_tilde exactly.
    EXPECT_NEAR(pval2se(data.beta_hat[3], adhoc.pvalues[3]), adhoc.moderated->s_tilde[3], 1e-9);
    EXPECT_NEAR(two.pi0_hat, adhoc.pi0_hat, 1e-4);
    for (size_t j = 0; j < data.size(); j += 25) {
        EXPECT_NEAR(two.summaries[j].post_mean, adhoc.summaries[j].post_mean, 1e-4);
    }
}

TEST(Storey, Examples) {
    EXPECT_DOUBLE_EQ(storey_pi0(std::vector<double>{0.1, 0.2, 0.6, 0.9}), 1.0);
    EXPECT_DOUBLE_EQ(storey_pi0(std::vector<double>{0.01, 0.02, 0.03, 0.9}), 0.5);
    // No p-value above lambda: the count is floored at one.
    EXPECT_DOUBLE_EQ(storey_pi0(std::vector<double>{0.01, 0.02, 0.03, 0.04}), 0.5);
}

TEST(Storey, UniformPvaluesGivePi0NearOne) {
    Rng rng(2);
    std::vector<double> p(20000);
    for (auto& v : p) {
        v = rng.uniform();
    }
    EXPECT_NEAR(storey_pi0(p), 1, 0.03);
}

TEST(BenjaminiHochberg, Examples) {
    const auto q = bh_adjust(std::vector<double>{0.01, 0.04, 0.03, 0.5});
    EXPECT_NEAR(q[0], 0.04, 1e-15);
    EXPECT_NEAR(q[1], 0.04 * 4 / 3, 1e-15);
    EXPECT_NEAR(q[2], 0.04 * 4 / 3, 1e-15);
    EXPECT_NEAR(q[3], 0.5, 1e-15);
}

TEST(QvalueBaseline, ReportsUnshrunkEstimates) {
    const auto data = gaussian_data(500, 0.7, 6, 12);
    const auto r = run_qvalue_baseline(data);
    for (size_t j = 0; j < data.size(); ++j) {
        EXPECT_EQ(r.summaries[j].post_mean, data.beta_hat[j]);
        EXPECT_TRUE(std::isnan(r.summaries[j].lfsr));
        EXPECT_GE(r.summaries[j].qvalue, 0);
        EXPECT_LE(r.summaries[j].qvalue, 1);
    }
}

TEST(Pipelines, DeterministicAndNamed) {
    const auto data = gaussian_data(400, 0.6, 6, 77);
    for (auto id : kAllPipelines) {
        const auto a = run_pipeline(id, data);
        const auto b = run_pipeline(id, data);
        EXPECT_EQ(a.id, id);
        EXPECT_EQ(a.pi0_hat, b.pi0_hat);
        for (size_t j = 0; j < data.size(); ++j) {
            EXPECT_EQ(a.summaries[j].qvalue, b.summaries[j].qvalue);
        }
        EXPECT_EQ(parse_pipeline(to_string(id)), id);
    }
    EXPECT_FALSE(parse_pipeline("nope").has_value());
}

TEST(Pipelines, RejectInvalidInput) {
    const SummaryStats bad{{1, 2}, {1, -1}, {3, 3}};
    EXPECT_THROW(run_two_step(bad, 0), DataError);
}
