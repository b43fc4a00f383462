#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <shrinkt/json_io.hpp>
#include <shrinkt/unimodal_prior.hpp>

using namespace shrinkt;

TEST(ScaleGrid, GeometricSequence) {
    const auto g = scale_grid(1, 8, 2);
    ASSERT_EQ(g.size(), 4u);
    EXPECT_EQ(g, (std::vector<double>{1, 2, 4, 8}));
}

TEST(ScaleGrid, SqrtTwoCount) {
    // ceil(log_sqrt2(128)) + 1 = 15
    EXPECT_EQ(scale_grid(0.1, 12.8, std::sqrt(2.0)).size(), 15u);
}

TEST(ScaleGrid, Errors) {
    EXPECT_THROW(scale_grid(1, 8, 1), DomainError);
    EXPECT_THROW(scale_grid(0, 8, 2), DomainError);
}

TEST(BuildGrid, DefaultsAndDegenerateData) {
    const std::vector<double> bhat(5, 0.0), se(5, 1.0);
    const auto g = build_grid(bhat, se);
    ASSERT_GE(g.size(), 2u);
    EXPECT_TRUE(g.components()[0].is_point());
    EXPECT_DOUBLE_EQ(g.components()[1].upper, 0.1);
    EXPECT_DOUBLE_EQ(g.components()[1].lower, -0.1);
}

TEST(BuildGrid, ComponentsContainZeroAndWeightsUniform) {
    const std::vector<double> bhat{-3, 0.2, 5}, se{0.5, 1, 2};
    const auto g = build_grid(bhat, se);
    const double w = 1.0 / g.size();
    for (size_t k = 0; k < g.size(); ++k) {
        EXPECT_LE(g.components()[k].lower, 0);
        EXPECT_GE(g.components()[k].upper, 0);
        EXPECT_DOUBLE_EQ(g.weights()[k], w);
    }
    EXPECT_DOUBLE_EQ(g.components()[1].upper, 0.05);
    EXPECT_GE(g.components().back().upper * (1 + 1e-9), 10);
}

TEST(BuildGrid, AsymmetricOption) {
    GridSpec spec;
    spec.symmetric = false;
    spec.multiplier = 2;
    spec.min_scale = 1;
    spec.max_scale = 4;
    const std::vector<double> bhat{1}, se{1};
    const auto g = build_grid(bhat, se, spec);
    ASSERT_EQ(g.size(), 7u);
    EXPECT_EQ(g.components()[1], (Interval{-1, 0}));
    EXPECT_EQ(g.components()[2], (Interval{0, 1}));
}

TEST(BuildGrid, EmptyDataErrors) {
    const std::vector<double> empty;
    EXPECT_THROW(build_grid(empty, empty), DomainError);
}

TEST(UnimodalPrior, ValidatesInvariants) {
    EXPECT_THROW(UnimodalPrior({0.5, 0.4}, {{0, 0}, {-1, 1}}), DomainError);
    EXPECT_THROW(UnimodalPrior({0.5, 0.5}, {{0, 0}, {0.5, 1}}), DomainError);
    EXPECT_THROW(UnimodalPrior({0.5, 0.5}, {{-1, 1}, {0, 0}}), DomainError);
    EXPECT_THROW(UnimodalPrior({1.5, -0.5}, {{0, 0}, {-1, 1}}), DomainError);
    EXPECT_NO_THROW(UnimodalPrior({0.5, 0.5}, {{0, 0}, {-1, 1}}));
}

TEST(PriorCdf, Examples) {
    const UnimodalPrior point({1}, {{0, 0}});
    EXPECT_EQ(prior_cdf(point, -1e-300), 0);
    EXPECT_EQ(prior_cdf(point, 0), 1);
    const UnimodalPrior half({0.5, 0.5}, {{0, 0}, {-1, 1}});
    EXPECT_DOUBLE_EQ(prior_cdf(half, 0), 0.75);
    EXPECT_DOUBLE_EQ(prior_cdf(half, -1e-12), 0.25 - 0.25e-12);
    EXPECT_EQ(prior_cdf(half, -2), 0);
    EXPECT_EQ(prior_cdf(half, 2), 1);
}

TEST(PriorCdf, NondecreasingRightContinuous) {
    const auto g = build_grid(std::vector<double>{-4, 1, 3}, std::vector<double>{1, 1, 1});
    double prev = 0;
    for (double x = -10; x <= 10; x += 0.01) {
        const double c = prior_cdf(g, x);
        EXPECT_GE(c, prev);
        prev = c;
    }
    EXPECT_EQ(prior_cdf(g, -100), 0);
    EXPECT_NEAR(prior_cdf(g, 100), 1, 1e-15);
    EXPECT_NEAR(prior_cdf(g, 1e-13), prior_cdf(g, 0), 1e-12);
}

TEST(PriorSample, MeanOfHalfUniform) {
    const UnimodalPrior g({0.5, 0.5}, {{0, 0}, {0, 2}});
    Rng rng(10);
    double total = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        total += prior_sample(g, rng);
    }
    EXPECT_NEAR(total / n, 0.5, 0.005);
}

TEST(PriorSample, WithinDkwBandOfCdf) {
    const UnimodalPrior g({0.3, 0.2, 0.5}, {{0, 0}, {-1, 1}, {-4, 2}});
    Rng rng(77);
    const size_t n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) {
        x = prior_sample(g, rng);
    }
    std::sort(xs.begin(), xs.end());
    // DKW: P(sup |F_n - F| > eps) <= 2 exp(-2 n eps^2) = 0.001.
    const double eps = std::sqrt(std::log(2 / 0.001) / (2.0 * n));
    double worst = 0;
    for (double x = -4.5; x <= 2.5; x += 0.01) {
        const double emp = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
        worst = std::max(worst, std::abs(emp - prior_cdf(g, x)));
    }
    EXPECT_LT(worst, eps);
}

TEST(PriorJson, RoundTrip) {
    const UnimodalPrior g({0.25, 0.75}, {{0, 0}, {-1.5, 2}});
    const auto j = prior_to_json(g);
    EXPECT_EQ(j["intervals"][1][0].get<double>(), -1.5);
    const auto back = prior_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.size(), 2u);
    EXPECT_EQ(back.weights()[1], 0.75);
    EXPECT_EQ(back.components()[1], (Interval{-1.5, 2}));
    EXPECT_THROW(prior_from_json(nlohmann::json::parse(R"({"weights":[1]})")), DataError);
}
