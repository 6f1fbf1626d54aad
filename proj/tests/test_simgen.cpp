#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nlpaft/screening.hpp"
#include "nlpaft/simgen.hpp"

using namespace nlpaft;

namespace {

SimConfig config(Generator g, std::size_t n, std::size_t p, double censoring, std::uint64_t seed) {
    SimConfig c;
    c.generator = g;
    c.n = n;
    c.p = p;
    c.target_censoring = censoring;
    c.seed = seed;
    return c;
}

double censored_fraction(const SurvivalDataset& d) {
    return 1.0 - static_cast<double>(d.events()) / static_cast<double>(d.n());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd x = a.array() - a.mean();
    const Eigen::ArrayXd y = b.array() - b.mean();
    return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

}  // namespace

TEST(SimulateAft, NoCensoringMeansAllEvents) {
    const auto d = simulate_aft(config(Generator::aft_lognormal, 500, 3, 0.0, 1));
    EXPECT_EQ(d.events(), 500u);
}

TEST(SimulateAft, CensoringRateHitsTarget) {
    for (double target : {0.2, 0.5, 0.8}) {
        auto c = config(Generator::aft_lognormal, 10000, 6, target, 2);
        c.beta_true = SimConfig::reference_signal();
        EXPECT_NEAR(censored_fraction(simulate_aft(c)), target, 0.03) << target;
    }
}

TEST(SimulateAft, NullSignalGivesUncorrelatedColumns) {
    const auto d = simulate_aft(config(Generator::aft_lognormal, 10000, 20, 0.0, 3));
    for (CovariateIndex j = 0; j < 20; ++j) EXPECT_LT(std::abs(corr(d.column(j), d.log_times())), 0.05) << j;
}

TEST(SimulateAft, TimesArePositiveAndCapped) {
    auto c = config(Generator::aft_lognormal, 2000, 6, 0.5, 4);
    c.beta_true = SimConfig::reference_signal();
    c.mu_true = 4.0;  // pushes the latent maximum well past the cap
    c.time_cap = 20.0;
    const auto d = simulate_aft(c);
    EXPECT_GT(d.times().minCoeff(), 0.0);
    EXPECT_LE(d.times().maxCoeff(), 20.0);

    // Without censoring the largest time sits exactly on the cap.
    c.target_censoring = 0.0;
    EXPECT_DOUBLE_EQ(simulate_aft(c).times().maxCoeff(), 20.0);
}

TEST(SimulateAft, DeterministicInSeed) {
    auto c = config(Generator::aft_lognormal, 300, 40, 0.5, 5);
    c.beta_true = SimConfig::reference_signal();
    const auto a = simulate_aft(c);
    const auto b = simulate_aft(c);
    EXPECT_EQ(a.design(), b.design());
    EXPECT_EQ(a.times(), b.times());
    EXPECT_EQ(a.status(), b.status());
    c.seed = 6;
    EXPECT_NE(simulate_aft(c).times(), a.times());
}

TEST(SimulateAft, RecoversCoefficientsUncensored) {
    auto c = config(Generator::aft_lognormal, 5000, 6, 0.0, 7);
    c.beta_true = SimConfig::reference_signal();
    c.time_cap = 1e9;
    const auto d = simulate_aft(c);
    const auto fit = fit_aft_mle(d, ModelSpec{0, 1, 2, 3, 4, 5});
    for (const auto& [j, b] : c.beta_true) EXPECT_NEAR(fit.params.beta[static_cast<Eigen::Index>(j)], b, 0.06);
    EXPECT_NEAR(fit.params.sigma, 1.0, 0.05);
}

TEST(SimulateAft, RejectsBadConfig) {
    auto c = config(Generator::aft_lognormal, 10, 3, 1.0, 1);
    EXPECT_THROW(simulate_aft(c), InvalidArgument);
    c.target_censoring = 0.3;
    c.beta_true = {{3, 1.0}};
    EXPECT_THROW(simulate_aft(c), InvalidArgument);
    c.beta_true.clear();
    c.generator = Generator::cox_ph;
    EXPECT_THROW(simulate_aft(c), InvalidArgument);
    EXPECT_THROW(simulate_coxph(config(Generator::aft_lognormal, 10, 3, 0.3, 1)), InvalidArgument);
}

TEST(SimulateCox, NullSignalIsExponentialWithBaselineMean) {
    const auto c = config(Generator::cox_ph, 10000, 2, 0.0, 8);
    const auto d = simulate_coxph(c);
    EXPECT_NEAR(d.times().mean(), 1.0 / cox_baseline_hazard(c), 0.05 / cox_baseline_hazard(c));
    EXPECT_NEAR(median({d.times().begin(), d.times().end()}), c.time_cap / 4.0, 0.1 * c.time_cap / 4.0);
}

TEST(SimulateCox, PositiveCoefficientShortensSurvival) {
    auto c = config(Generator::cox_ph, 10000, 2, 0.0, 9);
    c.beta_true = {{1, 1.0}};
    const auto d = simulate_coxph(c);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d.n()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return d.design()(a, 1) < d.design()(b, 1); });
    const std::size_t decile = order.size() / 10;
    std::vector<double> low, high;
    for (std::size_t i = 0; i < decile; ++i) {
        low.push_back(d.times()[order[i]]);
        high.push_back(d.times()[order[order.size() - 1 - i]]);
    }
    EXPECT_LT(median(high), median(low));
}

TEST(SimulateCox, CensoringRateHitsTarget) {
    auto c = config(Generator::cox_ph, 10000, 6, 0.3, 10);
    c.beta_true = SimConfig::reference_signal();
    EXPECT_NEAR(censored_fraction(simulate_coxph(c)), 0.3, 0.03);
}

TEST(SimulateCox, DispatchAndDeterminism) {
    auto c = config(Generator::cox_ph, 200, 5, 0.3, 11);
    const auto a = simulate(c);
    const auto b = simulate_coxph(c);
    EXPECT_EQ(a.times(), b.times());
    EXPECT_EQ(a.status(), b.status());
}

TEST(Calibration, BisectionMatchesTargetOnLatentSample) {
    std::mt19937_64 rng(12);
    std::lognormal_distribution<double> ln(0.0, 1.5);
    Eigen::VectorXd t(777);
    for (auto& v : t) v = ln(rng);
    for (double target : {0.01, 0.1, 0.3, 0.5, 0.9, 0.99}) {
        const double c_max = detail::calibrate_censoring_bound(t, target);
        EXPECT_LT(std::abs(detail::expected_censored_fraction(t, c_max) - target), 0.01) << target;
    }
}

TEST(Seeds, MixSeedSpreadsNeighbours) {
    EXPECT_NE(mix_seed(1), mix_seed(2));
    EXPECT_EQ(mix_seed(42), mix_seed(42));
    EXPECT_NE(mix_seed(0), 0u);
}

TEST(GeneratorNames, RoundTrip) {
    EXPECT_EQ(to_string(Generator::aft_lognormal), "AFT_LOGNORMAL");
    EXPECT_EQ(to_string(Generator::cox_ph), "COX_PH");
    EXPECT_EQ(parse_generator("aft"), Generator::aft_lognormal);
    EXPECT_EQ(parse_generator("COX_PH"), Generator::cox_ph);
    EXPECT_FALSE(parse_generator("weibull").has_value());
}
