#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "nlpaft/aft.hpp"
#include "nlpaft/simgen.hpp"
#include "oracles.hpp"
#include "test_data.hpp"

using namespace nlpaft;
using testdata::vec;

namespace {

SurvivalDataset make(std::vector<std::vector<double>> rows, std::vector<double> y, std::vector<int> status) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
    return SurvivalDataset(x, Eigen::Map<Eigen::VectorXd>(y.data(), y.size()),
                           Eigen::Map<Eigen::VectorXi>(status.data(), status.size()));
}

}  // namespace

TEST(AftLoglik, UncensoredEqualsGaussianLogDensity) {
    const auto data = testdata::random_aft(30, vec({0.5, -1.0}), 0.0, 11);
    const AftParams params{0.1, vec({0.4, -0.8}), 0.7};
    const double got = aft_loglik(data, ModelSpec{0, 1}, params);
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 30; ++i) {
        const double mean = 0.1 + data.design().row(i).dot(params.beta);
        const double r = data.log_times()[i] - mean;
        expected += -0.5 * std::log(2 * std::numbers::pi * 0.49) - r * r / (2 * 0.49);
    }
    EXPECT_NEAR(got, expected, 1e-10);
}

TEST(AftLoglik, SingleCensoredPointAtMedian) {
    // Datasets must hold an event, so pair the censored row with an event row whose
    // contribution at z = 0 is -log sqrt(2 pi); the censored row then adds log(0.5).
    const double mu = 0.37;
    const auto data = make({{0.0}, {0.0}}, {std::exp(mu), std::exp(mu)}, {0, 1});
    const double total = aft_loglik(data, ModelSpec{}, AftParams{mu, Eigen::VectorXd(), 1.0});
    EXPECT_NEAR(total + oracle::log_sqrt_2pi(), std::log(0.5), 1e-15);
}

TEST(AftLoglik, ThreeRowMixedCensoringMatchesHighPrecision) {
    // Reference computed at 50 digits with mpmath.
    const auto data = make({{0.3}, {-1.2}, {0.8}}, {0.5, 2.0, 3.5}, {1, 0, 0});
    const double got = aft_loglik(data, ModelSpec{0}, AftParams{0.2, vec({0.7}), 0.9});
    EXPECT_NEAR(got, -5.4655206828288793831, 1e-13);
    const double direct = oracle::censored_lognormal_loglik({0.5, 2.0, 3.5}, {1, 0, 0},
                                                            {0.2 + 0.3 * 0.7, 0.2 - 1.2 * 0.7, 0.2 + 0.8 * 0.7}, 0.9);
    EXPECT_NEAR(got, direct, 1e-12);
}

TEST(AftLoglik, RejectsDimensionMismatch) {
    const auto data = testdata::random_aft(10, vec({0.5, -1.0}), 0.3, 2);
    EXPECT_THROW(aft_loglik(data, ModelSpec{0, 1}, AftParams{0.0, vec({1.0}), 1.0}), InvalidArgument);
    EXPECT_THROW(aft_loglik_derivs(data, ModelSpec{0}, AftParams{0.0, vec({1.0, 2.0}), 1.0}), InvalidArgument);
    EXPECT_THROW(aft_loglik(data, ModelSpec{5}, AftParams{0.0, vec({1.0}), 1.0}), InvalidArgument);
    EXPECT_THROW(aft_loglik(data, ModelSpec{0}, AftParams{0.0, vec({1.0}), -1.0}), InvalidArgument);
}

TEST(AftDerivs, MatchFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto data = testdata::random_aft(20, vec({0.8, -0.5}), 0.4, 100 + seed);
        const ModelSpec model{0, 1};
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        const AftParams at{0.3 + 0.3 * nd(rng), vec({0.8 + 0.3 * nd(rng), -0.5 + 0.3 * nd(rng)}),
                           std::exp(-0.2 + 0.3 * nd(rng))};
        const Derivatives d = aft_loglik_derivs(data, model, at);
        auto f = [&](const Eigen::VectorXd& th) { return aft_loglik(data, model, AftParams::from_theta(th)); };
        auto g = [&](const Eigen::VectorXd& th) {
            return aft_loglik_derivs(data, model, AftParams::from_theta(th)).gradient;
        };
        EXPECT_NEAR(d.value, aft_loglik(data, model, at), 1e-12);
        EXPECT_LT(oracle::max_rel_error(d.gradient, oracle::fd_gradient(f, at.to_theta())), 1e-5) << seed;
        EXPECT_LT(oracle::max_rel_error(d.hessian, oracle::fd_jacobian(g, at.to_theta())), 1e-4) << seed;
        EXPECT_LT((d.hessian - d.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(AftDerivs, FiniteInFarTail) {
    // Censored residuals far beyond the erfc range still give finite derivatives.
    const auto data = make({{0.0}, {1.0}, {-1.0}}, {1.0, 1e20, 2.0}, {1, 0, 1});
    const Derivatives d = aft_loglik_derivs(data, ModelSpec{0}, AftParams{0.0, vec({0.0}), 0.5});
    EXPECT_TRUE(std::isfinite(d.value));
    EXPECT_TRUE(d.gradient.allFinite());
    EXPECT_TRUE(d.hessian.allFinite());
}

TEST(AftDerivs, StationaryAtLeastSquaresOptimumWhenUncensored) {
    const auto data = testdata::random_aft(40, vec({1.0, -0.3}), 0.0, 5);
    const auto ls = oracle::ols(data.design(), data.log_times());
    const AftParams at{ls.intercept, ls.slopes, std::sqrt(ls.mean_sq_residual)};
    const Derivatives d = aft_loglik_derivs(data, ModelSpec{0, 1}, at);
    EXPECT_LT(d.gradient.head(3).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(d.gradient[3], 0.0, 1e-8);
}

TEST(AftFit, UncensoredMatchesLeastSquares) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto data = testdata::random_aft(50, vec({0.7, -1.1, 0.2}), 0.0, 300 + seed);
        const auto fit = fit_aft_mle(data, ModelSpec{0, 1, 2});
        const auto ls = oracle::ols(data.design(), data.log_times());
        EXPECT_NEAR(fit.params.mu, ls.intercept, 1e-8);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(fit.params.beta[j], ls.slopes[j], 1e-8);
        EXPECT_NEAR(fit.params.sigma * fit.params.sigma, ls.mean_sq_residual, 1e-8);
    }
}

TEST(AftFit, EmptyModelUncensoredGivesMeanAndSd) {
    const auto data = testdata::random_aft(60, vec({0.5}), 0.0, 9);
    const auto fit = fit_aft_mle(data, ModelSpec{});
    const double mean = data.log_times().mean();
    const double sd = std::sqrt((data.log_times().array() - mean).square().mean());
    EXPECT_NEAR(fit.params.mu, mean, 1e-10);
    EXPECT_NEAR(fit.params.sigma, sd, 1e-10);
    EXPECT_EQ(fit.params.beta.size(), 0);
}

TEST(AftFit, GradientSmallAtSolutionWithCensoring) {
    const auto data = testdata::random_aft(80, vec({0.9, -0.4}), 0.5, 21);
    const auto fit = fit_aft_mle(data, ModelSpec{0, 1});
    const auto d = aft_loglik_derivs(data, ModelSpec{0, 1}, fit.params);
    EXPECT_LT(d.gradient.norm(), 1e-6);
    EXPECT_NEAR(d.value, fit.loglik, 1e-12);
}

TEST(AftFit, ConsistentUnderHalfCensoring) {
    SimConfig sim;
    sim.n = 200;
    sim.p = 1;
    sim.beta_true = {{0, 1.3}};
    sim.target_censoring = 0.5;
    int covered = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        sim.seed = seed;
        const auto data = simulate_aft(sim);
        const auto fit = fit_aft_mle(data, ModelSpec{0});
        const Eigen::MatrixXd cov = (-fit.hessian).inverse();
        const double se = std::sqrt(cov(1, 1));
        covered += std::abs(fit.params.beta[0] - 1.3) < 3.0 * se ? 1 : 0;
    }
    // Each replication is within 3 SE with probability ~0.997.
    EXPECT_GE(covered, 19);
}

TEST(AftFit, IterationCapRaisesConvergenceErrorWithLastIterate) {
    const auto data = testdata::random_aft(80, vec({0.9}), 0.5, 4);
    NewtonOptions opts;
    opts.max_iter = 1;
    opts.grad_tol = 1e-14;
    try {
        fit_aft_mle(data, ModelSpec{0}, AftParams{5.0, vec({-3.0}), 10.0}, opts);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.last_iterate().size(), 3);
        EXPECT_GT(e.grad_norm(), 0.0);
    }
}

TEST(AftFit, AllCensoredIsRejected) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 1);
    EXPECT_THROW(SurvivalDataset(x, Eigen::VectorXd::Ones(5), Eigen::VectorXi::Zero(5)), InvalidArgument);
}

TEST(AftProperties, CoerciveInLogSigma) {
    const auto data = testdata::random_aft(30, vec({0.6}), 0.4, 31);
    const ModelSpec model{0};
    const double mid = aft_loglik(data, model, AftParams{0.3, vec({0.6}), 1.0});
    EXPECT_LT(aft_loglik(data, model, AftParams{0.3, vec({0.6}), 1e-3}), mid);
    EXPECT_LT(aft_loglik(data, model, AftParams{0.3, vec({0.6}), 1e3}), mid);
    double prev = aft_loglik(data, model, AftParams{0.3, vec({0.6}), 1e2});
    for (double s : {1e3, 1e4, 1e5}) {
        const double v = aft_loglik(data, model, AftParams{0.3, vec({0.6}), s});
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(AftProperties, TranslationEquivariance) {
    const auto data = testdata::random_aft(25, vec({0.6, 0.2}), 0.4, 41);
    const double c = 1.75;
    const SurvivalDataset shifted(data.design(), (data.times().array() * std::exp(c)).matrix(), data.status());
    const ModelSpec model{0, 1};
    const AftParams at{0.1, vec({0.5, 0.3}), 0.8};
    const AftParams at_shift{0.1 + c, vec({0.5, 0.3}), 0.8};
    EXPECT_NEAR(aft_loglik(data, model, at), aft_loglik(shifted, model, at_shift), 1e-10);
}

TEST(AftProperties, ColumnScalingEquivarianceOfMle) {
    const auto data = testdata::random_aft(60, vec({0.6, -0.4}), 0.4, 51);
    Eigen::MatrixXd x = data.design();
    const double s = -2.5;
    x.col(1) *= s;
    const SurvivalDataset scaled(x, data.times(), data.status());
    const auto a = fit_aft_mle(data, ModelSpec{0, 1});
    const auto b = fit_aft_mle(scaled, ModelSpec{0, 1});
    EXPECT_NEAR(b.params.beta[1], a.params.beta[1] / s, 1e-8);
    EXPECT_NEAR(b.params.beta[0], a.params.beta[0], 1e-8);
    EXPECT_NEAR(b.loglik, a.loglik, 1e-8);
}

TEST(Dataset, ValidatesInvariants) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 2);
    EXPECT_THROW(SurvivalDataset(x, testdata::vec({1.0, 0.0, 2.0}), Eigen::VectorXi::Ones(3)), InvalidArgument);
    Eigen::VectorXi bad(3);
    bad << 1, 2, 0;
    EXPECT_THROW(SurvivalDataset(x, Eigen::VectorXd::Ones(3), bad), InvalidArgument);
    EXPECT_THROW(SurvivalDataset(x, Eigen::VectorXd::Ones(2), Eigen::VectorXi::Ones(3)), InvalidArgument);
    x(0, 0) = std::nan("");
    EXPECT_THROW(SurvivalDataset(x, Eigen::VectorXd::Ones(3), Eigen::VectorXi::Ones(3)), InvalidArgument);
}

TEST(Dataset, StandardizedColumnsHaveZeroMeanUnitSd) {
    const auto data = testdata::random_aft(50, vec({0.6, -0.4, 2.0}), 0.3, 61);
    Eigen::MatrixXd x = data.design();
    x.col(2) = x.col(2) * 7.0 + Eigen::VectorXd::Constant(50, 3.0);
    const auto st = SurvivalDataset(x, data.times(), data.status()).standardized();
    for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_NEAR(st.design().col(j).mean(), 0.0, 1e-12);
        EXPECT_NEAR(st.design().col(j).squaredNorm() / 49.0, 1.0, 1e-12);
    }
    x.col(1).setConstant(4.0);
    EXPECT_THROW(SurvivalDataset(x, data.times(), data.status()).standardized(), InvalidArgument);
}

TEST(ModelSpecTest, SortsAndRejectsDuplicates) {
    const ModelSpec m{4, 1, 3};
    EXPECT_EQ(std::vector<CovariateIndex>(m.begin(), m.end()), (std::vector<CovariateIndex>{1, 3, 4}));
    EXPECT_THROW((ModelSpec{1, 1}), InvalidArgument);
    const auto data = testdata::random_aft(4, vec({0.1, 0.2, 0.3}), 0.0, 1);
    EXPECT_THROW((ModelSpec{0, 1, 2}).validate_against(data), InvalidArgument);  // n_k > n - 2
    EXPECT_NO_THROW((ModelSpec{0, 1}).validate_against(data));
}
