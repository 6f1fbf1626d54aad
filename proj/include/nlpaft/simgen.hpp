#pragma once

// Synthetic censored survival data: log-normal AFT and exponential-baseline
// Cox proportional hazards generators with uniform censoring calibrated to a
// target censored fraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string_view>

#include <Eigen/Dense>

#include "nlpaft/dataset.hpp"
#include "nlpaft/errors.hpp"

namespace nlpaft {

enum class Generator { aft_lognormal, cox_ph };

inline std::string_view to_string(Generator g) {
    return g == Generator::aft_lognormal ? "AFT_LOGNORMAL" : "COX_PH";
}

inline std::optional<Generator> parse_generator(std::string_view s) {
    if (s == "aft" || s == "AFT_LOGNORMAL") return Generator::aft_lognormal;
    if (s == "cox" || s == "COX_PH") return Generator::cox_ph;
    return std::nullopt;
}

struct SimConfig {
    std::size_t n = 1000;
    std::size_t p = 10000;
    std::map<CovariateIndex, double> beta_true;
    double mu_true = 0.0;
    double sigma_true = 1.0;
    double target_censoring = 0.5;
    Generator generator = Generator::aft_lognormal;
    double time_cap = 20.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n == 0 || p == 0) throw InvalidArgument("SimConfig: n and p must be positive");
        if (!(target_censoring >= 0.0) || !(target_censoring < 1.0)) {
            throw InvalidArgument("SimConfig: target_censoring must lie in [0, 1)");
        }
        if (!(sigma_true > 0.0)) throw InvalidArgument("SimConfig: sigma_true must be positive");
        if (!(time_cap > 0.0)) throw InvalidArgument("SimConfig: time_cap must be positive");
        for (const auto& [j, b] : beta_true) {
            if (j >= p) throw InvalidArgument("SimConfig: beta_true index " + std::to_string(j) + " >= p");
            if (!std::isfinite(b)) throw InvalidArgument("SimConfig: beta_true values must be finite");
        }
    }

    /// The six-covariate signal used throughout the experiments.
    static std::map<CovariateIndex, double> reference_signal() {
        return {{0, 0.8}, {1, -0.9}, {2, 1.3}, {3, -1.4}, {4, 0.5}, {5, -0.53}};
    }

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// splitmix64 step; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace detail {

inline double open_unit(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double v = u(rng);
    while (v <= 0.0 || v >= 1.0) v = u(rng);
    return v;
}

/// Expected censored fraction under C ~ U(0, c_max): mean_i min(t_i / c_max, 1).
inline double expected_censored_fraction(const Eigen::VectorXd& t, double c_max) {
    return (t.array() / c_max).min(1.0).mean();
}

/// c_max such that the expected censored fraction equals target (bisection on log c_max).
inline double calibrate_censoring_bound(const Eigen::VectorXd& t, double target) {
    double lo = std::log(t.minCoeff());           // fraction is 1 here
    double hi = std::log(2.0 * t.mean() / target);  // fraction <= target / 2 here
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = expected_censored_fraction(t, std::exp(mid));
        if (std::abs(f - target) < 1e-9) return std::exp(mid);
        (f > target ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

inline Eigen::MatrixXd draw_design(std::size_t n, std::size_t p, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = normal(rng);
    }
    return x;
}

inline Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, const std::map<CovariateIndex, double>& beta) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.rows());
    for (const auto& [j, b] : beta) eta += b * x.col(static_cast<Eigen::Index>(j));
    return eta;
}

inline SurvivalDataset censor(Eigen::MatrixXd x, const Eigen::VectorXd& t, double target, std::mt19937_64& rng) {
    const auto n = t.size();
    Eigen::VectorXd y = t;
    Eigen::VectorXi status = Eigen::VectorXi::Ones(n);
    if (target > 0.0) {
        const double c_max = calibrate_censoring_bound(t, target);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double c = c_max * open_unit(rng);
            if (c < t[i]) {
                y[i] = c;
                status[i] = 0;
            }
        }
    }
    return SurvivalDataset(std::move(x), std::move(y), std::move(status));
}

}  // namespace detail

/// log t = mu + x'beta + sigma Z, times scaled down so max t <= time_cap, then
/// uniform censoring.
inline SurvivalDataset simulate_aft(const SimConfig& config) {
    config.validate();
    if (config.generator != Generator::aft_lognormal) {
        throw InvalidArgument("simulate_aft: generator must be AFT_LOGNORMAL");
    }
    std::mt19937_64 rng(config.seed);
    Eigen::MatrixXd x = detail::draw_design(config.n, config.p, rng);
    const Eigen::VectorXd eta = detail::linear_predictor(x, config.beta_true);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd t(eta.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        t[i] = std::exp(config.mu_true + eta[i] + config.sigma_true * normal(rng));
    }
    const double t_max = t.maxCoeff();
    if (t_max > config.time_cap) t *= config.time_cap / t_max;
    return detail::censor(std::move(x), t, config.target_censoring, rng);
}

/// Baseline hazard of the Cox generator: exponential with median time_cap / 4 at x = 0.
inline double cox_baseline_hazard(const SimConfig& config) {
    return 4.0 * std::numbers::ln2 / config.time_cap;
}

/// Exponential-baseline proportional hazards: t = -log U / (lambda0 exp(x'beta)).
inline SurvivalDataset simulate_coxph(const SimConfig& config) {
    config.validate();
    if (config.generator != Generator::cox_ph) {
        throw InvalidArgument("simulate_coxph: generator must be COX_PH");
    }
    std::mt19937_64 rng(config.seed);
    Eigen::MatrixXd x = detail::draw_design(config.n, config.p, rng);
    const Eigen::VectorXd eta = detail::linear_predictor(x, config.beta_true);
    const double lambda0 = cox_baseline_hazard(config);
    Eigen::VectorXd t(eta.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        t[i] = -std::log(detail::open_unit(rng)) / (lambda0 * std::exp(eta[i]));
    }
    return detail::censor(std::move(x), t, config.target_censoring, rng);
}

inline SurvivalDataset simulate(const SimConfig& config) {
    return config.generator == Generator::aft_lognormal ? simulate_aft(config) : simulate_coxph(config);
}

}  // namespace nlpaft
