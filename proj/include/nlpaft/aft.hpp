#pragma once

// Censored log-normal accelerated failure time model:
//   log t_i = mu + x_i' beta + sigma * Z_i,  Z_i ~ N(0, 1)
// with right censoring. Parameters are optimised on theta = (mu, beta, log sigma).

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "nlpaft/dataset.hpp"
#include "nlpaft/errors.hpp"
#include "nlpaft/newton.hpp"
#include "nlpaft/normal.hpp"

namespace nlpaft {

struct AftParams {
    double mu = 0.0;
    Eigen::VectorXd beta;
    double sigma = 1.0;

    /// Packs into (mu, beta..., log sigma).
    Eigen::VectorXd to_theta() const {
        Eigen::VectorXd theta(beta.size() + 2);
        theta[0] = mu;
        theta.segment(1, beta.size()) = beta;
        theta[beta.size() + 1] = std::log(sigma);
        return theta;
    }

    static AftParams from_theta(const Eigen::VectorXd& theta) {
        const auto k = theta.size() - 2;
        return AftParams{theta[0], theta.segment(1, k), std::exp(theta[k + 1])};
    }
};

struct AftFit {
    AftParams params;
    double loglik = 0.0;
    /// Hessian of the log-likelihood in (mu, beta, log sigma) at the solution.
    Eigen::MatrixXd hessian;
    int iterations = 0;
};

namespace detail {

/// Likelihood of log y on [1, X] plus a fixed offset. Holds references to the
/// dataset's outcome vectors and owns the gathered columns.
class AftProblem {
public:
    AftProblem(const SurvivalDataset& data, Eigen::MatrixXd x, Eigen::VectorXd offset = {})
        : log_y_(data.log_times()), status_(data.status()), x_(std::move(x)), offset_(std::move(offset)) {
        if (offset_.size() != 0 && offset_.size() != log_y_.size()) {
            throw InvalidArgument("AFT offset length must equal n");
        }
    }

    Eigen::Index n() const noexcept { return log_y_.size(); }
    Eigen::Index k() const noexcept { return x_.cols(); }
    Eigen::Index dim() const noexcept { return x_.cols() + 2; }
    const Eigen::MatrixXd& x() const noexcept { return x_; }

    Eigen::VectorXd residuals(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd r = log_y_.array() - theta[0];
        if (k() > 0) {
            r.noalias() -= x_ * theta.segment(1, k());
        }
        if (offset_.size() != 0) {
            r -= offset_;
        }
        return r;
    }

    double loglik(const Eigen::VectorXd& theta) const {
        const double log_sigma = theta[k() + 1];
        const double inv_sigma = std::exp(-log_sigma);
        const Eigen::VectorXd r = residuals(theta);
        double total = 0.0;
        for (Eigen::Index i = 0; i < n(); ++i) {
            const double z = r[i] * inv_sigma;
            if (status_[i] == 1) {
                total += -log_sigma - kLogSqrtTwoPi - 0.5 * z * z;
            } else {
                total += log_survival_unchecked(z);
            }
        }
        return total;
    }

    Derivatives derivatives(const Eigen::VectorXd& theta) const {
        const Eigen::Index kk = k();
        const double log_sigma = theta[kk + 1];
        const double inv_sigma = std::exp(-log_sigma);
        const double inv_sigma2 = inv_sigma * inv_sigma;
        const Eigen::VectorXd r = residuals(theta);

        // Per-row derivatives with respect to the linear predictor eta and s = log sigma.
        Eigen::VectorXd g_eta(n()), h_eta_eta(n()), h_eta_s(n());
        double value = 0.0, g_s = 0.0, h_s_s = 0.0;
        for (Eigen::Index i = 0; i < n(); ++i) {
            const double z = r[i] * inv_sigma;
            if (status_[i] == 1) {
                value += -log_sigma - kLogSqrtTwoPi - 0.5 * z * z;
                g_eta[i] = z * inv_sigma;
                g_s += z * z - 1.0;
                h_eta_eta[i] = -inv_sigma2;
                h_eta_s[i] = -2.0 * z * inv_sigma;
                h_s_s += -2.0 * z * z;
            } else {
                const auto [log_q, lambda] = tail_terms(z);
                value += log_q;
                const double dlambda = lambda * (lambda - z);
                g_eta[i] = lambda * inv_sigma;
                g_s += lambda * z;
                h_eta_eta[i] = -dlambda * inv_sigma2;
                h_eta_s[i] = -(dlambda * z + lambda) * inv_sigma;
                h_s_s += -z * (dlambda * z + lambda);
            }
        }

        Derivatives d;
        d.value = value;
        d.gradient.resize(kk + 2);
        d.gradient[0] = g_eta.sum();
        d.gradient[kk + 1] = g_s;
        d.hessian.resize(kk + 2, kk + 2);
        d.hessian(0, 0) = h_eta_eta.sum();
        d.hessian(0, kk + 1) = d.hessian(kk + 1, 0) = h_eta_s.sum();
        d.hessian(kk + 1, kk + 1) = h_s_s;
        if (kk > 0) {
            d.gradient.segment(1, kk).noalias() = x_.transpose() * g_eta;
            const Eigen::VectorXd xw_mu = x_.transpose() * h_eta_eta;
            const Eigen::VectorXd xw_s = x_.transpose() * h_eta_s;
            d.hessian.block(1, 0, kk, 1) = xw_mu;
            d.hessian.block(0, 1, 1, kk) = xw_mu.transpose();
            d.hessian.block(1, kk + 1, kk, 1) = xw_s;
            d.hessian.block(kk + 1, 1, 1, kk) = xw_s.transpose();
            d.hessian.block(1, 1, kk, kk).noalias() = x_.transpose() * h_eta_eta.asDiagonal() * x_;
        }
        return d;
    }

    /// Least-squares start treating every row as an event; sigma from the
    /// mean squared residual.
    Eigen::VectorXd least_squares_start() const {
        Eigen::VectorXd target = log_y_;
        if (offset_.size() != 0) {
            target -= offset_;
        }
        Eigen::VectorXd theta(dim());
        if (k() == 0) {
            theta[0] = target.mean();
        } else {
            Eigen::MatrixXd a(n(), k() + 1);
            a.col(0).setOnes();
            a.rightCols(k()) = x_;
            const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(target);
            theta.head(k() + 1) = coef;
        }
        theta[k() + 1] = 0.0;
        const double ms = residuals(theta).squaredNorm() / static_cast<double>(n());
        theta[k() + 1] = 0.5 * std::log(std::max(ms, 1e-300));
        return theta;
    }

    AftFit fit(std::optional<Eigen::VectorXd> start, const NewtonOptions& options,
               const std::string& label) const {
        Eigen::VectorXd theta0 = start ? std::move(*start) : least_squares_start();
        auto result = maximize_newton(
            std::move(theta0), [this](const Eigen::VectorXd& t) { return derivatives(t); },
            [this](const Eigen::VectorXd& t) { return loglik(t); }, options, label);
        return AftFit{AftParams::from_theta(result.theta), result.at_solution.value,
                      std::move(result.at_solution.hessian), result.iterations};
    }

private:
    const Eigen::VectorXd& log_y_;
    const Eigen::VectorXi& status_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd offset_;
};

inline void check_params(const ModelSpec& model, const AftParams& params) {
    if (static_cast<std::size_t>(params.beta.size()) != model.size()) {
        throw InvalidArgument("AftParams: beta has length " + std::to_string(params.beta.size()) +
                              " but the model has " + std::to_string(model.size()) + " covariates");
    }
    if (!(params.sigma > 0.0) || !std::isfinite(params.sigma) || !std::isfinite(params.mu) ||
        !params.beta.allFinite()) {
        throw InvalidArgument("AftParams: sigma must be positive and all parameters finite");
    }
}

}  // namespace detail

/// Censored log-normal log-likelihood including all sigma-dependent terms.
inline double aft_loglik(const SurvivalDataset& data, const ModelSpec& model, const AftParams& params) {
    model.validate_against(data);
    detail::check_params(model, params);
    const detail::AftProblem problem(data, model.gather(data));
    return problem.loglik(params.to_theta());
}

/// Value, gradient and Hessian with respect to (mu, beta_1..beta_k, log sigma).
inline Derivatives aft_loglik_derivs(const SurvivalDataset& data, const ModelSpec& model,
                                     const AftParams& params) {
    model.validate_against(data);
    detail::check_params(model, params);
    const detail::AftProblem problem(data, model.gather(data));
    return problem.derivatives(params.to_theta());
}

/// Maximum likelihood fit by safeguarded Newton on (mu, beta, log sigma).
/// Starts from least squares of log y on the model columns when `init` is empty.
inline AftFit fit_aft_mle(const SurvivalDataset& data, const ModelSpec& model,
                          const std::optional<AftParams>& init = std::nullopt,
                          const NewtonOptions& options = {}) {
    model.validate_against(data);
    std::optional<Eigen::VectorXd> start;
    if (init) {
        detail::check_params(model, *init);
        start = init->to_theta();
    }
    const detail::AftProblem problem(data, model.gather(data));
    return problem.fit(std::move(start), options, "fit_aft_mle");
}

}  // namespace nlpaft
