#pragma once

// Product non-local priors on regression coefficients. Each is a product of
// identical one-dimensional densities that vanish at beta_j = 0.
//
//   MOM  (order r):  beta^{2r} N(beta; 0, a) / (a^r (2r-1)!!)
//   iMOM (shape v):  a^{v/2} / Gamma(v/2) |beta|^{-(v+1)} exp(-a / beta^2)
//   eMOM:            e^{sqrt 2} exp(-a / beta^2) N(beta; 0, a)
//
// with a = phi * tau.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "nlpaft/errors.hpp"
#include "nlpaft/normal.hpp"

namespace nlpaft {

enum class PriorFamily { pmom, pimom, pemom };

inline std::string_view to_string(PriorFamily f) {
    switch (f) {
        case PriorFamily::pmom: return "pmom";
        case PriorFamily::pimom: return "pimom";
        case PriorFamily::pemom: return "pemom";
    }
    return "unknown";
}

inline std::optional<PriorFamily> parse_prior_family(std::string_view s) {
    if (s == "pmom") return PriorFamily::pmom;
    if (s == "pimom") return PriorFamily::pimom;
    if (s == "pemom") return PriorFamily::pemom;
    return std::nullopt;
}

struct PriorConfig {
    PriorFamily family = PriorFamily::pemom;
    double tau = 0.01;
    int order_r = 1;      // pMOM only
    double shape_v = 1.0; // piMOM only
    double phi = 1.0;

    double scale() const noexcept { return phi * tau; }

    void validate() const {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("PriorConfig: tau must be positive");
        if (!(phi > 0.0) || !std::isfinite(phi)) throw InvalidArgument("PriorConfig: phi must be positive");
        if (family == PriorFamily::pmom && order_r < 1) {
            throw InvalidArgument("PriorConfig: order_r must be >= 1 for pmom");
        }
        if (family == PriorFamily::pimom && (!(shape_v >= 1.0) || !std::isfinite(shape_v))) {
            throw InvalidArgument("PriorConfig: shape_v must be >= 1 for pimom");
        }
    }

    friend bool operator==(const PriorConfig&, const PriorConfig&) = default;
};

namespace detail {

/// Log normalising term of one coordinate (everything not depending on beta).
inline double log_prior_constant(const PriorConfig& c) {
    const double a = c.scale();
    switch (c.family) {
        case PriorFamily::pmom: {
            double log_double_factorial = 0.0;
            for (int l = 1; l <= c.order_r; ++l) log_double_factorial += std::log(2.0 * l - 1.0);
            return -(0.5 + c.order_r) * std::log(a) - kLogSqrtTwoPi - log_double_factorial;
        }
        case PriorFamily::pimom:
            return 0.5 * c.shape_v * std::log(a) - std::lgamma(0.5 * c.shape_v);
        case PriorFamily::pemom:
            return std::numbers::sqrt2 - 0.5 * std::log(2.0 * std::numbers::pi * a);
    }
    return 0.0;
}

inline double log_prior_kernel(double b, const PriorConfig& c) {
    const double a = c.scale();
    const double b2 = b * b;
    switch (c.family) {
        case PriorFamily::pmom: return 2.0 * c.order_r * std::log(std::abs(b)) - b2 / (2.0 * a);
        case PriorFamily::pimom: return -(c.shape_v + 1.0) * std::log(std::abs(b)) - a / b2;
        case PriorFamily::pemom: return -a / b2 - b2 / (2.0 * a);
    }
    return 0.0;
}

inline double log_prior_grad1(double b, const PriorConfig& c) {
    const double a = c.scale();
    switch (c.family) {
        case PriorFamily::pmom: return 2.0 * c.order_r / b - b / a;
        case PriorFamily::pimom: return -(c.shape_v + 1.0) / b + 2.0 * a / (b * b * b);
        case PriorFamily::pemom: return 2.0 * a / (b * b * b) - b / a;
    }
    return 0.0;
}

inline double log_prior_hess1(double b, const PriorConfig& c) {
    const double a = c.scale();
    const double b2 = b * b;
    switch (c.family) {
        case PriorFamily::pmom: return -2.0 * c.order_r / b2 - 1.0 / a;
        case PriorFamily::pimom: return (c.shape_v + 1.0) / b2 - 6.0 * a / (b2 * b2);
        case PriorFamily::pemom: return -6.0 * a / (b2 * b2) - 1.0 / a;
    }
    return 0.0;
}

}  // namespace detail

/// Log of the normalised product density. -inf if any coordinate is exactly 0.
inline double log_nlp_density(const Eigen::Ref<const Eigen::VectorXd>& beta, const PriorConfig& config) {
    config.validate();
    if (beta.size() == 0) {
        throw InvalidArgument("log_nlp_density: beta must be non-empty");
    }
    if (!beta.allFinite()) {
        throw InvalidArgument("log_nlp_density: beta has non-finite entries");
    }
    double total = static_cast<double>(beta.size()) * detail::log_prior_constant(config);
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta[j] == 0.0) {
            return -std::numeric_limits<double>::infinity();
        }
        total += detail::log_prior_kernel(beta[j], config);
    }
    return total;
}

/// Gradient of log_nlp_density. Undefined (DomainError) at any beta_j = 0.
inline Eigen::VectorXd log_nlp_grad(const Eigen::Ref<const Eigen::VectorXd>& beta, const PriorConfig& config) {
    config.validate();
    Eigen::VectorXd g(beta.size());
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta[j] == 0.0) {
            throw DomainError("log_nlp_grad: beta[" + std::to_string(j) + "] is zero");
        }
        g[j] = detail::log_prior_grad1(beta[j], config);
    }
    return g;
}

/// Diagonal of the Hessian of log_nlp_density (the density is a product, so the
/// Hessian is diagonal).
inline Eigen::VectorXd log_nlp_hess_diag(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                         const PriorConfig& config) {
    config.validate();
    Eigen::VectorXd h(beta.size());
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta[j] == 0.0) {
            throw DomainError("log_nlp_hess_diag: beta[" + std::to_string(j) + "] is zero");
        }
        h[j] = detail::log_prior_hess1(beta[j], config);
    }
    return h;
}

}  // namespace nlpaft
