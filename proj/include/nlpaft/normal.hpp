#pragma once

// Standard normal tail quantities on the log scale.

#include <cmath>
#include <numbers>
#include <string>

#include "nlpaft/errors.hpp"

namespace nlpaft {

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178032973640562;

namespace detail {

// Above this point erfc is replaced by the asymptotic expansion of the Mills ratio.
inline constexpr double kTailSwitch = 26.0;

// log Q(z) for z >= kTailSwitch:
//   Q(z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)
// Truncated after 10 terms; the remainder is below 1e-17 relative at z = 26.
inline double log_tail_asymptotic(double z) {
    const double inv_z2 = 1.0 / (z * z);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 10; ++k) {
        term *= -(2.0 * k - 1.0) * inv_z2;
        sum += term;
    }
    return -0.5 * z * z - kLogSqrtTwoPi - std::log(z) + std::log(sum);
}

inline double log_survival_unchecked(double z) {
    if (z < 0.0) {
        return std::log1p(-0.5 * std::erfc(-z / std::numbers::sqrt2));
    }
    if (z < kTailSwitch) {
        return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
    }
    return log_tail_asymptotic(z);
}

}  // namespace detail

inline double log_normal_pdf(double z) { return -0.5 * z * z - kLogSqrtTwoPi; }

/// log(1 - Phi(z)) without forming 1 - Phi(z) by subtraction.
/// Finite and strictly negative for every finite z.
inline double log_survival_std(double z) {
    if (!std::isfinite(z)) {
        throw InvalidArgument("log_survival_std: argument must be finite, got " + std::to_string(z));
    }
    return detail::log_survival_unchecked(z);
}

/// Inverse Mills ratio phi(z) / (1 - Phi(z)), the hazard of the standard normal.
inline double inverse_mills_ratio(double z) {
    if (z < detail::kTailSwitch) {
        return std::exp(log_normal_pdf(z) - detail::log_survival_unchecked(z));
    }
    // z / (series) form avoids exp of a difference of two large numbers.
    const double inv_z2 = 1.0 / (z * z);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 10; ++k) {
        term *= -(2.0 * k - 1.0) * inv_z2;
        sum += term;
    }
    return z / sum;
}

namespace detail {

struct TailTerms {
    double log_survival;
    double mills;
};

/// log(1 - Phi(z)) and the inverse Mills ratio from a single erfc evaluation.
inline TailTerms tail_terms(double z) {
    if (z < kTailSwitch) {
        const double pdf = std::exp(log_normal_pdf(z));
        if (z < 0.0) {
            const double lower = 0.5 * std::erfc(-z / std::numbers::sqrt2);
            return {std::log1p(-lower), pdf / (1.0 - lower)};
        }
        const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
        return {std::log(q), pdf / q};
    }
    return {log_tail_asymptotic(z), inverse_mills_ratio(z)};
}

}  // namespace detail
}  // namespace nlpaft
