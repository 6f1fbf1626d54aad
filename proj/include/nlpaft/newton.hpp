#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "nlpaft/errors.hpp"

namespace nlpaft {

struct NewtonOptions {
    double grad_tol = 1e-6;
    int max_iter = 100;
    int max_halvings = 30;
};

/// Value, gradient and Hessian of an objective at one point.
struct Derivatives {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

struct NewtonResult {
    Eigen::VectorXd theta;
    Derivatives at_solution;
    int iterations = 0;
};

/// Safeguarded Newton ascent.
///
/// Takes the Newton direction when -H is positive definite and a gradient step
/// otherwise, halving the step until the objective does not decrease. Stops when
/// the gradient norm drops below options.grad_tol. `derivs(theta)` returns a
/// Derivatives; `value(theta)` returns the objective only (may be -inf outside
/// the support).
template <class DerivsFn, class ValueFn>
NewtonResult maximize_newton(Eigen::VectorXd theta, DerivsFn&& derivs, ValueFn&& value,
                             const NewtonOptions& options, const std::string& label) {
    Derivatives d = derivs(theta);
    if (!std::isfinite(d.value)) {
        throw NumericalError(label + ": objective is not finite at the starting point");
    }
    for (int iter = 0; iter <= options.max_iter; ++iter) {
        const double gnorm = d.gradient.norm();
        if (!std::isfinite(gnorm)) {
            throw NumericalError(label + ": gradient is not finite");
        }
        if (gnorm < options.grad_tol) {
            return NewtonResult{std::move(theta), std::move(d), iter};
        }
        if (iter == options.max_iter) {
            break;
        }

        Eigen::VectorXd direction;
        Eigen::LLT<Eigen::MatrixXd> llt(-d.hessian);
        if (llt.info() == Eigen::Success) {
            direction = llt.solve(d.gradient);
        }
        if (direction.size() == 0 || !direction.allFinite()) {
            direction = d.gradient / std::max(1.0, gnorm);
        }

        // Allow rounding-level decreases so the final quadratic steps are not rejected.
        const double slack = 1e-12 * (1.0 + std::abs(d.value));
        // The full step usually succeeds, so evaluate all derivatives there directly.
        Eigen::VectorXd candidate = theta + direction;
        Derivatives full = derivs(candidate);
        if (std::isfinite(full.value) && full.value >= d.value - slack && full.gradient.allFinite()) {
            theta = std::move(candidate);
            d = std::move(full);
            continue;
        }
        double step = 0.5;
        bool accepted = false;
        for (int h = 1; h <= options.max_halvings; ++h) {
            candidate = theta + step * direction;
            const double v = value(candidate);
            if (std::isfinite(v) && v >= d.value - slack) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            throw ConvergenceError(label + ": line search failed to find an ascent step", theta, gnorm);
        }
        theta = std::move(candidate);
        d = derivs(theta);
        if (!std::isfinite(d.value)) {
            throw NumericalError(label + ": objective became non-finite");
        }
    }
    const double gnorm = d.gradient.norm();
    throw ConvergenceError(label + ": no convergence after " + std::to_string(options.max_iter) +
                               " iterations (gradient norm " + std::to_string(gnorm) + ")",
                           theta, gnorm);
}

}  // namespace nlpaft
