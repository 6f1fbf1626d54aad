#pragma once

// Laplace-approximated marginal likelihoods under non-local coefficient priors,
// the beta-binomial model-space prior, and MAP model search within a small
// candidate set.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlpaft/aft.hpp"
#include "nlpaft/dataset.hpp"
#include "nlpaft/errors.hpp"
#include "nlpaft/newton.hpp"
#include "nlpaft/parallel.hpp"
#include "nlpaft/priors.hpp"

namespace nlpaft {

struct ModelScore {
    ModelSpec model;
    double log_marginal = 0.0;
    double log_prior = 0.0;
    double log_posterior_unnorm = 0.0;
    AftParams map_params;
};

/// Total order used for every argmax: higher posterior, then fewer covariates,
/// then lexicographically smaller index sequence.
inline bool ranks_higher(const ModelScore& a, const ModelScore& b) {
    if (a.log_posterior_unnorm != b.log_posterior_unnorm) {
        return a.log_posterior_unnorm > b.log_posterior_unnorm;
    }
    if (a.model.size() != b.model.size()) {
        return a.model.size() < b.model.size();
    }
    return a.model < b.model;
}

inline std::string describe(const ModelSpec& model) {
    std::ostringstream out;
    out << '{';
    for (std::size_t k = 0; k < model.size(); ++k) {
        out << (k ? "," : "") << model[k];
    }
    out << '}';
    return out.str();
}

/// log B(n_k + 1, p_s - n_k + 1): the beta-binomial model prior with the
/// inclusion probability integrated out under a beta(1, 1).
inline double log_model_prior(std::size_t n_k, std::size_t p_s) {
    if (p_s == 0) {
        throw InvalidArgument("log_model_prior: p_s must be positive");
    }
    if (n_k > p_s) {
        throw InvalidArgument("log_model_prior: n_k = " + std::to_string(n_k) + " exceeds p_s = " +
                              std::to_string(p_s));
    }
    const double a = static_cast<double>(n_k) + 1.0;
    const double b = static_cast<double>(p_s - n_k) + 1.0;
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

/// Log posterior kernel g(theta) = loglik(theta) + log pi(beta) with flat priors on mu, log sigma.
class PosteriorKernel {
public:
    PosteriorKernel(const AftProblem& problem, const PriorConfig& prior) : problem_(problem), prior_(prior) {}

    double value(const Eigen::VectorXd& theta) const {
        const auto beta = theta.segment(1, problem_.k());
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (beta[j] == 0.0) return -std::numeric_limits<double>::infinity();
        }
        double v = problem_.loglik(theta);
        for (Eigen::Index j = 0; j < beta.size(); ++j) v += log_prior_kernel(beta[j], prior_);
        return v + constant();
    }

    Derivatives derivatives(const Eigen::VectorXd& theta) const {
        Derivatives d = problem_.derivatives(theta);
        d.value += constant();
        for (Eigen::Index j = 0; j < problem_.k(); ++j) {
            const double b = theta[j + 1];
            d.value += log_prior_kernel(b, prior_);
            d.gradient[j + 1] += log_prior_grad1(b, prior_);
            d.hessian(j + 1, j + 1) += log_prior_hess1(b, prior_);
        }
        return d;
    }

private:
    double constant() const { return static_cast<double>(problem_.k()) * log_prior_constant(prior_); }

    const AftProblem& problem_;
    const PriorConfig& prior_;
};

}  // namespace detail

/// Laplace approximation to the integral of L(mu, beta, sigma) pi(beta) over
/// (mu, beta, log sigma), with flat priors on mu and log sigma. The returned
/// score has log_prior = 0; use score_model to add the model-space prior.
inline ModelScore log_marginal_laplace(const SurvivalDataset& data, const ModelSpec& model,
                                       const PriorConfig& config, const NewtonOptions& options = {}) {
    config.validate();
    model.validate_against(data);
    const detail::AftProblem problem(data, model.gather(data));

    const AftFit mle = problem.fit(std::nullopt, options, "laplace: MLE start");
    NewtonResult mode;
    if (model.empty()) {
        mode = NewtonResult{mle.params.to_theta(), {mle.loglik, {}, mle.hessian}, mle.iterations};
    } else {
        Eigen::VectorXd start = mle.params.to_theta();
        const double nudge = 0.01 * std::sqrt(config.scale());
        Eigen::VectorXd lik_grad;
        for (Eigen::Index j = 0; j < problem.k(); ++j) {
            if (start[j + 1] == 0.0) {
                if (lik_grad.size() == 0) lik_grad = problem.derivatives(start).gradient;
                start[j + 1] = lik_grad[j + 1] < 0.0 ? -nudge : nudge;
            }
        }
        const detail::PosteriorKernel kernel(problem, config);
        mode = maximize_newton(
            std::move(start), [&](const Eigen::VectorXd& t) { return kernel.derivatives(t); },
            [&](const Eigen::VectorXd& t) { return kernel.value(t); }, options,
            "laplace: posterior mode of " + describe(model));
    }

    Eigen::LLT<Eigen::MatrixXd> llt(-mode.at_solution.hessian);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("laplace: negative Hessian is not positive definite at the mode of " +
                             describe(model));
    }
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double dim = static_cast<double>(problem.dim());

    ModelScore score;
    score.model = model;
    score.log_marginal =
        mode.at_solution.value + 0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
    score.log_prior = 0.0;
    score.log_posterior_unnorm = score.log_marginal;
    score.map_params = AftParams::from_theta(mode.theta);
    return score;
}

/// Laplace marginal plus the beta-binomial prior for a model drawn from p_s candidates.
inline ModelScore score_model(const SurvivalDataset& data, const ModelSpec& model, std::size_t p_s,
                              const PriorConfig& config, const NewtonOptions& options = {}) {
    ModelScore score = log_marginal_laplace(data, model, config, options);
    score.log_prior = log_model_prior(model.size(), p_s);
    score.log_posterior_unnorm = score.log_marginal + score.log_prior;
    return score;
}

struct SearchOptions {
    std::size_t search_cap = 10;
    std::size_t threads = 1;
    NewtonOptions newton;
};

struct SearchResult {
    ModelScore best;
    /// Every distinct model scored, sorted best first.
    std::vector<ModelScore> all_scored;
    bool exhaustive = false;
};

namespace detail {

inline std::vector<ModelScore> score_models(const SurvivalDataset& data, const std::vector<ModelSpec>& models,
                                            std::size_t p_s, const PriorConfig& config,
                                            const SearchOptions& options) {
    std::vector<ModelScore> scores(models.size());
    parallel_for(models.size(), options.threads, [&](std::size_t i) {
        try {
            scores[i] = score_model(data, models[i], p_s, config, options.newton);
        } catch (...) {
            rethrow_with_context("model " + describe(models[i]));
        }
    });
    return scores;
}

inline SearchResult enumerate_all(const SurvivalDataset& data, std::span<const CovariateIndex> candidates,
                                  const PriorConfig& config, const SearchOptions& options) {
    const std::size_t p_s = candidates.size();
    std::vector<ModelSpec> models;
    models.reserve(std::size_t{1} << p_s);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p_s); ++mask) {
        std::vector<CovariateIndex> idx;
        for (std::size_t b = 0; b < p_s; ++b) {
            if (mask & (std::uint64_t{1} << b)) idx.push_back(candidates[b]);
        }
        models.emplace_back(std::move(idx));
    }
    SearchResult result;
    result.all_scored = score_models(data, models, p_s, config, options);
    std::sort(result.all_scored.begin(), result.all_scored.end(), ranks_higher);
    result.best = result.all_scored.front();
    result.exhaustive = true;
    return result;
}

/// Add/drop hill climbing from the empty model.
inline SearchResult greedy_stepwise(const SurvivalDataset& data, std::span<const CovariateIndex> candidates,
                                    const PriorConfig& config, const SearchOptions& options) {
    const std::size_t p_s = candidates.size();
    std::map<ModelSpec, ModelScore> scored;
    auto score_batch = [&](const std::vector<ModelSpec>& batch) {
        std::vector<ModelSpec> fresh;
        for (const auto& m : batch) {
            if (!scored.contains(m)) fresh.push_back(m);
        }
        auto scores = score_models(data, fresh, p_s, config, options);
        for (auto& s : scores) scored.emplace(s.model, std::move(s));
    };

    ModelSpec current;
    score_batch({current});
    while (true) {
        std::vector<ModelSpec> neighbours;
        for (CovariateIndex j : candidates) {
            std::vector<CovariateIndex> idx(current.begin(), current.end());
            if (current.contains(j)) {
                std::erase(idx, j);
            } else {
                idx.push_back(j);
            }
            neighbours.emplace_back(std::move(idx));
        }
        score_batch(neighbours);
        const ModelScore* best = &scored.at(current);
        for (const auto& m : neighbours) {
            const ModelScore& s = scored.at(m);
            if (ranks_higher(s, *best)) best = &s;
        }
        if (best->model == current) break;
        current = best->model;
    }

    SearchResult result;
    for (auto& [model, s] : scored) result.all_scored.push_back(std::move(s));
    std::sort(result.all_scored.begin(), result.all_scored.end(), ranks_higher);
    result.best = result.all_scored.front();
    result.exhaustive = false;
    return result;
}

}  // namespace detail

/// Highest posterior probability model among subsets of `candidates`.
/// Enumerates all 2^p_s subsets when p_s <= search_cap, otherwise climbs greedily.
/// The empty model is always scored.
inline SearchResult select_best_model(const SurvivalDataset& data, std::span<const CovariateIndex> candidates,
                                      const PriorConfig& config, const SearchOptions& options = {}) {
    if (candidates.empty()) {
        throw InvalidArgument("select_best_model: candidate set is empty");
    }
    if (options.search_cap == 0) {
        throw InvalidArgument("select_best_model: search_cap must be positive");
    }
    const ModelSpec as_set{std::vector<CovariateIndex>(candidates.begin(), candidates.end())};
    if (as_set.indices().back() >= data.p()) {
        throw InvalidArgument("select_best_model: candidate index out of range");
    }
    if (candidates.size() <= options.search_cap && candidates.size() < 63) {
        return detail::enumerate_all(data, as_set.indices(), config, options);
    }
    return detail::greedy_stepwise(data, as_set.indices(), config, options);
}

}  // namespace nlpaft
