#pragma once

// Structured screening: utilities of single covariates, leader choice and
// correlation-based leading sets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "nlpaft/aft.hpp"
#include "nlpaft/dataset.hpp"
#include "nlpaft/errors.hpp"
#include "nlpaft/parallel.hpp"

namespace nlpaft {

enum class UtilityKind { marginal, conditional };

inline std::string_view to_string(UtilityKind k) {
    return k == UtilityKind::marginal ? "marginal" : "conditional";
}

struct UtilityTable {
    UtilityKind kind = UtilityKind::marginal;
    std::map<CovariateIndex, double> scores;
};

struct LeadingSet {
    CovariateIndex leader = 0;
    std::vector<CovariateIndex> members;  // sorted, contains leader
};

namespace detail {

inline double single_covariate_utility(const SurvivalDataset& data, CovariateIndex j,
                                       Eigen::VectorXd offset, const NewtonOptions& options) {
    if (j >= data.p()) {
        throw InvalidArgument("utility: covariate " + std::to_string(j) + " out of range");
    }
    if (data.n() < 3) {
        throw InvalidArgument("utility: need n >= 3 for a one-covariate model");
    }
    const AftProblem problem(data, Eigen::MatrixXd(data.column(j)), std::move(offset));
    return problem.fit(std::nullopt, options, "utility of covariate " + std::to_string(j)).loglik;
}

inline Eigen::VectorXd selected_offset(const SurvivalDataset& data, const ModelSpec& selected,
                                       const AftParams& selected_fit) {
    if (selected.empty()) return {};
    detail::check_params(selected, selected_fit);
    return selected.gather(data) * selected_fit.beta;
}

}  // namespace detail

/// Maximised log-likelihood of the one-covariate model {j}.
inline double marginal_utility(const SurvivalDataset& data, CovariateIndex j, const NewtonOptions& options = {}) {
    return detail::single_covariate_utility(data, j, {}, options);
}

/// Maximised log-likelihood over (mu, beta_j, sigma) with x_sel' beta_sel held
/// fixed as an offset. selected_fit.mu and sigma are not used.
inline double conditional_utility(const SurvivalDataset& data, CovariateIndex j, const ModelSpec& selected,
                                  const AftParams& selected_fit, const NewtonOptions& options = {}) {
    if (selected.contains(j)) {
        throw InvalidArgument("conditional_utility: covariate " + std::to_string(j) + " is already selected");
    }
    return detail::single_covariate_utility(data, j, detail::selected_offset(data, selected, selected_fit),
                                            options);
}

/// Same as conditional_utility with an explicit length-n offset.
inline double conditional_utility_with_offset(const SurvivalDataset& data, CovariateIndex j,
                                              const Eigen::VectorXd& offset, const NewtonOptions& options = {}) {
    if (static_cast<std::size_t>(offset.size()) != data.n()) {
        throw InvalidArgument("conditional_utility_with_offset: offset must have length n");
    }
    return detail::single_covariate_utility(data, j, offset, options);
}

/// Utilities for every covariate in `pool`. Marginal when `selected` is empty,
/// conditional on the selected fit otherwise (unless kind is forced).
inline UtilityTable compute_utilities(const SurvivalDataset& data, std::span<const CovariateIndex> pool,
                                      UtilityKind kind, const ModelSpec& selected, const AftParams& selected_fit,
                                      std::size_t threads = 1, const NewtonOptions& options = {}) {
    const Eigen::VectorXd offset = detail::selected_offset(data, selected, selected_fit);
    std::vector<double> values(pool.size());
    parallel_for(pool.size(), threads, [&](std::size_t i) {
        const CovariateIndex j = pool[i];
        if (selected.contains(j)) {
            throw InvalidArgument("compute_utilities: covariate " + std::to_string(j) + " is already selected");
        }
        try {
            values[i] = detail::single_covariate_utility(data, j, offset, options);
        } catch (...) {
            detail::rethrow_with_context("covariate " + std::to_string(j));
        }
    });
    UtilityTable table;
    table.kind = kind;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        table.scores.emplace(pool[i], values[i]);
    }
    return table;
}

/// Top min(k0, |table|) covariates by score (descending, ties to the smaller index).
inline std::vector<CovariateIndex> pick_leading_variables(const UtilityTable& table, std::size_t k0) {
    std::vector<std::pair<CovariateIndex, double>> entries(table.scores.begin(), table.scores.end());
    const std::size_t take = std::min(k0, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(take), entries.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) return a.second > b.second;
                          return a.first < b.first;
                      });
    std::vector<CovariateIndex> leaders;
    leaders.reserve(take);
    for (std::size_t i = 0; i < take; ++i) leaders.push_back(entries[i].first);
    return leaders;
}

/// Sample Pearson correlation of two design columns.
inline double pearson_correlation(const SurvivalDataset& data, CovariateIndex a, CovariateIndex b) {
    const auto x = data.column(a);
    const auto y = data.column(b);
    const double mx = x.mean();
    const double my = y.mean();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    const double sxx = (x.array() - mx).square().sum();
    const double syy = (y.array() - my).square().sum();
    if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// Disjoint leading sets in leader order. Each set takes every not-yet-assigned
/// pool member with |corr| >= corr_threshold to its leader; a leader already
/// absorbed by an earlier set yields no set of its own.
inline std::vector<LeadingSet> build_leading_sets(const SurvivalDataset& data,
                                                  std::span<const CovariateIndex> leaders,
                                                  std::span<const CovariateIndex> candidate_pool,
                                                  double corr_threshold) {
    if (!(corr_threshold > 0.0) || corr_threshold > 1.0) {
        throw InvalidArgument("build_leading_sets: corr_threshold must lie in (0, 1]");
    }
    std::vector<LeadingSet> sets;
    if (candidate_pool.empty()) return sets;

    std::unordered_set<CovariateIndex> in_pool(candidate_pool.begin(), candidate_pool.end());
    std::unordered_set<CovariateIndex> assigned;
    for (CovariateIndex leader : leaders) {
        if (!in_pool.contains(leader)) {
            throw InvalidArgument("build_leading_sets: leader " + std::to_string(leader) +
                                  " is not in the candidate pool");
        }
        if (assigned.contains(leader)) continue;
        LeadingSet set{leader, {}};
        for (CovariateIndex j : candidate_pool) {
            if (assigned.contains(j)) continue;
            if (j == leader || std::abs(pearson_correlation(data, leader, j)) >= corr_threshold) {
                set.members.push_back(j);
            }
        }
        std::sort(set.members.begin(), set.members.end());
        for (CovariateIndex j : set.members) assigned.insert(j);
        sets.push_back(std::move(set));
    }
    return sets;
}

}  // namespace nlpaft
