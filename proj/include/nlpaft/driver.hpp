#pragma once

// Iterative screen-and-select loop.

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nlpaft/aft.hpp"
#include "nlpaft/bayes_select.hpp"
#include "nlpaft/dataset.hpp"
#include "nlpaft/errors.hpp"
#include "nlpaft/priors.hpp"
#include "nlpaft/screening.hpp"

namespace nlpaft {

struct TuningParams {
    std::size_t k0 = 1;
    double corr_threshold = 0.2;
    std::size_t m = 50;
    std::size_t maxno = 3;
    std::size_t search_cap = 10;

    void validate() const {
        if (k0 == 0) throw InvalidArgument("TuningParams: k0 must be positive");
        if (!(corr_threshold > 0.0) || corr_threshold > 1.0) {
            throw InvalidArgument("TuningParams: corr_threshold must lie in (0, 1]");
        }
        if (maxno == 0) throw InvalidArgument("TuningParams: maxno must be positive");
        if (search_cap == 0) throw InvalidArgument("TuningParams: search_cap must be positive");
    }

    friend bool operator==(const TuningParams&, const TuningParams&) = default;
};

enum class StopReason { reached_m, maxno_empty, pool_exhausted };

inline std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::reached_m: return "REACHED_M";
        case StopReason::maxno_empty: return "MAXNO_EMPTY";
        case StopReason::pool_exhausted: return "POOL_EXHAUSTED";
    }
    return "UNKNOWN";
}

struct SelectedVariable {
    CovariateIndex index = 0;
    double coefficient = 0.0;
};

struct LeadingSetOutcome {
    LeadingSet set;
    ModelScore winner;
    /// Winner minus the empty model, on the unnormalised log posterior scale.
    double log_posterior_gain_over_empty = 0.0;
    std::size_t models_scored = 0;
    bool exhaustive = true;
};

struct IterationRecord {
    std::size_t iteration = 0;  // 1-based
    UtilityKind kind = UtilityKind::marginal;
    std::size_t pool_size = 0;  // before this iteration
    std::vector<CovariateIndex> leaders;
    std::vector<double> leader_utilities;
    std::vector<LeadingSetOutcome> sets;
    std::vector<CovariateIndex> newly_selected;
    std::vector<CovariateIndex> consumed;  // every leading-set member, sorted
};

struct SelectionResult {
    std::vector<SelectedVariable> selected;  // in selection order
    std::vector<IterationRecord> iterations;
    StopReason stop_reason = StopReason::reached_m;
    /// Joint fit on the final selected set (empty model if nothing was selected).
    AftParams final_fit;
    double final_loglik = 0.0;
};

struct RunOptions {
    std::size_t threads = 1;
    NewtonOptions newton;
};

/// Screen-and-select until |selected| >= m, maxno consecutive iterations
/// select nothing, or the candidate pool is empty.
inline SelectionResult run_selection(const SurvivalDataset& data, const TuningParams& tuning,
                                     const PriorConfig& prior, const RunOptions& options = {}) {
    tuning.validate();
    prior.validate();

    SelectionResult result;
    std::vector<CovariateIndex> selected_order;
    std::vector<CovariateIndex> pool(data.p());
    for (std::size_t j = 0; j < pool.size(); ++j) pool[j] = j;

    std::size_t empty_streak = 0;
    const SearchOptions search{tuning.search_cap, options.threads, options.newton};

    auto joint_fit = [&](const ModelSpec& model) { return fit_aft_mle(data, model, std::nullopt, options.newton); };

    bool stopped = false;
    if (tuning.m == 0) {
        result.stop_reason = StopReason::reached_m;
        stopped = true;
    }
    for (std::size_t iteration = 1; !stopped; ++iteration) {
        if (pool.empty()) {
            result.stop_reason = StopReason::pool_exhausted;
            break;
        }
        try {
            IterationRecord record;
            record.iteration = iteration;
            record.pool_size = pool.size();
            record.kind = iteration == 1 ? UtilityKind::marginal : UtilityKind::conditional;

            const ModelSpec selected{selected_order};
            AftParams selected_fit;
            if (record.kind == UtilityKind::conditional && !selected.empty()) {
                selected_fit = joint_fit(selected).params;
            }
            const UtilityTable table =
                compute_utilities(data, pool, record.kind, selected, selected_fit, options.threads, options.newton);

            record.leaders = pick_leading_variables(table, tuning.k0);
            for (CovariateIndex j : record.leaders) record.leader_utilities.push_back(table.scores.at(j));

            const auto sets = build_leading_sets(data, record.leaders, pool, tuning.corr_threshold);
            for (const auto& set : sets) {
                SearchResult found;
                try {
                    found = select_best_model(data, set.members, prior, search);
                } catch (...) {
                    detail::rethrow_with_context("leading set of covariate " + std::to_string(set.leader));
                }
                LeadingSetOutcome outcome;
                outcome.set = set;
                outcome.winner = found.best;
                outcome.models_scored = found.all_scored.size();
                outcome.exhaustive = found.exhaustive;
                for (const auto& s : found.all_scored) {
                    if (s.model.empty()) {
                        outcome.log_posterior_gain_over_empty =
                            found.best.log_posterior_unnorm - s.log_posterior_unnorm;
                    }
                }
                for (CovariateIndex j : found.best.model) {
                    record.newly_selected.push_back(j);
                    selected_order.push_back(j);
                }
                record.consumed.insert(record.consumed.end(), set.members.begin(), set.members.end());
                record.sets.push_back(std::move(outcome));
            }
            std::sort(record.consumed.begin(), record.consumed.end());

            std::vector<CovariateIndex> remaining;
            remaining.reserve(pool.size());
            std::set_difference(pool.begin(), pool.end(), record.consumed.begin(), record.consumed.end(),
                                std::back_inserter(remaining));
            pool = std::move(remaining);

            empty_streak = record.newly_selected.empty() ? empty_streak + 1 : 0;
            result.iterations.push_back(std::move(record));
        } catch (...) {
            detail::rethrow_with_context("iteration " + std::to_string(iteration));
        }

        if (selected_order.size() >= tuning.m) {
            result.stop_reason = StopReason::reached_m;
            stopped = true;
        } else if (empty_streak >= tuning.maxno) {
            result.stop_reason = StopReason::maxno_empty;
            stopped = true;
        } else if (pool.empty()) {
            result.stop_reason = StopReason::pool_exhausted;
            stopped = true;
        }
    }

    const ModelSpec final_model{selected_order};
    AftFit final_fit;
    try {
        final_fit = joint_fit(final_model);
    } catch (...) {
        detail::rethrow_with_context("final refit");
    }
    for (CovariateIndex j : selected_order) {
        const auto pos = std::lower_bound(final_model.begin(), final_model.end(), j) - final_model.begin();
        result.selected.push_back({j, final_fit.params.beta[pos]});
    }
    result.final_fit = std::move(final_fit.params);
    result.final_loglik = final_fit.loglik;
    return result;
}

}  // namespace nlpaft
