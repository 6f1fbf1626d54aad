#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlpaft/driver.hpp"
#include "nlpaft/errors.hpp"
#include "nlpaft/parallel.hpp"
#include "nlpaft/priors.hpp"
#include "nlpaft/simgen.hpp"

namespace nlpaft {

struct TprFdr {
    double tpr = 0.0;
    double fdr = 0.0;
};

/// tpr = |S n T| / |T|, fdr = |S \ T| / |S| (0 for an empty selection).
inline TprFdr compute_tpr_fdr(std::span<const CovariateIndex> selected, std::span<const CovariateIndex> truth) {
    if (truth.empty()) {
        throw InvalidArgument("compute_tpr_fdr: truth set must be non-empty");
    }
    const std::set<CovariateIndex> s(selected.begin(), selected.end());
    const std::set<CovariateIndex> t(truth.begin(), truth.end());
    std::size_t hits = 0;
    for (CovariateIndex j : s) hits += t.contains(j) ? 1 : 0;
    TprFdr out;
    out.tpr = static_cast<double>(hits) / static_cast<double>(t.size());
    out.fdr = s.empty() ? 0.0 : static_cast<double>(s.size() - hits) / static_cast<double>(s.size());
    return out;
}

struct ReplicationRow {
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double tpr = 0.0;
    double fdr = 0.0;
    std::size_t n_selected = 0;
    std::vector<CovariateIndex> selected;
    std::string stop_reason;
    std::size_t iterations = 0;

    friend bool operator==(const ReplicationRow&, const ReplicationRow&) = default;
};

struct MethodSummary {
    std::string label;
    PriorConfig prior;
    std::size_t replications = 0;
    std::size_t failures = 0;
    double tpr_mean = 0.0;
    double fdr_mean = 0.0;
    double n_selected_mean = 0.0;
    std::vector<ReplicationRow> rows;

    friend bool operator==(const MethodSummary&, const MethodSummary&) = default;
};

struct BenchmarkReport {
    SimConfig sim;
    TuningParams tuning;
    std::size_t replications = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<MethodSummary> methods;

    friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

inline std::string method_label(const PriorConfig& prior) {
    std::string label(to_string(prior.family));
    auto fmt = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    label += "(tau=" + fmt(prior.tau) + ",phi=" + fmt(prior.phi);
    if (prior.family == PriorFamily::pmom) label += ",r=" + std::to_string(prior.order_r);
    if (prior.family == PriorFamily::pimom) label += ",v=" + fmt(prior.shape_v);
    return label + ")";
}

/// Child seed of replication `rep` under a campaign seed.
inline std::uint64_t replication_seed(std::uint64_t base, std::size_t rep) {
    return mix_seed(mix_seed(base) ^ static_cast<std::uint64_t>(rep));
}

/// Means over successful rows.
inline void summarize(MethodSummary& method) {
    method.replications = method.rows.size();
    method.failures = 0;
    double tpr = 0.0, fdr = 0.0, nsel = 0.0;
    for (const auto& row : method.rows) {
        if (!row.ok) {
            ++method.failures;
            continue;
        }
        tpr += row.tpr;
        fdr += row.fdr;
        nsel += static_cast<double>(row.n_selected);
    }
    const auto ok = static_cast<double>(method.replications - method.failures);
    method.tpr_mean = ok > 0 ? tpr / ok : 0.0;
    method.fdr_mean = ok > 0 ? fdr / ok : 0.0;
    method.n_selected_mean = ok > 0 ? nsel / ok : 0.0;
}

/// Simulates `replications` datasets from `sim` (child seeds derived from
/// sim.seed), standardizes each, runs the selection once per prior on the same
/// data and scores against the support of sim.beta_true.
inline BenchmarkReport run_benchmark(const SimConfig& sim, const TuningParams& tuning,
                                     const std::vector<PriorConfig>& priors, std::size_t replications,
                                     const RunOptions& options = {}) {
    sim.validate();
    tuning.validate();
    if (replications == 0) throw InvalidArgument("run_benchmark: replications must be >= 1");
    if (priors.empty()) throw InvalidArgument("run_benchmark: at least one prior is required");
    for (const auto& prior : priors) prior.validate();

    std::vector<CovariateIndex> truth;
    for (const auto& [j, b] : sim.beta_true) {
        if (b != 0.0) truth.push_back(j);
    }
    if (truth.empty()) throw InvalidArgument("run_benchmark: beta_true has no non-zero coefficient");

    BenchmarkReport report;
    report.sim = sim;
    report.tuning = tuning;
    report.replications = replications;
    for (std::size_t rep = 0; rep < replications; ++rep) report.seeds.push_back(replication_seed(sim.seed, rep));

    // rows[rep][prior]
    std::vector<std::vector<ReplicationRow>> rows(replications, std::vector<ReplicationRow>(priors.size()));
    RunOptions inner = options;
    inner.threads = 1;
    parallel_for(replications, options.threads, [&](std::size_t rep) {
        SimConfig child = sim;
        child.seed = report.seeds[rep];
        for (std::size_t k = 0; k < priors.size(); ++k) {
            rows[rep][k].replication = rep;
            rows[rep][k].seed = child.seed;
        }
        std::optional<SurvivalDataset> data;
        try {
            data.emplace(simulate(child).standardized());
        } catch (const std::exception& e) {
            for (auto& row : rows[rep]) {
                row.ok = false;
                row.error = std::string("simulation: ") + e.what();
            }
            return;
        }
        for (std::size_t k = 0; k < priors.size(); ++k) {
            ReplicationRow& row = rows[rep][k];
            try {
                const SelectionResult result = run_selection(*data, tuning, priors[k], inner);
                for (const auto& v : result.selected) row.selected.push_back(v.index);
                const TprFdr score = compute_tpr_fdr(row.selected, truth);
                row.tpr = score.tpr;
                row.fdr = score.fdr;
                row.n_selected = row.selected.size();
                row.stop_reason = std::string(to_string(result.stop_reason));
                row.iterations = result.iterations.size();
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    });

    for (std::size_t k = 0; k < priors.size(); ++k) {
        MethodSummary method;
        method.label = method_label(priors[k]);
        method.prior = priors[k];
        for (std::size_t rep = 0; rep < replications; ++rep) method.rows.push_back(std::move(rows[rep][k]));
        summarize(method);
        report.methods.push_back(std::move(method));
    }
    return report;
}

}  // namespace nlpaft
