#pragma once

// Dataset CSV, JSON reports and key = value configuration files.
//
// CSV layout: header `time,status,<covariate names...>`, one subject per row.
// Covariate indices in reports are 0-based column positions after `status`.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "nlpaft/bench.hpp"
#include "nlpaft/dataset.hpp"
#include "nlpaft/driver.hpp"
#include "nlpaft/errors.hpp"
#include "nlpaft/priors.hpp"
#include "nlpaft/simgen.hpp"

namespace nlpaft {

using json = nlohmann::ordered_json;

struct CsvDataset {
    SurvivalDataset data;
    std::vector<std::string> covariate_names;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Parses the CSV without standardizing the design.
inline CsvDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line).empty()) {
        throw ParseError("csv: missing header row", 0, "");
    }
    const auto header = detail::split_csv_line(line);
    if (header.size() < 3 || detail::trim(header[0]) != "time" || detail::trim(header[1]) != "status") {
        throw ParseError("csv: header must start with time,status and name at least one covariate", 0, "");
    }
    std::vector<std::string> names;
    for (std::size_t c = 2; c < header.size(); ++c) names.emplace_back(detail::trim(header[c]));
    const std::size_t p = names.size();
    auto column_name = [&](std::size_t c) -> std::string {
        return c == 0 ? "time" : c == 1 ? "status" : names[c - 2];
    };

    std::vector<double> times, cells;
    std::vector<int> status;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != p + 2) {
            throw ParseError("csv: row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                 " fields, expected " + std::to_string(p + 2),
                             row, "");
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = 0.0;
            if (!detail::parse_double(fields[c], v) || !std::isfinite(v)) {
                throw ParseError("csv: row " + std::to_string(row) + ", column \"" + column_name(c) +
                                     "\": not a finite number",
                                 row, column_name(c));
            }
            if (c == 0) {
                if (!(v > 0.0)) {
                    throw ParseError("csv: row " + std::to_string(row) + ", column \"time\": time must be positive",
                                     row, "time");
                }
                times.push_back(v);
            } else if (c == 1) {
                if (v != 0.0 && v != 1.0) {
                    throw ParseError("csv: row " + std::to_string(row) + ", column \"status\": status must be 0 or 1",
                                     row, "status");
                }
                status.push_back(static_cast<int>(v));
            } else {
                cells.push_back(v);
            }
        }
    }
    if (row == 0) throw ParseError("csv: no data rows", 0, "");

    const auto n = static_cast<Eigen::Index>(row);
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = cells[static_cast<std::size_t>(i) * p + j];
    }
    return CsvDataset{SurvivalDataset(std::move(x), Eigen::Map<Eigen::VectorXd>(times.data(), n),
                                      Eigen::Map<Eigen::VectorXi>(status.data(), n)),
                      std::move(names)};
}

inline CsvDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path + " for reading");
    return read_dataset_csv(in);
}

/// Reads and standardizes the design columns.
inline CsvDataset load_dataset_csv(const std::string& path) {
    CsvDataset raw = read_dataset_csv(path);
    return CsvDataset{raw.data.standardized(), std::move(raw.covariate_names)};
}

inline void write_dataset_csv(const SurvivalDataset& data, std::ostream& out) {
    out << "time,status";
    for (std::size_t j = 0; j < data.p(); ++j) out << ",x" << (j + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(data.n()); ++i) {
        out << detail::format_double(data.times()[i]) << ',' << data.status()[i];
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(data.p()); ++j) {
            out << ',' << detail::format_double(data.design()(i, j));
        }
        out << '\n';
    }
}

inline void write_dataset_csv(const SurvivalDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_dataset_csv(data, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// `key = value` lines; `#` starts a comment; blank lines ignored. Order preserved.
inline std::vector<std::pair<std::string, std::string>> parse_key_value_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("config: line " + std::to_string(lineno) + " is not of the form key = value", lineno, "");
        }
        const auto key = detail::trim(body.substr(0, eq));
        const auto value = detail::trim(body.substr(eq + 1));
        if (key.empty()) throw ParseError("config: line " + std::to_string(lineno) + " has an empty key", lineno, "");
        entries.emplace_back(std::string(key), std::string(value));
    }
    return entries;
}

// JSON ----------------------------------------------------------------------

inline void to_json(json& j, const PriorConfig& c) {
    j = json{{"family", to_string(c.family)}, {"tau", c.tau}, {"phi", c.phi}, {"order_r", c.order_r},
             {"shape_v", c.shape_v}};
}

inline void from_json(const json& j, PriorConfig& c) {
    const auto family = parse_prior_family(j.at("family").get<std::string>());
    if (!family) throw InvalidArgument("unknown prior family " + j.at("family").dump());
    c.family = *family;
    j.at("tau").get_to(c.tau);
    j.at("phi").get_to(c.phi);
    j.at("order_r").get_to(c.order_r);
    j.at("shape_v").get_to(c.shape_v);
}

inline void to_json(json& j, const TuningParams& t) {
    j = json{{"k0", t.k0}, {"corr_threshold", t.corr_threshold}, {"m", t.m}, {"maxno", t.maxno},
             {"search_cap", t.search_cap}};
}

inline void from_json(const json& j, TuningParams& t) {
    j.at("k0").get_to(t.k0);
    j.at("corr_threshold").get_to(t.corr_threshold);
    j.at("m").get_to(t.m);
    j.at("maxno").get_to(t.maxno);
    j.at("search_cap").get_to(t.search_cap);
}

inline void to_json(json& j, const SimConfig& s) {
    json beta = json::array();
    for (const auto& [idx, b] : s.beta_true) beta.push_back(json{{"index", idx}, {"value", b}});
    j = json{{"generator", to_string(s.generator)},
             {"n", s.n},
             {"p", s.p},
             {"beta_true", std::move(beta)},
             {"mu_true", s.mu_true},
             {"sigma_true", s.sigma_true},
             {"target_censoring", s.target_censoring},
             {"time_cap", s.time_cap},
             {"seed", s.seed}};
}

inline void from_json(const json& j, SimConfig& s) {
    const auto g = parse_generator(j.at("generator").get<std::string>());
    if (!g) throw InvalidArgument("unknown generator " + j.at("generator").dump());
    s.generator = *g;
    j.at("n").get_to(s.n);
    j.at("p").get_to(s.p);
    s.beta_true.clear();
    for (const auto& e : j.at("beta_true")) {
        s.beta_true[e.at("index").get<CovariateIndex>()] = e.at("value").get<double>();
    }
    j.at("mu_true").get_to(s.mu_true);
    j.at("sigma_true").get_to(s.sigma_true);
    j.at("target_censoring").get_to(s.target_censoring);
    j.at("time_cap").get_to(s.time_cap);
    j.at("seed").get_to(s.seed);
}

inline void to_json(json& j, const ReplicationRow& r) {
    j = json{{"replication", r.replication}, {"seed", r.seed},       {"ok", r.ok},
             {"tpr", r.tpr},                 {"fdr", r.fdr},         {"n_selected", r.n_selected},
             {"selected", r.selected},       {"stop_reason", r.stop_reason}, {"iterations", r.iterations}};
    if (!r.ok) j["error"] = r.error;
}

inline void from_json(const json& j, ReplicationRow& r) {
    j.at("replication").get_to(r.replication);
    j.at("seed").get_to(r.seed);
    j.at("ok").get_to(r.ok);
    j.at("tpr").get_to(r.tpr);
    j.at("fdr").get_to(r.fdr);
    j.at("n_selected").get_to(r.n_selected);
    j.at("selected").get_to(r.selected);
    j.at("stop_reason").get_to(r.stop_reason);
    j.at("iterations").get_to(r.iterations);
    r.error = j.value("error", std::string{});
}

inline void to_json(json& j, const MethodSummary& m) {
    j = json{{"label", m.label},
             {"prior", m.prior},
             {"replications", m.replications},
             {"failures", m.failures},
             {"tpr_mean", m.tpr_mean},
             {"fdr_mean", m.fdr_mean},
             {"n_selected_mean", m.n_selected_mean},
             {"rows", m.rows}};
}

inline void from_json(const json& j, MethodSummary& m) {
    j.at("label").get_to(m.label);
    j.at("prior").get_to(m.prior);
    j.at("replications").get_to(m.replications);
    j.at("failures").get_to(m.failures);
    j.at("tpr_mean").get_to(m.tpr_mean);
    j.at("fdr_mean").get_to(m.fdr_mean);
    j.at("n_selected_mean").get_to(m.n_selected_mean);
    j.at("rows").get_to(m.rows);
}

inline void to_json(json& j, const BenchmarkReport& r) {
    j = json{{"generator", r.sim}, {"tuning", r.tuning}, {"replications", r.replications},
             {"seeds", r.seeds},   {"methods", r.methods}};
}

inline void from_json(const json& j, BenchmarkReport& r) {
    j.at("generator").get_to(r.sim);
    j.at("tuning").get_to(r.tuning);
    j.at("replications").get_to(r.replications);
    j.at("seeds").get_to(r.seeds);
    j.at("methods").get_to(r.methods);
}

inline json model_json(const ModelSpec& model) {
    return json(std::vector<CovariateIndex>(model.begin(), model.end()));
}

/// Selection output. `names` (may be empty) labels covariates; `config` is embedded verbatim.
inline json selection_to_json(const SelectionResult& result, const json& config,
                              const std::vector<std::string>& names = {}) {
    auto name_of = [&](CovariateIndex j) { return j < names.size() ? names[j] : "x" + std::to_string(j + 1); };

    json selected = json::array();
    for (const auto& v : result.selected) {
        selected.push_back(json{{"index", v.index}, {"name", name_of(v.index)}, {"coefficient", v.coefficient}});
    }
    json iterations = json::array();
    for (const auto& it : result.iterations) {
        json leaders = json::array();
        for (std::size_t k = 0; k < it.leaders.size(); ++k) {
            leaders.push_back(json{{"index", it.leaders[k]}, {"utility", it.leader_utilities[k]}});
        }
        json sets = json::array();
        for (const auto& s : it.sets) {
            sets.push_back(json{{"leader", s.set.leader},
                                {"members", s.set.members},
                                {"winner", model_json(s.winner.model)},
                                {"log_marginal", s.winner.log_marginal},
                                {"log_prior", s.winner.log_prior},
                                {"log_posterior_unnorm", s.winner.log_posterior_unnorm},
                                {"gain_over_empty", s.log_posterior_gain_over_empty},
                                {"models_scored", s.models_scored},
                                {"exhaustive", s.exhaustive}});
        }
        iterations.push_back(json{{"iteration", it.iteration},
                                  {"utility_kind", to_string(it.kind)},
                                  {"pool_size", it.pool_size},
                                  {"leaders", std::move(leaders)},
                                  {"leading_sets", std::move(sets)},
                                  {"newly_selected", it.newly_selected},
                                  {"consumed", it.consumed}});
    }
    return json{{"selected", std::move(selected)},
                {"iterations", std::move(iterations)},
                {"stop_reason", to_string(result.stop_reason)},
                {"final_fit", json{{"mu", result.final_fit.mu},
                                   {"sigma", result.final_fit.sigma},
                                   {"loglik", result.final_loglik}}},
                {"config", config}};
}

/// Canonical text form: two-space indent, trailing newline.
inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline void emit_report_json(const json& document, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << dump_json(document);
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void emit_report_json(const BenchmarkReport& report, const std::string& path) {
    emit_report_json(json(report), path);
}

inline void emit_report_json(const SelectionResult& result, const json& config, const std::string& path,
                             const std::vector<std::string>& names = {}) {
    emit_report_json(selection_to_json(result, config, names), path);
}

}  // namespace nlpaft
