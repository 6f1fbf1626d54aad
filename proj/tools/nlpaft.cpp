// nlpaft: simulate censored survival data, run non-local-prior screen-and-select
// on a CSV dataset, or run a TPR/FDR benchmark campaign.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlpaft/nlpaft.hpp"

namespace {

using nlpaft::json;

struct PriorFlags {
    std::string family = "pemom";
    double tau = 0.01;
    double phi = 1.0;
    int order_r = 1;
    double shape_v = 1.0;

    nlpaft::PriorConfig resolve(const std::string& fam, double tau_value) const {
        const auto f = nlpaft::parse_prior_family(fam);
        if (!f) throw nlpaft::InvalidArgument("unknown prior family '" + fam + "' (expected pmom|pimom|pemom)");
        nlpaft::PriorConfig c{*f, tau_value, order_r, shape_v, phi};
        c.validate();
        return c;
    }
};

struct SimFlags {
    std::size_t n = 1000;
    std::size_t p = 10000;
    std::string beta = "0:0.8,1:-0.9,2:1.3,3:-1.4,4:0.5,5:-0.53";
    double mu = 0.0;
    double sigma = 1.0;
    double censoring = 0.5;
    std::string generator = "aft";
    double time_cap = 20.0;

    nlpaft::SimConfig resolve(std::uint64_t seed) const {
        nlpaft::SimConfig c;
        c.n = n;
        c.p = p;
        c.mu_true = mu;
        c.sigma_true = sigma;
        c.target_censoring = censoring;
        c.time_cap = time_cap;
        c.seed = seed;
        const auto g = nlpaft::parse_generator(generator);
        if (!g) throw nlpaft::InvalidArgument("unknown generator '" + generator + "' (expected aft|cox)");
        c.generator = *g;
        std::stringstream in(beta);
        std::string item;
        while (std::getline(in, item, ',')) {
            if (item.empty()) continue;
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                throw nlpaft::InvalidArgument("--beta entries must be index:value, got '" + item + "'");
            }
            c.beta_true[std::stoul(item.substr(0, colon))] = std::stod(item.substr(colon + 1));
        }
        c.validate();
        return c;
    }
};

void add_tuning_flags(CLI::App& app, nlpaft::TuningParams& t) {
    app.add_option("--k0", t.k0, "Leading variables per iteration")->capture_default_str();
    app.add_option("--corr-threshold", t.corr_threshold, "Absolute correlation threshold for leading sets")
        ->capture_default_str();
    app.add_option("--m", t.m, "Target number of selected variables")->capture_default_str();
    app.add_option("--maxno", t.maxno, "Maximum consecutive iterations selecting nothing")->capture_default_str();
    app.add_option("--search-cap", t.search_cap, "Largest leading set searched exhaustively")->capture_default_str();
}

void add_prior_flags(CLI::App& app, PriorFlags& p) {
    app.add_option("--tau", p.tau, "Prior scale tau")->capture_default_str();
    app.add_option("--phi", p.phi, "Prior dispersion phi")->capture_default_str();
    app.add_option("--order-r", p.order_r, "pMOM order r")->capture_default_str();
    app.add_option("--shape-v", p.shape_v, "piMOM shape v")->capture_default_str();
}

void add_sim_flags(CLI::App& app, SimFlags& s) {
    app.add_option("--n", s.n, "Subjects")->capture_default_str();
    app.add_option("--p", s.p, "Covariates")->capture_default_str();
    app.add_option("--beta", s.beta, "Non-zero true coefficients as index:value,...")->capture_default_str();
    app.add_option("--mu", s.mu, "True intercept (AFT)")->capture_default_str();
    app.add_option("--sigma", s.sigma, "True scale (AFT)")->capture_default_str();
    app.add_option("--censoring", s.censoring, "Target censored fraction in [0,1)")->capture_default_str();
    app.add_option("--generator", s.generator, "aft | cox")->capture_default_str();
    app.add_option("--time-cap", s.time_cap, "Time cap for the AFT generator")->capture_default_str();
}

std::string flag_for_key(std::string key) {
    for (char& ch : key) {
        if (ch == '_') ch = '-';
    }
    return key.rfind("--", 0) == 0 ? key : "--" + key;
}

/// argv with config-file entries inserted right after the subcommand, so later
/// (command-line) values win under TakeLast.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file " + config_path);
    std::vector<std::string> from_file;
    for (const auto& [key, value] : nlpaft::parse_key_value_config(in)) {
        from_file.push_back(flag_for_key(key));
        from_file.push_back(value);
    }
    const std::size_t insert_at = args.size() >= 2 ? 2 : args.size();
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), from_file.begin(), from_file.end());
    return args;
}

void write_output(const json& doc, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << nlpaft::dump_json(doc);
    } else {
        nlpaft::emit_report_json(doc, out);
    }
}

void log_config(const std::string& command, const json& config) {
    std::cerr << "nlpaft " << command << " config " << config.dump() << '\n';
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const nlpaft::ParseError*>(&e)) return "parse_error";
    if (dynamic_cast<const nlpaft::InvalidArgument*>(&e)) return "invalid_argument";
    if (dynamic_cast<const nlpaft::ConvergenceError*>(&e)) return "convergence_failure";
    if (dynamic_cast<const nlpaft::NumericalError*>(&e)) return "numerical_failure";
    if (dynamic_cast<const nlpaft::ContextError*>(&e)) return "failure";
    return "error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-local prior variable selection for censored log-normal AFT models"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::string out;
    std::string data_path;
    std::string priors_list = "pmom,pimom,pemom";
    std::size_t replications = 20;
    double tau_pmom = -1.0, tau_pimom = -1.0, tau_pemom = -1.0;
    nlpaft::TuningParams tuning;
    PriorFlags prior_flags;
    SimFlags sim_flags;

    auto* simulate = app.add_subcommand("simulate", "Simulate a dataset and write it as CSV");
    add_sim_flags(*simulate, sim_flags);
    simulate->add_option("--seed", seed, "Random seed")->capture_default_str();
    simulate->add_option("--out", out, "Output CSV path")->required();
    simulate->add_option("--config", "Key = value configuration file (flags override)");

    auto* select = app.add_subcommand("select", "Run screen-and-select on a CSV dataset");
    select->add_option("--data", data_path, "Input CSV (time,status,x1,...)")->required()->check(CLI::ExistingFile);
    select->add_option("--prior", prior_flags.family, "pmom | pimom | pemom")->capture_default_str();
    add_prior_flags(*select, prior_flags);
    add_tuning_flags(*select, tuning);
    select->add_option("--seed", seed, "Seed recorded with the run")->capture_default_str();
    select->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    select->add_option("--out", out, "Output JSON path (default stdout)");
    select->add_option("--config", "Key = value configuration file (flags override)");

    auto* bench = app.add_subcommand("bench", "Simulate replications and report TPR/FDR per prior");
    add_sim_flags(*bench, sim_flags);
    add_tuning_flags(*bench, tuning);
    add_prior_flags(*bench, prior_flags);
    bench->add_option("--priors", priors_list, "Comma-separated prior families")->capture_default_str();
    bench->add_option("--tau-pmom", tau_pmom, "tau for pmom (default --tau)");
    bench->add_option("--tau-pimom", tau_pimom, "tau for pimom (default --tau)");
    bench->add_option("--tau-pemom", tau_pemom, "tau for pemom (default --tau)");
    bench->add_option("--replications", replications, "Number of simulated datasets")->capture_default_str();
    bench->add_option("--seed", seed, "Campaign seed")->capture_default_str();
    bench->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    bench->add_option("--out", out, "Output JSON path (default stdout)");
    bench->add_option("--config", "Key = value configuration file (flags override)");

    try {
        const auto args = expand_config(argc, argv);
        std::vector<const char*> cargs;
        for (const auto& a : args) cargs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
            return 2;
        }
        tuning.validate();

        if (*simulate) {
            const auto sim = sim_flags.resolve(seed);
            log_config("simulate", json{{"generator", sim}, {"out", out}});
            const auto data = nlpaft::simulate(sim);
            nlpaft::write_dataset_csv(data, out);
            std::size_t censored = 0;
            for (Eigen::Index i = 0; i < data.status().size(); ++i) censored += data.status()[i] == 0 ? 1 : 0;
            std::cerr << "nlpaft simulate wrote n=" << data.n() << " p=" << data.p() << " censored=" << censored
                      << '\n';
        } else if (*select) {
            const auto prior = prior_flags.resolve(prior_flags.family, prior_flags.tau);
            const json config{{"data", data_path}, {"prior", prior}, {"tuning", tuning}, {"seed", seed},
                              {"threads", threads}};
            log_config("select", config);
            const auto loaded = nlpaft::load_dataset_csv(data_path);
            std::cerr << "nlpaft select loaded n=" << loaded.data.n() << " p=" << loaded.data.p() << '\n';
            const auto result = nlpaft::run_selection(loaded.data, tuning, prior, {threads, {}});
            write_output(nlpaft::selection_to_json(result, config, loaded.covariate_names), out);
        } else if (*bench) {
            const auto sim = sim_flags.resolve(seed);
            std::vector<nlpaft::PriorConfig> priors;
            std::stringstream in(priors_list);
            std::string fam;
            while (std::getline(in, fam, ',')) {
                if (fam.empty()) continue;
                double tau = prior_flags.tau;
                if (fam == "pmom" && tau_pmom > 0) tau = tau_pmom;
                if (fam == "pimom" && tau_pimom > 0) tau = tau_pimom;
                if (fam == "pemom" && tau_pemom > 0) tau = tau_pemom;
                priors.push_back(prior_flags.resolve(fam, tau));
            }
            json config{{"generator", sim}, {"tuning", tuning}, {"priors", priors},
                        {"replications", replications}, {"threads", threads}};
            log_config("bench", config);
            const auto report = nlpaft::run_benchmark(sim, tuning, priors, replications, {threads, {}});
            write_output(json(report), out);
            for (const auto& m : report.methods) {
                std::cerr << "nlpaft bench " << m.label << " tpr=" << m.tpr_mean << " fdr=" << m.fdr_mean
                          << " n_selected=" << m.n_selected_mean << " failures=" << m.failures << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}
