#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "skamp/pipeline.hpp"
#include "skamp/rounding.hpp"

namespace {

using skamp::ExperimentConfig;

struct Cli {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
};

ExperimentConfig build_config(const Cli& cli) {
    ExperimentConfig cfg = cli.config_file.empty()
                               ? ExperimentConfig{}
                               : ExperimentConfig::from_file(cli.config_file);
    for (const auto& [key, value] : cli.overrides) cfg.set(key, value);
    return cfg;
}

void add_config_flags(CLI::App* sub, Cli& cli) {
    sub->add_option("--config", cli.config_file,
                    "key=value config file; flags below override it");
    static const ExperimentConfig defaults;
    static const std::vector<std::array<const char*, 3>> keys = {
        {"--beta", "beta", "inverse temperature"},
        {"--delta", "delta", "iteration step size"},
        {"--M", "M", "iterate truncation level"},
        {"--q-bar", "q_bar", "accumulation horizon, <0 means q_star"},
        {"--n", "n", "instance size"},
        {"--ensemble", "ensemble", "goe, rademacher or centered_er"},
        {"--p", "p", "edge probability for centered_er"},
        {"--seeds", "seeds", "comma-separated seed list"},
        {"--K", "K", "knot count of the measure search"},
        {"--dt", "dt", "solver time step"},
        {"--dx", "dx", "solver space step"},
        {"--x-max", "x_max", "solver half-width, 0 = automatic"},
        {"--minimize-tol", "minimize_tol", "projected-gradient target"},
        {"--minimize-iters", "minimize_iters", "measure-search iteration cap"},
        {"--refine-rounds", "refine_rounds", "knot-refinement rounds near the support edge"},
        {"--mode", "mode", "empirical or state_evolution normalization"},
        {"--x0-ones", "x0_ones", "start the field trajectory at 1"},
        {"--sde-paths", "sde_paths", "paths for the diffusion predictor"},
        {"--sde-seed", "sde_seed", "seed of the diffusion predictor"},
        {"--threads", "threads", "worker threads across seeds"},
        {"--cache-dir", "cache_dir", "solver cache directory"},
        {"--output-dir", "output_dir", "report directory"},
    };
    const std::string defaults_text = defaults.to_text();
    for (const auto& [flag, key, desc] : keys) {
        std::string d = desc;
        const auto pos = defaults_text.find(std::string(key) + "=");
        if (pos != std::string::npos) {
            const auto end = defaults_text.find('\n', pos);
            d += " [" + defaults_text.substr(pos, end - pos) + "]";
        }
        const std::string k = key;
        sub->add_option_function<std::string>(
            flag,
            [&cli, k](const std::string& v) { cli.overrides.emplace_back(k, v); },
            d);
    }
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&cli](const std::vector<std::string>& kvs) {
            for (const auto& kv : kvs) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw CLI::ValidationError("--set expects key=value");
                cli.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
            }
        },
        "extra key=value override, repeatable");
}

void print_summary(const skamp::SweepResult& sweep) {
    for (std::size_t i = 0; i < sweep.reports.size(); ++i) {
        const auto& rep = sweep.reports[i];
        if (rep.error) {
            std::cout << "seed " << rep.seed << "  FAILED at " << rep.error->stage
                      << ": " << rep.error->message << "\n";
            continue;
        }
        std::cout << "seed " << rep.seed << "  raw " << rep.energy_iamp_raw
                  << "  rounded " << rep.energy_iamp_rounded << "  spectral "
                  << rep.energy_spectral;
        if (rep.cut >= 0)
            std::cout << "  cut " << rep.cut << "  excess "
                      << rep.excess_cut_normalized;
        std::cout << "  report " << sweep.report_paths[i].string() << "\n";
    }
    std::cout << "prediction: se " << sweep.reports.front().se_predicted
              << "  eps_beta " << sweep.reports.front().eps_beta << "\n";
    std::cout << "mean rounded energy " << sweep.mean_rounded_energy << "\n";
}

int sweep_exit_code(const skamp::SweepResult& sweep) {
    bool any_ok = false, any_numeric = false;
    for (const auto& rep : sweep.reports) {
        if (!rep.error) any_ok = true;
        else if (rep.error->stage == "sample") return 2;
        else any_numeric = true;
    }
    if (any_ok) return 0;
    return any_numeric ? 3 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ground-state search for mean-field spin glasses"};
    app.require_subcommand(1);
    Cli cli;

    auto* parisi = app.add_subcommand(
        "parisi", "minimize the functional, solve the equation, cache the tables");
    add_config_flags(parisi, cli);
    std::string export_prefix;
    parisi->add_option("--export-prefix", export_prefix,
                       "also write <prefix>_measure.csv and <prefix>_phi0.csv");

    auto* sk = app.add_subcommand("sk", "full pipeline on coupling matrices");
    add_config_flags(sk, cli);

    auto* maxcut = app.add_subcommand("maxcut", "cut search on centered graphs");
    add_config_flags(maxcut, cli);

    auto* sde = app.add_subcommand("sde-check",
                                   "diffusion identity report for a cached solution");
    add_config_flags(sde, cli);

    auto* report = app.add_subcommand("report", "aggregate run reports into a CSV");
    std::vector<std::string> report_inputs;
    std::string report_dir, report_out = "aggregate.csv";
    report->add_option("files", report_inputs, "report JSON files");
    report->add_option("--dir", report_dir, "collect report_*.json from a directory");
    report->add_option("--out", report_out, "CSV destination");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (parisi->parsed()) {
            const auto cfg = build_config(cli);
            const auto art = skamp::solve_and_cache_parisi(cfg);
            std::cout << "cache " << (art.cache_hit ? "hit" : "miss") << "  "
                      << art.cache_path.string() << "\n";
            std::cout << "value " << art.value << "\n";
            std::cout << "q_star " << art.oracle.q_star() << "\n";
            std::cout << "grad_norm " << art.grad_norm << "  iterations "
                      << art.iterations << "  converged "
                      << (art.converged ? "yes" : "no") << "\n";
            if (!export_prefix.empty()) {
                skamp::export_measure_csv(art.oracle.measure(),
                                          export_prefix + "_measure.csv");
                skamp::export_phi_slice_csv(art.oracle, 0.0,
                                            export_prefix + "_phi0.csv");
            }
            return art.converged ? 0 : 3;
        }
        if (sk->parsed()) {
            const auto sweep = skamp::run_sk(build_config(cli));
            print_summary(sweep);
            return sweep_exit_code(sweep);
        }
        if (maxcut->parsed()) {
            auto cfg = build_config(cli);
            cfg.ensemble = skamp::Ensemble::CenteredEr;
            const auto sweep = skamp::run_maxcut(cfg);
            print_summary(sweep);
            return sweep_exit_code(sweep);
        }
        if (sde->parsed()) {
            const auto cfg = build_config(cli);
            const auto art = skamp::solve_and_cache_parisi(cfg);
            const auto& measure = art.oracle.measure();
            const double q_bar = (cfg.q_bar < 0.0) ? measure.q_star() : cfg.q_bar;
            const auto paths = skamp::simulate(art.oracle, measure, cfg.beta,
                                               cfg.delta, q_bar, cfg.sde_paths,
                                               cfg.sde_seed);
            const auto idents =
                skamp::identity_suite(paths, art.oracle, measure, cfg.beta);
            std::filesystem::create_directories(cfg.output_dir);
            const auto csv = cfg.output_dir / "identities.csv";
            skamp::export_identity_csv(idents, csv);
            const auto pred =
                skamp::predicted_energy(paths, art.oracle, cfg.beta, q_bar);
            std::cout << "q_star " << measure.q_star() << "\n";
            std::cout << "max |E[(dphi)^2] - t|        " << idents.max_dphi_sq_dev
                      << "\n";
            std::cout << "max |E[(beta d2phi)^2] - 1|  "
                      << idents.max_beta_d2_sq_dev << "\n";
            std::cout << "max |E[d2phi] - tail_mu|     " << idents.max_d2phi_dev
                      << "\n";
            std::cout << "max martingale gap           "
                      << idents.max_martingale_gap << "\n";
            std::cout << "predicted energy: path " << pred.path_estimate
                      << "  closed form " << pred.closed_form << "\n";
            std::cout << "identities " << csv.string() << "\n";
            return 0;
        }
        if (report->parsed()) {
            std::vector<std::filesystem::path> inputs(report_inputs.begin(),
                                                      report_inputs.end());
            if (!report_dir.empty())
                for (const auto& entry :
                     std::filesystem::directory_iterator(report_dir)) {
                    const auto name = entry.path().filename().string();
                    if (name.rfind("report_", 0) == 0 &&
                        entry.path().extension() == ".json")
                        inputs.push_back(entry.path());
                }
            std::sort(inputs.begin(), inputs.end());
            skamp::aggregate_reports(inputs, report_out);
            std::cout << "wrote " << report_out << " from " << inputs.size()
                      << " reports\n";
            return 0;
        }
    } catch (const skamp::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const skamp::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
