#include "skamp/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "skamp/io.hpp"
#include "skamp/rounding.hpp"

namespace skamp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_key(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

const char* ensemble_name(Ensemble e) {
    switch (e) {
        case Ensemble::Goe: return "goe";
        case Ensemble::Rademacher: return "rademacher";
        case Ensemble::CenteredEr: return "centered_er";
        default: return "custom";
    }
}

Ensemble parse_ensemble(const std::string& s) {
    if (s == "goe") return Ensemble::Goe;
    if (s == "rademacher") return Ensemble::Rademacher;
    if (s == "centered_er" || s == "er") return Ensemble::CenteredEr;
    throw ConfigError("unknown ensemble: " + s);
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: " + s);
    }
    if (pos != s.size()) throw ConfigError("trailing characters in number: " + s);
    return v;
}

std::int64_t parse_int(const std::string& s) {
    std::size_t pos = 0;
    std::int64_t v;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not an integer: " + s);
    }
    if (pos != s.size()) throw ConfigError("trailing characters in integer: " + s);
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("not a boolean: " + s);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "beta") beta = parse_double(value);
    else if (key == "delta") delta = parse_double(value);
    else if (key == "M") M = parse_double(value);
    else if (key == "q_bar") q_bar = parse_double(value);
    else if (key == "n") n = parse_int(value);
    else if (key == "ensemble") ensemble = parse_ensemble(value);
    else if (key == "p") p = parse_double(value);
    else if (key == "seeds") {
        seeds.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty())
                seeds.push_back(static_cast<std::uint64_t>(parse_int(item)));
        }
        if (seeds.empty()) throw ConfigError("seeds: empty list");
    } else if (key == "K") K = static_cast<int>(parse_int(value));
    else if (key == "dt") dt = parse_double(value);
    else if (key == "dx") dx = parse_double(value);
    else if (key == "x_max") x_max = parse_double(value);
    else if (key == "minimize_tol") minimize_tol = parse_double(value);
    else if (key == "minimize_iters") minimize_iters = static_cast<int>(parse_int(value));
    else if (key == "refine_rounds") refine_rounds = static_cast<int>(parse_int(value));
    else if (key == "mode") {
        if (value == "empirical") mode = NormalizationMode::Empirical;
        else if (value == "state_evolution" || value == "se")
            mode = NormalizationMode::StateEvolution;
        else throw ConfigError("unknown normalization mode: " + value);
    } else if (key == "x0_ones") x0_ones = parse_bool(value);
    else if (key == "sde_paths") sde_paths = static_cast<std::uint64_t>(parse_int(value));
    else if (key == "sde_seed") sde_seed = static_cast<std::uint64_t>(parse_int(value));
    else if (key == "threads") threads = static_cast<int>(parse_int(value));
    else if (key == "cache_dir") cache_dir = value;
    else if (key == "output_dir") output_dir = value;
    else throw ConfigError("unknown config key: " + key);
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << "beta=" << fmt_double(beta) << "\n";
    os << "delta=" << fmt_double(delta) << "\n";
    os << "M=" << fmt_double(M) << "\n";
    os << "q_bar=" << fmt_double(q_bar) << "\n";
    os << "n=" << n << "\n";
    os << "ensemble=" << ensemble_name(ensemble) << "\n";
    os << "p=" << fmt_double(p) << "\n";
    os << "seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
    os << "\n";
    os << "K=" << K << "\n";
    os << "dt=" << fmt_double(dt) << "\n";
    os << "dx=" << fmt_double(dx) << "\n";
    os << "x_max=" << fmt_double(x_max) << "\n";
    os << "minimize_tol=" << fmt_double(minimize_tol) << "\n";
    os << "minimize_iters=" << minimize_iters << "\n";
    os << "refine_rounds=" << refine_rounds << "\n";
    os << "mode="
       << (mode == NormalizationMode::Empirical ? "empirical" : "state_evolution")
       << "\n";
    os << "x0_ones=" << (x0_ones ? "true" : "false") << "\n";
    os << "sde_paths=" << sde_paths << "\n";
    os << "sde_seed=" << sde_seed << "\n";
    os << "threads=" << threads << "\n";
    os << "cache_dir=" << cache_dir.string() << "\n";
    os << "output_dir=" << output_dir.string() << "\n";
    return os.str();
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    ExperimentConfig c;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key=value");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return from_text(buf.str());
}

void ExperimentConfig::validate() const {
    if (!(beta > 0.0)) throw ConfigError("config: beta must be positive");
    if (!(delta > 0.0 && delta <= 0.25))
        throw ConfigError("config: delta must lie in (0, 0.25]");
    if (!(M > 0.0)) throw ConfigError("config: M must be positive");
    if (n < 1) throw ConfigError("config: n must be positive");
    if (ensemble == Ensemble::CenteredEr && !(p > 0.0 && p < 1.0))
        throw ConfigError("config: p must lie in (0,1)");
    if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (K < 1) throw ConfigError("config: K must be positive");
    if (refine_rounds < 0) throw ConfigError("config: refine_rounds must be >= 0");
    if (minimize_iters < 1) throw ConfigError("config: minimize_iters must be positive");
    if (!(minimize_tol > 0.0)) throw ConfigError("config: minimize_tol must be positive");
    if (threads < 1) throw ConfigError("config: threads must be positive");
    grid().validate(beta);
}

ParisiArtifacts solve_and_cache_parisi(const ExperimentConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.cache_dir);
    const PdeGrid grid = config.grid();
    std::string key = "parisi_b" + fmt_key(config.beta) + "_K" +
                      std::to_string(config.K) + "_dt" + fmt_key(grid.dt) + "_dx" +
                      fmt_key(grid.dx) + "_X" +
                      fmt_key(grid.resolved_x_max(config.beta)) + "_tol" +
                      fmt_key(config.minimize_tol);
    if (config.refine_rounds > 0)
        key += "_R" + std::to_string(config.refine_rounds);
    const auto oracle_path = config.cache_dir / (key + ".prsi");
    const auto meta_path = config.cache_dir / (key + ".json");

    if (std::filesystem::exists(oracle_path) && std::filesystem::exists(meta_path)) {
        std::ifstream is(meta_path);
        nlohmann::json meta = nlohmann::json::parse(is, nullptr, false);
        if (!meta.is_discarded() && meta.value("beta", -1.0) == config.beta &&
            meta.value("K", -1) == config.K) {
            ParisiArtifacts art{ParisiOracle::load(oracle_path),
                                meta.value("value", 0.0),
                                meta.value("grad_norm", 0.0),
                                meta.value("iterations", 0),
                                meta.value("converged", false),
                                true,
                                oracle_path};
            if (std::abs(art.oracle.beta() - config.beta) <= 1e-12) return art;
        }
    }

    MinimizeOptions mopts;
    mopts.max_iters = config.minimize_iters;
    mopts.tol = config.minimize_tol;
    mopts.refine_rounds = config.refine_rounds;
    MinimizeResult res;
    bool converged = true;
    try {
        res = minimize_parisi(config.beta, config.K, grid, mopts);
    } catch (const MinimizeStalled& e) {
        res = e.best;
        converged = false;
    }

    ParisiArtifacts art{solve_pde(config.beta, res.measure, grid),
                        res.value,
                        res.grad_norm,
                        res.iterations,
                        converged,
                        false,
                        oracle_path};
    art.oracle.save(oracle_path);
    {
        io::AtomicFileWriter w(meta_path);
        nlohmann::ordered_json meta;
        meta["beta"] = config.beta;
        meta["K"] = config.K;
        meta["dt"] = grid.dt;
        meta["dx"] = grid.dx;
        meta["x_max"] = grid.resolved_x_max(config.beta);
        meta["tol"] = config.minimize_tol;
        meta["refine_rounds"] = config.refine_rounds;
        meta["value"] = art.value;
        meta["grad_norm"] = art.grad_norm;
        meta["iterations"] = art.iterations;
        meta["converged"] = art.converged;
        w.stream() << meta.dump(2) << "\n";
        w.commit();
    }
    return art;
}

namespace {

struct Predictions {
    double se_predicted = 0.0;
    double eps_beta = 0.0;
    double e0 = 0.0;
    std::vector<double> divisors;
};

Predictions make_predictions(const ExperimentConfig& config,
                             const ParisiArtifacts& art) {
    Predictions pred;
    const auto& measure = art.oracle.measure();
    const auto sandwich = energy_sandwich(measure, config.beta);
    pred.eps_beta = sandwich.eps_beta;
    pred.e0 = sandwich.e0;
    const double q_bar = (config.q_bar < 0.0) ? measure.q_star() : config.q_bar;
    if (config.sde_paths > 0) {
        const auto paths =
            simulate(art.oracle, measure, config.beta, config.delta, q_bar,
                     config.sde_paths, config.sde_seed);
        pred.se_predicted =
            predicted_energy(paths, art.oracle, config.beta, q_bar).path_estimate;
    } else {
        pred.se_predicted = sandwich.eps_beta;
    }
    if (config.mode == NormalizationMode::StateEvolution)
        pred.divisors =
            se_normalizers(art.oracle, measure, config.beta, config.delta, q_bar,
                           std::max<std::uint64_t>(config.sde_paths, 1000),
                           config.sde_seed, config.x0_ones ? 1.0 : 0.0);
    return pred;
}

CouplingMatrix sample_matrix(const ExperimentConfig& config, std::uint64_t seed,
                             ErGraph* graph_out) {
    switch (config.ensemble) {
        case Ensemble::Goe: return sample_goe(config.n, seed);
        case Ensemble::Rademacher: return sample_rademacher(config.n, seed);
        case Ensemble::CenteredEr: {
            ErGraph g = sample_er_graph(config.n, config.p, seed);
            auto A = center_er_graph(g);
            if (graph_out) *graph_out = std::move(g);
            return A;
        }
        default: throw ConfigError("cannot sample the custom ensemble");
    }
}

RunReport run_single(const ExperimentConfig& config, const ParisiArtifacts& art,
                     const Predictions& pred, std::uint64_t seed, bool maxcut) {
    RunReport rep;
    rep.seed = seed;
    rep.se_predicted = pred.se_predicted;
    rep.eps_beta = pred.eps_beta;
    rep.e0_sandwich = pred.e0;
    const auto n = static_cast<std::size_t>(config.n);
    const auto t_total = Clock::now();
    std::string stage = "sample";
    try {
        auto t0 = Clock::now();
        ErGraph graph;
        const CouplingMatrix A = sample_matrix(config, seed, &graph);
        rep.ms_sample = ms_since(t0);

        stage = "iamp";
        t0 = Clock::now();
        IampParams params;
        params.beta = config.beta;
        params.delta = config.delta;
        params.M = config.M;
        params.q_bar = config.q_bar;
        params.mode = config.mode;
        params.x0_ones = config.x0_ones;
        params.se_divisors = pred.divisors;
        const IampResult run = run_iamp(A, art.oracle, params, seed);
        rep.ms_iamp = ms_since(t0);
        rep.energy_iamp_raw = run.energy;
        rep.flops_iamp = run.flops;

        stage = "round";
        t0 = Clock::now();
        rep.cube_dist_sq = cube_distance_sq(run.z);
        auto rounded = sequential_round(A, project_to_cube(run.z));
        rep.rounding_flips = rounded.coordinate_flips;
        rep.rounding_ties = rounded.ties;
        rep.energy_iamp_rounded = rounded.energy_after;
        rep.flops_rounding = 8 * static_cast<std::uint64_t>(n) * n;
        auto sigma = std::move(rounded.sigma);
        if (maxcut) {
            sigma = balance_min_damage(std::move(sigma), A);
            std::int64_t sum = 0, deg = 0;
            for (auto s : sigma) sum += s;
            for (auto b : graph.adj) deg += b;
            rep.imbalance = sum;
            rep.edges = deg / 2;
            rep.cut = maxcut_value(graph, sigma);
            const double np_ = static_cast<double>(config.n);
            const double qf = 2.0 * np_ * energy(A, sigma);
            const double rhs = 0.5 * static_cast<double>(rep.edges) -
                               config.p / 4.0 * static_cast<double>(sum * sum) +
                               np_ * config.p / 4.0 +
                               0.25 * std::sqrt(np_ * config.p * (1.0 - config.p)) * qf;
            rep.cut_identity_rel_gap =
                std::abs(static_cast<double>(rep.cut) - rhs) /
                std::max(1.0, std::abs(static_cast<double>(rep.cut)));
            rep.excess_cut_normalized =
                (static_cast<double>(rep.cut) - 0.5 * static_cast<double>(rep.edges)) /
                std::sqrt(np_ * np_ * np_ * config.p * (1.0 - config.p) / 4.0);
        }
        rep.ms_round = ms_since(t0);

        stage = "tap";
        rep.tap = tap_residuals(A, run.z, run.x_final, config.beta,
                                art.oracle.q_star());

        stage = "spectral";
        t0 = Clock::now();
        const auto sp = spectral_baseline(A);
        rep.ms_spectral = ms_since(t0);
        rep.energy_spectral = sp.energy;
        rep.flops_spectral =
            4 * static_cast<std::uint64_t>(sp.iterations) * n * n;
    } catch (const std::exception& e) {
        rep.error = StageError{stage, e.what()};
    }
    rep.ms_total = ms_since(t_total);
    return rep;
}

nlohmann::ordered_json report_json(const RunReport& rep,
                                   const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    auto& params = j["params"];
    params["beta"] = config.beta;
    params["delta"] = config.delta;
    params["M"] = config.M;
    params["q_bar"] = config.q_bar;
    params["n"] = config.n;
    params["ensemble"] = ensemble_name(config.ensemble);
    params["p"] = config.p;
    params["K"] = config.K;
    params["dt"] = config.dt;
    params["dx"] = config.dx;
    params["mode"] = config.mode == NormalizationMode::Empirical
                         ? "empirical"
                         : "state_evolution";
    params["x0_ones"] = config.x0_ones;
    params["sde_paths"] = config.sde_paths;
    j["seed"] = rep.seed;
    auto& en = j["energies"];
    en["iamp_raw"] = rep.energy_iamp_raw;
    en["iamp_rounded"] = rep.energy_iamp_rounded;
    en["spectral"] = rep.energy_spectral;
    en["se_predicted"] = rep.se_predicted;
    en["eps_beta"] = rep.eps_beta;
    en["e0_sandwich"] = rep.e0_sandwich;
    auto& tap = j["tap"];
    tap["residual_consistency"] = rep.tap.residual_consistency;
    tap["residual_tap"] = rep.tap.residual_tap;
    tap["residual_full"] = rep.tap.residual_full;
    auto& rd = j["rounding"];
    rd["cube_dist_sq"] = rep.cube_dist_sq;
    rd["flips"] = rep.rounding_flips;
    rd["ties"] = rep.rounding_ties;
    if (rep.cut >= 0) {
        auto& mc = j["maxcut"];
        mc["cut"] = rep.cut;
        mc["edges"] = rep.edges;
        mc["imbalance"] = rep.imbalance;
        mc["excess_cut_normalized"] = rep.excess_cut_normalized;
        mc["identity_rel_gap"] = rep.cut_identity_rel_gap;
    }
    auto& fl = j["flops"];
    fl["iamp"] = rep.flops_iamp;
    fl["rounding"] = rep.flops_rounding;
    fl["spectral"] = rep.flops_spectral;
    auto& tm = j["timings"];
    tm["sample_ms"] = rep.ms_sample;
    tm["iamp_ms"] = rep.ms_iamp;
    tm["round_ms"] = rep.ms_round;
    tm["spectral_ms"] = rep.ms_spectral;
    tm["total_ms"] = rep.ms_total;
    if (rep.error) {
        j["error"]["stage"] = rep.error->stage;
        j["error"]["message"] = rep.error->message;
    } else {
        j["error"] = nullptr;
    }
    return j;
}

SweepResult run_sweep(const ExperimentConfig& config, bool maxcut) {
    config.validate();
    if (maxcut && config.ensemble != Ensemble::CenteredEr)
        throw ConfigError("maxcut requires the centered_er ensemble");
    SweepResult sweep{solve_and_cache_parisi(config), {}, {}, 0.0};
    const Predictions pred = make_predictions(config, sweep.parisi);
    std::filesystem::create_directories(config.output_dir);

    const std::size_t n_seeds = config.seeds.size();
    sweep.reports.resize(n_seeds);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= n_seeds) return;
            sweep.reports[i] =
                run_single(config, sweep.parisi, pred, config.seeds[i], maxcut);
        }
    };
    const auto n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(config.threads), n_seeds);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    double acc = 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < n_seeds; ++i) {
        const auto& rep = sweep.reports[i];
        const auto path =
            config.output_dir /
            ("report_" + std::string(maxcut ? "maxcut" : "sk") + "_b" +
             fmt_key(config.beta) + "_n" + std::to_string(config.n) + "_s" +
             std::to_string(rep.seed) + ".json");
        write_report(rep, config, path);
        sweep.report_paths.push_back(path);
        if (!rep.error) {
            acc += rep.energy_iamp_rounded;
            ++ok;
        }
    }
    sweep.mean_rounded_energy = ok ? acc / static_cast<double>(ok) : 0.0;
    return sweep;
}

}  // namespace

std::string report_to_json(const RunReport& rep, const ExperimentConfig& config) {
    return report_json(rep, config).dump(2) + "\n";
}

void write_report(const RunReport& rep, const ExperimentConfig& config,
                  const std::filesystem::path& path) {
    io::AtomicFileWriter w(path);
    w.stream() << report_to_json(rep, config);
    w.commit();
}

SweepResult run_sk(const ExperimentConfig& config) { return run_sweep(config, false); }

SweepResult run_maxcut(const ExperimentConfig& config) {
    return run_sweep(config, true);
}

void aggregate_reports(const std::vector<std::filesystem::path>& inputs,
                       const std::filesystem::path& csv_out) {
    if (inputs.empty()) throw ValidationError("aggregate: no report files");
    static const std::vector<std::pair<const char*, const char*>> cols = {
        {"energies", "iamp_raw"},       {"energies", "iamp_rounded"},
        {"energies", "spectral"},       {"energies", "se_predicted"},
        {"energies", "eps_beta"},       {"energies", "e0_sandwich"},
        {"tap", "residual_consistency"}, {"tap", "residual_tap"},
        {"tap", "residual_full"},       {"rounding", "cube_dist_sq"},
    };
    io::AtomicFileWriter w(csv_out);
    auto& os = w.stream();
    os << "file,seed,error";
    for (const auto& [a, b] : cols) os << ',' << a << '_' << b;
    os << '\n';
    std::vector<double> sums(cols.size(), 0.0);
    std::size_t ok = 0;
    for (const auto& path : inputs) {
        std::ifstream is(path);
        if (!is) throw ValidationError("aggregate: cannot open " + path.string());
        nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
        if (j.is_discarded())
            throw ValidationError("aggregate: bad JSON in " + path.string());
        const bool failed = !j.value("error", nlohmann::json()).is_null();
        os << path.filename().string() << ',' << j.value("seed", 0ull) << ','
           << (failed ? "yes" : "no");
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double v = j.contains(cols[c].first)
                                 ? j[cols[c].first].value(cols[c].second, 0.0)
                                 : 0.0;
            os << ',' << fmt_double(v);
            if (!failed) sums[c] += v;
        }
        os << '\n';
        if (!failed) ++ok;
    }
    os << "mean,," << ok;
    for (double s : sums)
        os << ',' << fmt_double(ok ? s / static_cast<double>(ok) : 0.0);
    os << '\n';
    w.commit();
}

}  // namespace skamp
