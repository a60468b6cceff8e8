#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skamp/diagnostics.hpp"
#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"
#include "skamp/iamp.hpp"
#include "skamp/parisi.hpp"
#include "skamp/sde.hpp"

namespace skamp {

struct ExperimentConfig {
    double beta = 2.0;
    double delta = 0.01;
    double M = 8.0;
    double q_bar = -1.0;  // < 0: q_star of the minimizer
    std::int64_t n = 1000;
    Ensemble ensemble = Ensemble::Goe;
    double p = 0.5;  // ER edge probability
    std::vector<std::uint64_t> seeds{1};
    int K = 64;  // knots of the measure search
    double dt = 1e-3, dx = 0.02, x_max = 0.0;  // 0: automatic width
    double minimize_tol = 1e-4;
    int minimize_iters = 4000;
    int refine_rounds = 0;  // knot-refinement passes after the uniform solve
    NormalizationMode mode = NormalizationMode::Empirical;
    bool x0_ones = false;
    std::uint64_t sde_paths = 20000;
    std::uint64_t sde_seed = 12345;
    int threads = 1;
    std::filesystem::path cache_dir = "cache";
    std::filesystem::path output_dir = "out";

    void set(const std::string& key, const std::string& value);
    std::string to_text() const;
    static ExperimentConfig from_file(const std::filesystem::path& path);
    static ExperimentConfig from_text(const std::string& text);
    void validate() const;
    PdeGrid grid() const { return PdeGrid{dt, dx, x_max}; }
};

struct ParisiArtifacts {
    ParisiOracle oracle;
    double value = 0.0;      // minimized functional
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool cache_hit = false;
    std::filesystem::path cache_path;
};

// Minimize the measure for (beta, K, grid), solve the equation on it, and
// keep the result under cache_dir; later calls with the same key just load.
ParisiArtifacts solve_and_cache_parisi(const ExperimentConfig& config);

struct StageError {
    std::string stage;
    std::string message;
};

struct RunReport {
    std::uint64_t seed = 0;
    double energy_iamp_raw = 0.0;
    double energy_iamp_rounded = 0.0;
    double energy_spectral = 0.0;
    double se_predicted = 0.0;
    double eps_beta = 0.0;
    double e0_sandwich = 0.0;
    TapReport tap;
    double cube_dist_sq = 0.0;
    std::int64_t rounding_flips = 0, rounding_ties = 0;
    // MAXCUT only
    std::int64_t cut = -1, edges = -1, imbalance = 0;
    double excess_cut_normalized = 0.0, cut_identity_rel_gap = 0.0;
    std::uint64_t flops_iamp = 0, flops_rounding = 0, flops_spectral = 0;
    double ms_sample = 0.0, ms_iamp = 0.0, ms_round = 0.0, ms_spectral = 0.0,
           ms_total = 0.0;
    std::optional<StageError> error;
};

std::string report_to_json(const RunReport& rep, const ExperimentConfig& config);
void write_report(const RunReport& rep, const ExperimentConfig& config,
                  const std::filesystem::path& path);

struct SweepResult {
    ParisiArtifacts parisi;
    std::vector<RunReport> reports;
    std::vector<std::filesystem::path> report_paths;
    double mean_rounded_energy = 0.0;  // over successful seeds
};

SweepResult run_sk(const ExperimentConfig& config);
SweepResult run_maxcut(const ExperimentConfig& config);

// Collect report JSON files into one CSV table plus a mean row.
void aggregate_reports(const std::vector<std::filesystem::path>& inputs,
                       const std::filesystem::path& csv_out);

}  // namespace skamp
