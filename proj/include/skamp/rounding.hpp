#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"

namespace skamp {

// Componentwise clamp onto [-1, 1]^n.
std::vector<double> project_to_cube(std::vector<double> z);

// Squared distance to the cube divided by n.
double cube_distance_sq(const std::vector<double>& z);

struct RoundingReport {
    std::vector<std::int8_t> sigma;
    double energy_before = 0.0;  // <v, A v>/(2n) of the input
    double energy_after = 0.0;
    std::int64_t coordinate_flips = 0;  // decisions differing from sign(input)
    std::int64_t ties = 0;              // zero local fields, broken to +1
    // Change of the off-diagonal energy at each decision, all >= 0.
    std::vector<double> monotonicity_trace;
};

struct RoundingOptions {
    // Decision order; identity when absent.
    std::optional<std::vector<std::size_t>> order;
};

// Fix coordinates one at a time to the sign of their current local field
// h_l = sum_{j != l} A_lj v_j. Each decision maximizes a linear function of
// the coordinate, so the off-diagonal energy never decreases.
RoundingReport sequential_round(const CouplingMatrix& A, std::vector<double> z_tilde,
                                const RoundingOptions& opts = {});

// Flip just enough majority-sign entries (lowest index first) to bring the
// sum within the parity bound |sum| <= n mod 2.
std::vector<std::int8_t> balance(std::vector<std::int8_t> sigma);

// Same flip count, but choose majority entries with the smallest local-field
// magnitude to give up the least energy.
std::vector<std::int8_t> balance_min_damage(std::vector<std::int8_t> sigma,
                                            const CouplingMatrix& A);

// Number of graph edges crossing the partition.
std::int64_t maxcut_value(const ErGraph& g, const std::vector<std::int8_t>& sigma);

void export_sigma_text(const std::vector<std::int8_t>& sigma,
                       const std::filesystem::path& path);
std::vector<std::int8_t> load_sigma_text(const std::filesystem::path& path);

}  // namespace skamp
