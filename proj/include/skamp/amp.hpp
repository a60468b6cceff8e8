#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"
#include "skamp/rng.hpp"

namespace skamp {

// Componentwise nonlinearity family f_k. For coordinate i the value may
// depend on the whole scalar history (u^0_i .. u^k_i) plus side data y_i.
struct NonlinearitySequence {
    // u_hist holds k+1 scalars, oldest first.
    std::function<double(int k, std::span<const double> u_hist, double y)> eval;
    // d f_k / d u^j, 0 <= j <= k.
    std::function<double(int k, int j, std::span<const double> u_hist, double y)> partial;
    int memory_depth = -1;  // -1: reads the full history
    double lipschitz = 1.0;
};

// Probes partial() against centered differences of eval() at random points.
// Throws ValidationError if any probe misses by more than 1e-5.
void validate_nonlinearity(const NonlinearitySequence& f, int max_k,
                           std::uint64_t seed = 7u);

struct AmpTrajectory {
    std::size_t n = 0;
    std::vector<double> y;                        // side data, may be empty
    std::vector<std::vector<double>> iterates;    // u^0 .. u^K
    std::vector<std::vector<double>> f_history;   // f_0 .. f_{K-1}
    std::vector<std::vector<double>> onsager;     // row k: b_{k,1} .. b_{k,k}
};

AmpTrajectory make_trajectory(std::vector<double> u0, std::vector<double> y = {});

struct AmpStepOptions {
    bool onsager = true;  // false: negative control without the correction
};

// u^{k+1} = A f_k(u^0..u^k; y) - sum_{j=1..k} b_{k,j} f_{j-1},
// b_{k,j} = (1/n) sum_i  d f_k / d u^j at coordinate i.
void amp_step(const CouplingMatrix& A, AmpTrajectory& traj,
              const NonlinearitySequence& f, const AmpStepOptions& opts = {});

// Monte Carlo solve of the covariance recursion
//   Qhat_{k+1,j+1} = E[ f_k(U_0..U_k; Y) f_j(U_0..U_j; Y) ]
// where (U_1..U_K) is the centered Gaussian process with covariance Qhat and
// (U_0, Y) follows `law`. Returns the K x K matrix, row major.
std::vector<double> state_evolution(
    const NonlinearitySequence& f,
    const std::function<std::pair<double, double>(const CounterRng&, std::uint64_t)>& law,
    int K, int mc_samples, std::uint64_t seed);

inline std::pair<double, double> standard_normal_law(const CounterRng& rng,
                                                     std::uint64_t s) {
    return {rng.normal(s), 0.0};
}

// Gram matrix <u^j, u^k>/n of the stored iterates, row major, square.
std::vector<double> empirical_overlap_check(const AmpTrajectory& traj);

// Debug dump: one line per iterate with coordinate statistics.
void export_trajectory_csv(const AmpTrajectory& traj, const std::filesystem::path& path);

}  // namespace skamp
