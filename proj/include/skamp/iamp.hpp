#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "skamp/amp.hpp"
#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"
#include "skamp/parisi.hpp"

namespace skamp {

enum class NormalizationMode : std::uint8_t {
    // g^k = sqrt(n) * d2phi(k delta, x^k) / ||d2phi(k delta, x^k)||
    Empirical = 0,
    // g^k = beta * d2phi(k delta, x^k) / divisor[k], divisors precomputed by
    // the diffusion predictor
    StateEvolution = 1,
};

struct IampParams {
    double beta = 0.0;
    double delta = 0.01;
    double M = 8.0;       // truncation level, may be +infinity
    double q_bar = -1.0;  // < 0: use q_star of the oracle's measure
    NormalizationMode mode = NormalizationMode::Empirical;
    bool x0_ones = false;  // start the field trajectory at 1 instead of 0
    std::vector<double> se_divisors;  // required in StateEvolution mode

    void validate(const ParisiOracle& oracle) const;
    // floor(q_bar / delta) after resolving the default
    int horizon_steps(const ParisiOracle& oracle) const;
};

struct IampState {
    std::vector<double> u_prev, u_curr;  // u^{k-1}, u^k (truncated)
    std::vector<double> x_curr;          // field trajectory x^{k-1}
    std::vector<double> g_prev, g_curr;  // g^{k-2}, g^{k-1}
    std::vector<double> z_accum;
    std::vector<double> az_accum;        // A z, maintained for free from the matvec
    double b_curr = 0.0;                 // b_k
    int k = 0;                           // next body index
};

IampState iamp_init(std::size_t n, std::uint64_t seed, const IampParams& params);

// One body of the iteration: computes u^{k+1}, advances the field to x^k,
// renormalizes g, updates the Onsager scalar and the accumulator.
void iamp_step(const CouplingMatrix& A, IampState& state, const ParisiOracle& oracle,
               const IampParams& params);

struct IampTrace {
    std::vector<int> k;
    std::vector<double> t, b, u_norm2_over_n, mean_g, energy_partial_z;
};

struct IampResult {
    std::vector<double> z;
    std::vector<double> x_final;
    IampTrace trace;
    double energy = 0.0;            // <z, A z> / (2n)
    std::uint64_t flops = 0;        // 2 n^2 per matvec
    std::vector<std::vector<double>> u_log;  // filled only when requested
};

IampResult run_iamp(const CouplingMatrix& A, const ParisiOracle& oracle,
                    const IampParams& params, std::uint64_t seed,
                    bool keep_u_log = false);

// The same dynamics expressed as a componentwise nonlinearity family, for the
// general-AMP route and the covariance recursion. divisors are required (the
// empirical norm is not a scalar function of the history).
NonlinearitySequence make_iamp_nonlinearity(const ParisiOracle& oracle,
                                            const IampParams& params);

void export_iamp_trace_csv(const IampTrace& trace, const std::filesystem::path& path);

}  // namespace skamp
