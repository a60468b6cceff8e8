#pragma once

#include <cstdint>
#include <vector>

#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"
#include "skamp/parisi.hpp"

namespace skamp {

struct TapReport {
    double residual_consistency = 0.0;  // (1/sqrt n)|z - tanh(x)|
    double residual_tap = 0.0;          // (1/sqrt n)|beta A z - x - beta^2(1-q*) tanh(x)|
    double residual_full = 0.0;         // same with z replaced by tanh(x)
    double beta = 0.0, q_star = 0.0;
    std::size_t n = 0;
};

TapReport tap_residuals(const CouplingMatrix& A, const std::vector<double>& z,
                        const std::vector<double>& x_final, double beta,
                        double q_star);

// Largest |eigenvalue| estimate from `steps` rounds of shifted power iteration.
double operator_norm_estimate(const CouplingMatrix& A, int steps = 200,
                              std::uint64_t seed = 99);

struct SpectralBaseline {
    std::vector<std::int8_t> sigma;
    double energy = 0.0;       // of the sign vector
    double lambda_max = 0.0;   // Rayleigh quotient of the converged vector
    int iterations = 0;
};

// Signs of the top eigenvector; power iteration on A + shift*I until the
// Rayleigh quotient is stable to 1e-8 relative.
SpectralBaseline spectral_baseline(const CouplingMatrix& A, std::uint64_t seed = 99,
                                   int max_iters = 100000);

struct EnergySandwich {
    double e0 = 0.0;        // (beta/2)(1 - int t^2 dmu)
    double upper = 0.0;     // e0 + log2/beta
    double eps_beta = 0.0;  // (beta/2)[1-(1-q*)^2] - (beta/2) int t^2 dmu
};

EnergySandwich energy_sandwich(const ParisiMeasure& measure, double beta);

}  // namespace skamp
