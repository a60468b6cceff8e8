#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "skamp/errors.hpp"
#include "skamp/parisi.hpp"

namespace skamp {

// Euler paths of the diffusion dX = beta^2 mu(t) dphi(t,X) dt + beta dB and
// the coupled martingale dZ = beta d2phi(t,X) dB, on t_grid = {0, d, .., K d}.
struct SdePaths {
    std::size_t n_paths = 0;
    std::vector<double> t_grid;
    // Node-major storage: value of path p at node k sits at [k * n_paths + p].
    std::vector<double> X, Z;
    std::uint64_t brownian_seed = 0;

    double x(std::size_t p, std::size_t k) const { return X[k * n_paths + p]; }
    double z(std::size_t p, std::size_t k) const { return Z[k * n_paths + p]; }
};

SdePaths simulate(const ParisiOracle& oracle, const ParisiMeasure& measure,
                  double beta, double delta, double q_bar, std::size_t n_paths,
                  std::uint64_t seed);

struct EnergyPrediction {
    double path_estimate = 0.0;  // trapezoid of E[beta d2phi(t, X_t)] over t_grid
    double closed_form = 0.0;    // (beta/2)[1-(1-q*)^2] - (beta/2) int s^2 mu(ds)
};

EnergyPrediction predicted_energy(const SdePaths& paths, const ParisiOracle& oracle,
                                  double beta, double q_bar);

// Closed form alone, no simulation needed.
double predicted_energy_closed_form(double beta, const ParisiMeasure& measure);

struct IdentityReport {
    std::vector<double> t;
    std::vector<double> e_dphi_sq;      // E[(dphi)^2], identity value t
    std::vector<double> e_beta_d2_sq;   // E[(beta d2phi)^2], identity value 1
    std::vector<double> e_d2phi;        // E[d2phi], identity value tail_mu
    std::vector<double> tail_mu;        // int_t^1 mu(s) ds
    double max_dphi_sq_dev = 0.0;
    double max_beta_d2_sq_dev = 0.0;
    double max_d2phi_dev = 0.0;
    double max_martingale_gap = 0.0;    // max_t E[(Z_t - dphi(t,X_t))^2]
};

IdentityReport identity_suite(const SdePaths& paths, const ParisiOracle& oracle,
                              const ParisiMeasure& measure, double beta);

// Divisors for the StateEvolution normalization. Slot k is the Monte Carlo
// estimate of E[(beta d2phi(k delta, x^k))^2]^{1/2} where x^k follows the
// same Euler schedule the iteration drives (a fresh increment at every body,
// including body 0, starting from x_init). Reading the field after the
// advance matters: a one-step lag leaves an O(delta) scale bias per step
// that compounds across the run.
std::vector<double> se_normalizers(const ParisiOracle& oracle,
                                   const ParisiMeasure& measure, double beta,
                                   double delta, double q_bar, std::size_t n_paths,
                                   std::uint64_t seed, double x_init = 0.0);

void export_identity_csv(const IdentityReport& rep, const std::filesystem::path& path);

}  // namespace skamp
