#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "skamp/errors.hpp"

namespace skamp {

// A probability distribution function on [0,1] stored as a right-continuous
// step: knots 0 = t_0 < ... < t_K = 1 and nondecreasing cdf values with
// cdf.back() == 1.  The underlying measure is atomic with mass
// cdf[k] - cdf[k-1] at knot k.
struct ParisiMeasure {
    std::vector<double> knots;
    std::vector<double> cdf;

    // Smallest knot whose cdf is within 1e-10 of full mass.
    double q_star() const;

    // Value of the distribution function at t.  Left-continuous at interior
    // knot hits; at t = 0 returns the mass already placed at 0.
    double mu_at(double t) const;

    // Exact average of the step function over [a, b].
    double mu_avg(double a, double b) const;

    // Exact integrals against the step function / the atoms.
    double integral_t_mu() const;                  // int_0^1 t mu(t) dt
    double integral_mu(double a, double b) const;  // int_a^b mu(t) dt
    double second_moment() const;                  // int t^2 dmu

    std::vector<double> atom_weights() const;

    void validate() const;

    // Normalizes nonnegative increments to total mass one; cdf[k] is the
    // cumulative sum through knot k.  Trailing values are snapped to exactly 1.
    static ParisiMeasure from_increments(std::vector<double> knots,
                                         std::span<const double> increments);
    // Point mass at zero, i.e. mu == 1 on all of [0,1].
    static ParisiMeasure point_mass_at_zero();
    // Single atom at q: cdf = 1{t >= q}.
    static ParisiMeasure step_at(double q);
};

struct PdeGrid {
    double dt = 1e-3;
    double dx = 0.02;
    double x_max = 0.0;  // 0 means automatic: 6 + 3*beta

    double resolved_x_max(double beta) const;
    void validate(double beta) const;
};

// Tabulated solution of the backward equation
//   dPhi/dt + (beta^2/2) Phi_xx + (beta^2/2) mu(t) (Phi_x)^2 = 0,
//   Phi(1, x) = log 2cosh(x),
// on [0,1] x [-X,X] together with its first two x-derivatives.  Above the
// point where the cdf saturates at 1 the solution is filled in closed form
// (log 2cosh(x) + beta^2 (1-t)/2) rather than marched numerically.  Queries
// interpolate bilinearly; |x| beyond the grid uses the linear asymptote
// phi ~ |x| + const with phi_x = sign(x).
class ParisiOracle {
public:
    ParisiOracle() = default;

    double phi(double t, double x) const { return query(phi_, t, x, 0); }
    double dphi(double t, double x) const { return query(dphi_, t, x, 1); }
    double d2phi(double t, double x) const { return query(d2phi_, t, x, 2); }

    // Resolves the time interpolation once; x-queries then cost two lerps.
    struct Row {
        const ParisiOracle* o;
        std::size_t i0, i1;
        double w1;
        double phi(double x) const;
        double dphi(double x) const;
        double d2phi(double x) const;
        // Exact x-derivatives of the interpolants above (cell slopes), zero
        // beyond the grid where the fields continue as constants.
        double dphi_slope(double x) const;
        double d2phi_slope(double x) const;
    };
    Row row(double t) const;

    double beta() const { return beta_; }
    const ParisiMeasure& measure() const { return measure_; }
    const PdeGrid& grid() const { return grid_; }
    double q_star() const { return measure_.q_star(); }
    const std::vector<double>& t_grid() const { return t_grid_; }
    std::size_t nx() const { return nx_; }
    double x_at(std::size_t j) const { return x_min_ + dx_ * static_cast<double>(j); }

    void save(const std::filesystem::path& path) const;
    static ParisiOracle load(const std::filesystem::path& path);

private:
    friend ParisiOracle solve_pde(double, const ParisiMeasure&, const PdeGrid&);

    double query(const std::vector<double>& table, double t, double x, int which) const;

    double beta_ = 0.0;
    ParisiMeasure measure_;
    PdeGrid grid_;
    std::vector<double> t_grid_;
    double x_min_ = 0.0, dx_ = 0.0;
    std::size_t nx_ = 0;
    std::vector<double> phi_, dphi_, d2phi_;  // row-major t x x
};

ParisiOracle solve_pde(double beta, const ParisiMeasure& mu, const PdeGrid& grid = {});

// Phi(0,0) - (beta^2/2) int_0^1 t mu(t) dt.  Runs a light two-row march, no
// tables are kept.
double parisi_functional(double beta, const ParisiMeasure& mu, const PdeGrid& grid = {});

// Deterministic stationarity diagnostics: one backward march recording Phi_x,
// then one forward march of the density of dX = beta^2 mu Phi_x dt + beta dB
// from the origin.  e_dphi_sq[i] = E[(Phi_x(t_i, X_{t_i}))^2]; at a minimizing
// measure this curve equals t on the support.  The derivative of the
// functional with respect to the distribution value on a knot interval is
// (beta^2/2) times the integral of (e_dphi_sq - t) over it, which is how the
// minimizer gets every gradient component from two marches.  `value` marches
// the whole axis, so it matches parisi_functional exactly when the cdf
// saturates only at t = 1 and up to tail truncation otherwise.
struct StationarityProfile {
    double value = 0.0;
    std::vector<double> t;
    std::vector<double> e_dphi_sq;
};
StationarityProfile stationarity_profile(double beta, const ParisiMeasure& mu,
                                         const PdeGrid& grid = {});

struct MinimizeOptions {
    int max_iters = 4000;
    double tol = 1e-4;        // projected-gradient norm target
    double initial_step = 0.0;  // 0 picks 0.5/beta^2
    // Optional knot refinement after the uniform-grid solve: each round halves
    // the intervals whose cdf jump exceeds refine_mass, then reoptimizes from
    // the interpolated warm start. Sharpens the distribution near the top of
    // its support, where a uniform grid leaves an O(spacing) kink.
    int refine_rounds = 0;
    double refine_mass = 0.03;  // only split jumps carrying at least this mass
};

struct MinimizeResult {
    ParisiMeasure measure;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

// Thrown when the iteration cap is exceeded; carries the best iterate found.
struct MinimizeStalled : ConvergenceError {
    MinimizeStalled(const std::string& msg, MinimizeResult best_so_far)
        : ConvergenceError(msg), best(std::move(best_so_far)) {}
    MinimizeResult best;
};

// Projected gradient over atom weights on the uniform knot grid {k/K}; the
// gradient comes from the discrete adjoint of the march (exact for the
// lattice functional) and steps pair a spectral trial length with a
// backtracking line search on the marched objective.
MinimizeResult minimize_parisi(double beta, int K, const PdeGrid& grid = {},
                               const MinimizeOptions& opts = {});

// Cache handling for solved oracles ("PRSI1" files).
void export_measure_csv(const ParisiMeasure& mu, const std::filesystem::path& path);
void export_phi_slice_csv(const ParisiOracle& o, double t, const std::filesystem::path& path);

}  // namespace skamp
