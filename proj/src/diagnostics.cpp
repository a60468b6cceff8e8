#include "skamp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skamp/rng.hpp"
#include "skamp/sde.hpp"

namespace skamp {

TapReport tap_residuals(const CouplingMatrix& A, const std::vector<double>& z,
                        const std::vector<double>& x_final, double beta,
                        double q_star) {
    const std::size_t n = z.size();
    if (static_cast<std::size_t>(A.n) != n || x_final.size() != n)
        throw ValidationError("tap_residuals: dimension mismatch");
    std::vector<double> th(n);
    for (std::size_t i = 0; i < n; ++i) th[i] = std::tanh(x_final[i]);

    TapReport rep;
    rep.beta = beta;
    rep.q_star = q_star;
    rep.n = n;

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = z[i] - th[i];
        acc += d * d;
    }
    rep.residual_consistency = std::sqrt(acc / static_cast<double>(n));

    const double c = beta * beta * (1.0 - q_star);
    std::vector<double> av(n);
    A.matvec(z, av);
    acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = beta * av[i] - x_final[i] - c * th[i];
        acc += d * d;
    }
    rep.residual_tap = std::sqrt(acc / static_cast<double>(n));

    A.matvec(th, av);
    acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = beta * av[i] - x_final[i] - c * th[i];
        acc += d * d;
    }
    rep.residual_full = std::sqrt(acc / static_cast<double>(n));
    return rep;
}

namespace {

// One normalized power step of A + shift I; returns the Rayleigh quotient of
// A at the updated vector.
double power_step(const CouplingMatrix& A, std::vector<double>& v, double shift,
                  std::vector<double>& scratch) {
    A.matvec(v, scratch);
    for (std::size_t i = 0; i < v.size(); ++i) scratch[i] += shift * v[i];
    double norm = 0.0;
    for (double x : scratch) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw NumericError("power iteration: zero vector");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = scratch[i] / norm;
    A.matvec(v, scratch);
    double rq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) rq += v[i] * scratch[i];
    return rq;
}

std::vector<double> seeded_unit(std::size_t n, std::uint64_t seed) {
    const CounterRng rng(seed, 5);
    std::vector<double> v(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = rng.normal(i);
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

}  // namespace

double operator_norm_estimate(const CouplingMatrix& A, int steps,
                              std::uint64_t seed) {
    // The spectrum is roughly symmetric, so iterate the shifted matrix and
    // report the larger of the two edge magnitudes.
    const double shift = 3.0;
    auto v = seeded_unit(static_cast<std::size_t>(A.n), seed);
    auto w = v;
    std::vector<double> scratch(v.size());
    double hi = 0.0, lo = 0.0;
    for (int s = 0; s < steps; ++s) hi = power_step(A, v, shift, scratch);
    for (int s = 0; s < steps; ++s) lo = power_step(A, w, -shift, scratch);
    return std::max(std::abs(hi), std::abs(lo));
}

SpectralBaseline spectral_baseline(const CouplingMatrix& A, std::uint64_t seed,
                                   int max_iters) {
    const auto n = static_cast<std::size_t>(A.n);
    auto v = seeded_unit(n, seed);
    std::vector<double> scratch(n);
    double rq = -1e300;
    SpectralBaseline out;
    bool settled = false;
    // Shift keeps the top end dominant: the bottom edge maps near zero.
    const double shift = 3.0;
    for (int it = 1; it <= max_iters; ++it) {
        const double next = power_step(A, v, shift, scratch);
        out.iterations = it;
        if (std::abs(next - rq) <= 1e-8 * std::max(1e-30, std::abs(next))) {
            rq = next;
            settled = true;
            break;
        }
        rq = next;
    }
    if (!settled)
        throw ConvergenceError("spectral_baseline: power iteration stagnated at " +
                               std::to_string(max_iters) + " iterations");
    out.lambda_max = rq;
    out.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.sigma[i] = (v[i] >= 0.0) ? std::int8_t{1} : std::int8_t{-1};
    out.energy = energy(A, out.sigma);
    return out;
}

EnergySandwich energy_sandwich(const ParisiMeasure& measure, double beta) {
    measure.validate();
    if (!(beta > 0.0)) throw ValidationError("energy_sandwich: beta must be positive");
    EnergySandwich s;
    s.e0 = beta / 2.0 * (1.0 - measure.second_moment());
    s.upper = s.e0 + std::log(2.0) / beta;
    s.eps_beta = predicted_energy_closed_form(beta, measure);
    const double qs = measure.q_star();
    const double gap = beta / 2.0 * (1.0 - qs) * (1.0 - qs);
    if (!(s.eps_beta <= s.upper + 1e-6) || !(s.eps_beta >= s.e0 - gap - 1e-6))
        throw NumericError("energy_sandwich: bounds violated");
    return s;
}

}  // namespace skamp
