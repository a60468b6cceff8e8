#include "skamp/sde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "skamp/rng.hpp"

namespace skamp {

namespace {

void check_match(const ParisiOracle& oracle, const ParisiMeasure& measure,
                 double beta) {
    if (std::abs(oracle.beta() - beta) > 1e-12)
        throw ConfigError("sde: beta does not match the oracle");
    const auto& m = oracle.measure();
    if (m.knots.size() != measure.knots.size())
        throw ConfigError("sde: measure does not match the oracle");
    for (std::size_t i = 0; i < m.knots.size(); ++i)
        if (std::abs(m.knots[i] - measure.knots[i]) > 1e-12 ||
            std::abs(m.cdf[i] - measure.cdf[i]) > 1e-12)
            throw ConfigError("sde: measure does not match the oracle");
}

int step_count(double q_bar, double delta) {
    return static_cast<int>(std::floor(q_bar / delta + 1e-9));
}

}  // namespace

SdePaths simulate(const ParisiOracle& oracle, const ParisiMeasure& measure,
                  double beta, double delta, double q_bar, std::size_t n_paths,
                  std::uint64_t seed) {
    check_match(oracle, measure, beta);
    if (!(delta > 0.0)) throw ValidationError("sde: delta must be positive");
    if (!(q_bar >= 0.0 && q_bar <= 1.0))
        throw ValidationError("sde: q_bar outside [0,1]");
    if (n_paths < 1) throw ValidationError("sde: need at least one path");
    const int K = step_count(q_bar, delta);

    SdePaths out;
    out.n_paths = n_paths;
    out.brownian_seed = seed;
    out.t_grid.resize(K + 1);
    for (int k = 0; k <= K; ++k) out.t_grid[k] = k * delta;
    out.X.assign(static_cast<std::size_t>(K + 1) * n_paths, 0.0);
    out.Z.assign(static_cast<std::size_t>(K + 1) * n_paths, 0.0);

    const CounterRng rng(seed, 4);
    const double sdelta = std::sqrt(delta);
    for (int k = 1; k <= K; ++k) {
        const double t = k * delta;
        const auto row = oracle.row(t);
        const double mu_t = measure.mu_at(t);
        const double* xp = &out.X[static_cast<std::size_t>(k - 1) * n_paths];
        const double* zp = &out.Z[static_cast<std::size_t>(k - 1) * n_paths];
        double* xn = &out.X[static_cast<std::size_t>(k) * n_paths];
        double* zn = &out.Z[static_cast<std::size_t>(k) * n_paths];
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double db =
                sdelta * rng.normal(p * static_cast<std::uint64_t>(K) + (k - 1));
            xn[p] = xp[p] + beta * beta * mu_t * row.dphi(xp[p]) * delta +
                    beta * db;
            zn[p] = zp[p] + beta * row.d2phi(xp[p]) * db;
        }
    }
    return out;
}

double predicted_energy_closed_form(double beta, const ParisiMeasure& measure) {
    const double qs = measure.q_star();
    return beta / 2.0 * (1.0 - (1.0 - qs) * (1.0 - qs)) -
           beta / 2.0 * measure.second_moment();
}

EnergyPrediction predicted_energy(const SdePaths& paths, const ParisiOracle& oracle,
                                  double beta, double q_bar) {
    if (std::abs(oracle.beta() - beta) > 1e-12)
        throw ConfigError("sde: beta does not match the oracle");
    // The grid stops at floor(q_bar/delta) steps, so the endpoint may fall up
    // to one step short of q_bar; anything beyond that is a real mismatch.
    const double step =
        paths.t_grid.size() > 1 ? paths.t_grid[1] - paths.t_grid[0] : 0.0;
    if (paths.t_grid.empty() || paths.t_grid.back() > q_bar + 1e-9 ||
        paths.t_grid.back() < q_bar - step - 1e-9)
        throw ConfigError("sde: paths horizon does not cover q_bar");
    EnergyPrediction out;
    out.closed_form = predicted_energy_closed_form(beta, oracle.measure());

    const std::size_t K = paths.t_grid.size() - 1;
    double prev_mean = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
        const auto row = oracle.row(paths.t_grid[k]);
        double acc = 0.0;
        for (std::size_t p = 0; p < paths.n_paths; ++p)
            acc += row.d2phi(paths.x(p, k));
        const double mean = beta * acc / static_cast<double>(paths.n_paths);
        if (k > 0)
            out.path_estimate +=
                0.5 * (mean + prev_mean) * (paths.t_grid[k] - paths.t_grid[k - 1]);
        prev_mean = mean;
    }
    return out;
}

IdentityReport identity_suite(const SdePaths& paths, const ParisiOracle& oracle,
                              const ParisiMeasure& measure, double beta) {
    check_match(oracle, measure, beta);
    IdentityReport rep;
    const std::size_t K = paths.t_grid.size() - 1;
    for (std::size_t k = 0; k <= K; ++k) {
        const double t = paths.t_grid[k];
        const auto row = oracle.row(t);
        double s_d1 = 0.0, s_d2sq = 0.0, s_d2 = 0.0, s_gap = 0.0;
        for (std::size_t p = 0; p < paths.n_paths; ++p) {
            const double xv = paths.x(p, k);
            const double d1 = row.dphi(xv);
            const double d2 = row.d2phi(xv);
            s_d1 += d1 * d1;
            s_d2 += d2;
            s_d2sq += beta * beta * d2 * d2;
            const double gap = paths.z(p, k) - d1;
            s_gap += gap * gap;
        }
        const double np = static_cast<double>(paths.n_paths);
        const double tail = measure.mu_avg(t, 1.0) * (1.0 - t);
        rep.t.push_back(t);
        rep.e_dphi_sq.push_back(s_d1 / np);
        rep.e_beta_d2_sq.push_back(s_d2sq / np);
        rep.e_d2phi.push_back(s_d2 / np);
        rep.tail_mu.push_back(tail);
        rep.max_dphi_sq_dev = std::max(rep.max_dphi_sq_dev, std::abs(s_d1 / np - t));
        rep.max_beta_d2_sq_dev =
            std::max(rep.max_beta_d2_sq_dev, std::abs(s_d2sq / np - 1.0));
        rep.max_d2phi_dev = std::max(rep.max_d2phi_dev, std::abs(s_d2 / np - tail));
        rep.max_martingale_gap = std::max(rep.max_martingale_gap, s_gap / np);
    }
    return rep;
}

std::vector<double> se_normalizers(const ParisiOracle& oracle,
                                   const ParisiMeasure& measure, double beta,
                                   double delta, double q_bar, std::size_t n_paths,
                                   std::uint64_t seed, double x_init) {
    check_match(oracle, measure, beta);
    if (!(delta > 0.0)) throw ValidationError("sde: delta must be positive");
    if (n_paths < 1) throw ValidationError("sde: need at least one path");
    const int K = step_count(q_bar, delta);
    std::vector<double> div(static_cast<std::size_t>(K) + 1);

    const CounterRng rng(seed, 4);
    const double sdelta = std::sqrt(delta);
    const auto steps = static_cast<std::uint64_t>(K) + 1;
    std::vector<double> x(n_paths, x_init);
    for (int k = 0; k <= K; ++k) {
        const double t = k * delta;
        const auto row = oracle.row(t);
        const double mu_t = measure.mu_at(t);
        // Advance first, then measure: divisor k normalizes the exact field
        // the iteration divides, so it must see the post-advance state.
        double acc = 0.0;
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double db =
                sdelta * rng.normal(p * steps + static_cast<std::uint64_t>(k));
            x[p] += beta * beta * mu_t * row.dphi(x[p]) * delta + beta * db;
            const double g = beta * row.d2phi(x[p]);
            acc += g * g;
        }
        div[static_cast<std::size_t>(k)] =
            std::sqrt(acc / static_cast<double>(n_paths));
    }
    return div;
}

void export_identity_csv(const IdentityReport& rep,
                         const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open " + path.string());
    os << "t,e_dphi_sq,e_beta_d2phi_sq,e_d2phi,tail_mu\n";
    for (std::size_t i = 0; i < rep.t.size(); ++i)
        os << rep.t[i] << ',' << rep.e_dphi_sq[i] << ',' << rep.e_beta_d2_sq[i]
           << ',' << rep.e_d2phi[i] << ',' << rep.tail_mu[i] << '\n';
    os << std::flush;
    if (!os) throw ValidationError("short write to " + path.string());
}

}  // namespace skamp
