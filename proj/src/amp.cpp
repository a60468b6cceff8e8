#include "skamp/amp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace skamp {

void validate_nonlinearity(const NonlinearitySequence& f, int max_k,
                           std::uint64_t seed) {
    if (!f.eval || !f.partial)
        throw ValidationError("nonlinearity: eval and partial must both be set");
    const CounterRng rng(seed, 40);
    std::uint64_t c = 0;
    const double h = 1e-6;
    for (int k = 0; k <= max_k; ++k) {
        for (int rep = 0; rep < 8; ++rep) {
            std::vector<double> hist(k + 1);
            for (auto& v : hist) v = rng.normal(c++);
            const double y = rng.normal(c++);
            for (int j = 0; j <= k; ++j) {
                auto probe = hist;
                probe[j] = hist[j] + h;
                const double up = f.eval(k, probe, y);
                probe[j] = hist[j] - h;
                const double dn = f.eval(k, probe, y);
                const double fd = (up - dn) / (2 * h);
                const double an = f.partial(k, j, hist, y);
                if (std::abs(fd - an) > 1e-5)
                    throw ValidationError(
                        "nonlinearity: partial(" + std::to_string(k) + "," +
                        std::to_string(j) + ") off finite difference by " +
                        std::to_string(std::abs(fd - an)));
            }
        }
    }
}

AmpTrajectory make_trajectory(std::vector<double> u0, std::vector<double> y) {
    AmpTrajectory t;
    t.n = u0.size();
    if (t.n == 0) throw ValidationError("amp: empty initial iterate");
    if (!y.empty() && y.size() != t.n)
        throw ValidationError("amp: y dimension mismatch");
    t.y = std::move(y);
    t.iterates.push_back(std::move(u0));
    return t;
}

void amp_step(const CouplingMatrix& A, AmpTrajectory& traj,
              const NonlinearitySequence& f, const AmpStepOptions& opts) {
    const std::size_t n = traj.n;
    if (static_cast<std::size_t>(A.n) != n)
        throw ValidationError("amp_step: matrix dimension mismatch");
    if (!f.eval || !f.partial)
        throw ValidationError("nonlinearity: eval and partial must both be set");
    const int k = static_cast<int>(traj.iterates.size()) - 1;

    std::vector<double> hist(k + 1);
    auto fill_hist = [&](std::size_t i) {
        for (int j = 0; j <= k; ++j) hist[j] = traj.iterates[j][i];
    };
    auto y_at = [&](std::size_t i) { return traj.y.empty() ? 0.0 : traj.y[i]; };

    std::vector<double> fk(n);
    for (std::size_t i = 0; i < n; ++i) {
        fill_hist(i);
        fk[i] = f.eval(k, hist, y_at(i));
    }

    std::vector<double> row(k, 0.0);  // b_{k,1} .. b_{k,k}
    if (opts.onsager) {
        for (std::size_t i = 0; i < n; ++i) {
            fill_hist(i);
            for (int j = 1; j <= k; ++j) row[j - 1] += f.partial(k, j, hist, y_at(i));
        }
        for (auto& b : row) b /= static_cast<double>(n);
    }

    std::vector<double> next(n);
    A.matvec(fk, next);
    if (opts.onsager)
        for (int j = 1; j <= k; ++j) {
            const double b = row[j - 1];
            const auto& fj = traj.f_history[j - 1];
            for (std::size_t i = 0; i < n; ++i) next[i] -= b * fj[i];
        }

    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(next[i]))
            throw NumericError("amp_step: non-finite value in iterate " +
                               std::to_string(k + 1));

    traj.f_history.push_back(std::move(fk));
    traj.onsager.push_back(std::move(row));
    traj.iterates.push_back(std::move(next));
}

std::vector<double> state_evolution(
    const NonlinearitySequence& f,
    const std::function<std::pair<double, double>(const CounterRng&, std::uint64_t)>& law,
    int K, int mc_samples, std::uint64_t seed) {
    if (K < 1) throw ValidationError("state_evolution: K >= 1 required");
    if (mc_samples < 1000) throw ValidationError("state_evolution: mc_samples >= 1000");
    const std::size_t S = static_cast<std::size_t>(mc_samples);

    const CounterRng init_rng(seed, 41);
    const CounterRng path_rng(seed, 42);
    std::vector<double> u0(S), y(S);
    for (std::size_t s = 0; s < S; ++s) {
        auto [u, yy] = law(init_rng, s);
        u0[s] = u;
        y[s] = yy;
    }
    // Common random numbers across bordered extensions.
    std::vector<double> xi(S * K);
    for (std::size_t s = 0; s < S; ++s)
        for (int k = 0; k < K; ++k) xi[s * K + k] = path_rng.normal(s * K + k);

    std::vector<double> qhat(static_cast<std::size_t>(K) * K, 0.0);
    std::vector<double> chol(static_cast<std::size_t>(K) * K, 0.0);
    std::vector<double> U(S * K, 0.0);       // latent Gaussians U_1..U_K
    std::vector<double> fvals(S * K, 0.0);   // f_0 .. f_{K-1} per sample
    std::vector<double> hist;

    for (int k = 0; k < K; ++k) {
        for (std::size_t s = 0; s < S; ++s) {
            hist.resize(k + 1);
            hist[0] = u0[s];
            for (int j = 1; j <= k; ++j) hist[j] = U[s * K + (j - 1)];
            fvals[s * K + k] = f.eval(k, hist, y[s]);
        }
        for (int j = 0; j <= k; ++j) {
            double acc = 0.0;
            for (std::size_t s = 0; s < S; ++s)
                acc += fvals[s * K + k] * fvals[s * K + j];
            const double q = acc / static_cast<double>(S);
            qhat[static_cast<std::size_t>(k) * K + j] = q;
            qhat[static_cast<std::size_t>(j) * K + k] = q;
        }

        // Bordered Cholesky row for U_{k+1}.
        double* lrow = &chol[static_cast<std::size_t>(k) * K];
        for (int j = 0; j < k; ++j) {
            double acc = qhat[static_cast<std::size_t>(k) * K + j];
            const double* lj = &chol[static_cast<std::size_t>(j) * K];
            for (int m = 0; m < j; ++m) acc -= lrow[m] * lj[m];
            lrow[j] = (lj[j] > 0.0) ? acc / lj[j] : 0.0;
        }
        double d2 = qhat[static_cast<std::size_t>(k) * K + k];
        for (int m = 0; m < k; ++m) d2 -= lrow[m] * lrow[m];
        const double scale = std::max(1.0, qhat[static_cast<std::size_t>(k) * K + k]);
        if (d2 < -10.0 * scale / std::sqrt(static_cast<double>(S)))
            throw NumericError("state_evolution: covariance not PSD at step " +
                               std::to_string(k + 1));
        lrow[k] = std::sqrt(std::max(d2, 0.0));  // PSD projection of MC noise

        if (k + 1 < K)
            for (std::size_t s = 0; s < S; ++s) {
                double acc = 0.0;
                for (int m = 0; m <= k; ++m) acc += lrow[m] * xi[s * K + m];
                U[s * K + k] = acc;
            }
    }
    return qhat;
}

std::vector<double> empirical_overlap_check(const AmpTrajectory& traj) {
    const std::size_t m = traj.iterates.size();
    if (m == 0) throw ValidationError("empirical_overlap_check: empty trajectory");
    std::vector<double> gram(m * m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < traj.n; ++i)
                acc += traj.iterates[a][i] * traj.iterates[b][i];
            gram[a * m + b] = gram[b * m + a] = acc / static_cast<double>(traj.n);
        }
    return gram;
}

void export_trajectory_csv(const AmpTrajectory& traj,
                           const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open " + path.string());
    os << "k,mean,second_moment,min,max\n";
    for (std::size_t k = 0; k < traj.iterates.size(); ++k) {
        const auto& u = traj.iterates[k];
        double mean = 0.0, m2 = 0.0;
        double lo = u[0], hi = u[0];
        for (double v : u) {
            mean += v;
            m2 += v * v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double dn = static_cast<double>(u.size());
        os << k << ',' << mean / dn << ',' << m2 / dn << ',' << lo << ',' << hi
           << '\n';
    }
}

}  // namespace skamp
