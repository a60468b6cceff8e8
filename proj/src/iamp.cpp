#include "skamp/iamp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "skamp/rng.hpp"

namespace skamp {

namespace {

double resolve_q_bar(const IampParams& p, const ParisiOracle& oracle) {
    return (p.q_bar < 0.0) ? oracle.q_star() : p.q_bar;
}

int horizon(double q_bar, double delta) {
    return static_cast<int>(std::floor(q_bar / delta + 1e-9));
}

}  // namespace

void IampParams::validate(const ParisiOracle& oracle) const {
    if (!(beta > 0.0)) throw ValidationError("iamp: beta must be positive");
    if (std::abs(beta - oracle.beta()) > 1e-12)
        throw ConfigError("iamp: params.beta does not match the oracle");
    if (!(delta > 0.0 && delta <= 0.25))
        throw ValidationError("iamp: delta must lie in (0, 0.25]");
    if (!(M > 0.0)) throw ValidationError("iamp: truncation level must be positive");
    const double qb = resolve_q_bar(*this, oracle);
    if (!(qb >= 0.0 && qb <= 1.0)) throw ValidationError("iamp: q_bar outside [0,1]");
    if (qb > 0.0 && horizon(qb, delta) < 1)
        throw ValidationError("iamp: q_bar below one step");
    if (mode == NormalizationMode::StateEvolution &&
        se_divisors.size() < static_cast<std::size_t>(horizon(qb, delta)) + 1)
        throw ConfigError("iamp: StateEvolution mode needs divisors for every step");
}

int IampParams::horizon_steps(const ParisiOracle& oracle) const {
    return horizon(resolve_q_bar(*this, oracle), delta);
}

IampState iamp_init(std::size_t n, std::uint64_t seed, const IampParams& params) {
    if (n < 1) throw ValidationError("iamp: n must be positive");
    IampState s;
    s.u_prev.assign(n, 0.0);
    s.u_curr.resize(n);
    const CounterRng rng(seed, 3);
    for (std::size_t i = 0; i < n; ++i)
        s.u_curr[i] = std::clamp(rng.normal(i), -params.M, params.M);
    s.x_curr.assign(n, params.x0_ones ? 1.0 : 0.0);
    s.g_prev.assign(n, 0.0);  // pairs with u_prev = 0
    s.g_curr.assign(n, 1.0);
    s.z_accum.assign(n, 0.0);
    s.az_accum.assign(n, 0.0);
    s.b_curr = 0.0;
    s.k = 0;
    return s;
}

void iamp_step(const CouplingMatrix& A, IampState& state, const ParisiOracle& oracle,
               const IampParams& params) {
    const std::size_t n = state.u_curr.size();
    if (static_cast<std::size_t>(A.n) != n)
        throw ValidationError("iamp_step: matrix dimension mismatch");
    const int k = state.k;
    const double t = k * params.delta;
    const double beta = params.beta;
    const double delta = params.delta;
    const double sdelta = std::sqrt(delta);
    const auto row = oracle.row(t);
    const double mu_t = oracle.measure().mu_at(t);

    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = state.g_curr[i] * state.u_curr[i];

    std::vector<double> af(n);
    A.matvec(f, af);

    std::vector<double> u_next(n);
    for (std::size_t i = 0; i < n; ++i) {
        u_next[i] = af[i] - state.b_curr * state.g_prev[i] * state.u_prev[i];
        if (!std::isfinite(u_next[i]))
            throw NumericError("iamp_step: non-finite iterate at step " +
                               std::to_string(k + 1));
        u_next[i] = std::clamp(u_next[i], -params.M, params.M);
    }

    // Field advance uses the pre-step iterate u^k, then g is re-read at the
    // fresh field values.
    std::vector<double> x_next(n), g_next(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xc = state.x_curr[i];
        x_next[i] = xc + beta * beta * mu_t * row.dphi(xc) * delta +
                    beta * sdelta * state.u_curr[i];
        g_next[i] = row.d2phi(x_next[i]);
    }

    if (params.mode == NormalizationMode::Empirical) {
        double norm2 = 0.0;
        for (double g : g_next) norm2 += g * g;
        if (!(norm2 > 0.0))
            throw NumericError("iamp_step: vanishing curvature norm at step " +
                               std::to_string(k));
        const double scale = std::sqrt(static_cast<double>(n) / norm2);
        for (auto& g : g_next) g *= scale;
    } else {
        const double div = params.se_divisors[static_cast<std::size_t>(k)];
        if (!(div > 0.0))
            throw ConfigError("iamp_step: nonpositive divisor at step " +
                              std::to_string(k));
        for (auto& g : g_next) g = beta * g / div;
    }

    double gsum = 0.0;
    for (double g : g_next) gsum += g;

    if (k >= 1)
        for (std::size_t i = 0; i < n; ++i) {
            state.z_accum[i] += sdelta * f[i];
            state.az_accum[i] += sdelta * af[i];
        }

    state.u_prev = std::move(state.u_curr);
    state.u_curr = std::move(u_next);
    state.x_curr = std::move(x_next);
    state.g_prev = std::move(state.g_curr);
    state.g_curr = std::move(g_next);
    state.b_curr = gsum / static_cast<double>(n);
    state.k = k + 1;
}

IampResult run_iamp(const CouplingMatrix& A, const ParisiOracle& oracle,
                    const IampParams& params, std::uint64_t seed, bool keep_u_log) {
    params.validate(oracle);
    const std::size_t n = static_cast<std::size_t>(A.n);
    const int k_star = params.horizon_steps(oracle);

    IampState s = iamp_init(n, seed, params);
    IampResult out;
    for (int k = 0; k <= k_star; ++k) {
        if (keep_u_log) out.u_log.push_back(s.u_curr);
        double un2 = 0.0;
        for (double v : s.u_curr) un2 += v * v;
        const double b_entering = s.b_curr;
        iamp_step(A, s, oracle, params);
        out.flops += 2 * static_cast<std::uint64_t>(n) * n;

        double ez = 0.0;
        for (std::size_t i = 0; i < n; ++i) ez += s.z_accum[i] * s.az_accum[i];
        out.trace.k.push_back(k);
        out.trace.t.push_back(k * params.delta);
        out.trace.b.push_back(b_entering);
        out.trace.u_norm2_over_n.push_back(un2 / static_cast<double>(n));
        out.trace.mean_g.push_back(s.b_curr);
        out.trace.energy_partial_z.push_back(ez / (2.0 * static_cast<double>(n)));
    }
    out.energy = out.trace.energy_partial_z.back();
    out.z = std::move(s.z_accum);
    out.x_final = std::move(s.x_curr);
    return out;
}

NonlinearitySequence make_iamp_nonlinearity(const ParisiOracle& oracle,
                                            const IampParams& params) {
    params.validate(oracle);
    if (params.mode != NormalizationMode::StateEvolution)
        throw ConfigError(
            "iamp nonlinearity: componentwise form needs StateEvolution divisors");
    const double beta = params.beta;
    const double delta = params.delta;
    const double sdelta = std::sqrt(delta);
    const double M = params.M;
    const double x_init = params.x0_ones ? 1.0 : 0.0;
    const ParisiOracle* o = &oracle;
    const auto divisors = params.se_divisors;

    auto clip = [M](double u) { return std::clamp(u, -M, M); };

    // Replays the scalar field recursion over the history u^0..u^{m_stop}.
    auto field_at = [=](std::span<const double> hist, int m_stop) {
        double x = x_init;
        for (int m = 0; m <= m_stop; ++m) {
            const double t = m * delta;
            const auto row = o->row(t);
            x += beta * beta * o->measure().mu_at(t) * row.dphi(x) * delta +
                 beta * sdelta * clip(hist[m]);
        }
        return x;
    };

    NonlinearitySequence f;
    f.memory_depth = -1;
    f.lipschitz = beta * beta;
    f.eval = [=](int k, std::span<const double> hist, double) {
        if (k == 0) return clip(hist[0]);
        const double x = field_at(hist, k - 1);
        const auto row = o->row((k - 1) * delta);
        const double div = divisors[static_cast<std::size_t>(k - 1)];
        return beta * row.d2phi(x) / div * clip(hist[k]);
    };
    f.partial = [=](int k, int j, std::span<const double> hist, double) {
        const double ind_j = (std::abs(hist[j]) < M) ? 1.0 : 0.0;
        if (k == 0) return ind_j;
        const auto row = o->row((k - 1) * delta);
        const double div = divisors[static_cast<std::size_t>(k - 1)];
        const double x = field_at(hist, k - 1);
        if (j == k) return beta * row.d2phi(x) / div * ind_j;
        // d x^{k-1} / d u^j through the field recursion.
        double jac = beta * sdelta * ind_j;
        double xm = field_at(hist, j);
        for (int m = j + 1; m <= k - 1; ++m) {
            const double t = m * delta;
            const auto rm = o->row(t);
            jac *= 1.0 + beta * beta * o->measure().mu_at(t) * rm.dphi_slope(xm) * delta;
            xm += beta * beta * o->measure().mu_at(t) * rm.dphi(xm) * delta +
                  beta * sdelta * clip(hist[m]);
        }
        return beta * row.d2phi_slope(x) / div * jac * clip(hist[k]);
    };
    return f;
}

void export_iamp_trace_csv(const IampTrace& trace, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open " + path.string());
    os << "k,t,b_k,u_norm2_over_n,mean_g,energy_partial_z\n";
    for (std::size_t i = 0; i < trace.k.size(); ++i)
        os << trace.k[i] << ',' << trace.t[i] << ',' << trace.b[i] << ','
           << trace.u_norm2_over_n[i] << ',' << trace.mean_g[i] << ','
           << trace.energy_partial_z[i] << '\n';
    os << std::flush;
    if (!os) throw ValidationError("short write to " + path.string());
}

}  // namespace skamp
