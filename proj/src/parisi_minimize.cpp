#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "skamp/detail/parisi_march.hpp"
#include "skamp/parisi.hpp"

namespace skamp {

namespace {

// Euclidean projection onto { w >= 0, sum w = 1 }.
std::vector<double> project_simplex(std::vector<double> w) {
    std::vector<double> u = w;
    std::sort(u.begin(), u.end(), std::greater<>());
    double run = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        run += u[k];
        const double cand = (run - 1.0) / static_cast<double>(k + 1);
        if (u[k] - cand > 0.0) theta = cand;
    }
    for (auto& x : w) x = std::max(0.0, x - theta);
    return w;
}

std::vector<double> cdf_from_weights(const std::vector<double>& w) {
    std::vector<double> cdf(w.size());
    double run = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        run += w[k];
        cdf[k] = std::min(run, 1.0);
    }
    cdf.back() = 1.0;
    return cdf;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct StageOutcome {
    std::vector<double> w;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

// Projected gradient over atom weights on a fixed knot set.
StageOutcome stage_minimize(double beta, const std::vector<double>& knots,
                            std::vector<double> w, const PdeGrid& grid,
                            const MinimizeOptions& opts) {
    const int K = static_cast<int>(knots.size()) - 1;

    ParisiMeasure shape;  // layout only; cdf swapped per evaluation
    shape.knots = knots;
    shape.cdf = std::vector<double>(knots.size(), 1.0);
    const auto ctx = detail::make_march_context(beta, shape, grid);
    const std::size_t top_line = ctx.line_index(knots[K]);

    const double exact_scale = beta * beta / 2.0;
    auto exact_term = [&](const std::vector<double>& cdf) {
        double acc = 0.0;
        for (int k = 0; k < K; ++k)
            acc += cdf[k] * 0.5 * (knots[k + 1] * knots[k + 1] - knots[k] * knots[k]);
        return -exact_scale * acc;
    };

    ParisiMeasure probe = shape;
    // One smooth objective for the whole search: march the full axis from the
    // exact terminal row. Switching to the closed-form tail at saturated knots
    // would step the value by the march truncation error whenever a probe
    // crosses cdf = 1, which would wreck the line search near saturation.
    auto objective = [&](const std::vector<double>& cdf) {
        probe.cdf = cdf;
        auto row = detail::closed_form_row(beta, 1.0, ctx);
        const double p0 = detail::march_phi(beta, probe, ctx, top_line, row, nullptr);
        return p0 + exact_term(cdf);
    };

    // Value plus every gradient component from one adjoint march: exact
    // derivatives of the discrete objective, so the line search and the
    // stationarity test agree to roundoff and the tolerance can be driven
    // well below the march truncation error.
    auto value_and_gradient = [&](const std::vector<double>& cdf,
                                  std::vector<double>& grad_w) {
        probe.cdf = cdf;
        const auto mg = detail::march_phi_with_gradient(beta, probe, ctx);
        std::vector<double> grad_cdf(knots.size(), 0.0);
        std::size_t i = 0;
        for (int j = 0; j < K; ++j) {
            while (ctx.lines[i] < knots[j] - 1e-12) ++i;
            double acc = 0.0;
            while (ctx.lines[i] < knots[j + 1] - 1e-12) {
                acc += mg.d_mu_bar[i];
                ++i;
            }
            grad_cdf[j] = acc - exact_scale * 0.5 *
                                    (knots[j + 1] * knots[j + 1] - knots[j] * knots[j]);
        }
        // Chain rule onto the increments: cdf_j = sum_{i <= j} w_i.
        double suffix = 0.0;
        for (int k = K; k >= 0; --k) {
            if (k < K) suffix += grad_cdf[k];
            grad_w[k] = suffix;
        }
        return mg.phi0 + exact_term(cdf);
    };

    StageOutcome out;
    double fallback = (opts.initial_step > 0.0) ? opts.initial_step : 0.5 / (beta * beta);
    std::vector<double> g(knots.size());
    double value = value_and_gradient(cdf_from_weights(w), g);
    out.objective_trace.push_back(value);

    std::vector<double> w_prev, g_prev;
    const double pg_probe = 0.01;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        out.iterations = iter + 1;

        std::vector<double> moved(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) moved[k] = w[k] - pg_probe * g[k];
        moved = project_simplex(std::move(moved));
        double pg2 = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double d = (w[k] - moved[k]) / pg_probe;
            pg2 += d * d;
        }
        out.grad_norm = std::sqrt(pg2);
        if (out.grad_norm <= opts.tol) {
            out.converged = true;
            break;
        }

        // Spectral (Barzilai-Borwein) trial step: matches the inverse local
        // curvature along the last displacement, which is what makes progress
        // along the nearly flat direction set by the support edge. Backtracking
        // keeps the iteration monotone, so the trace stays a certificate.
        double step = fallback;
        if (!w_prev.empty()) {
            double ss = 0.0, sy = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) {
                const double s = w[k] - w_prev[k];
                ss += s * s;
                sy += s * (g[k] - g_prev[k]);
            }
            if (sy > 0.0) step = std::clamp(ss / sy, 1e-8, 1e8);
        }

        bool accepted = false;
        for (int back = 0; back < 60; ++back) {
            std::vector<double> trial(w.size());
            for (std::size_t k = 0; k < w.size(); ++k) trial[k] = w[k] - step * g[k];
            trial = project_simplex(std::move(trial));
            std::vector<double> delta(w.size());
            for (std::size_t k = 0; k < w.size(); ++k) delta[k] = w[k] - trial[k];
            const double decrease = dot(g, delta);
            const double trial_value = objective(cdf_from_weights(trial));
            if (trial_value <= value - 1e-4 * decrease && trial_value < value) {
                w_prev = w;
                g_prev = g;
                w = std::move(trial);
                value = trial_value;
                accepted = true;
                fallback = step * 1.6;
                break;
            }
            step *= 0.5;
            if (step < 1e-14) break;
        }
        if (!accepted) break;  // at the numerical floor; convergence check decides

        value = value_and_gradient(cdf_from_weights(w), g);
        out.objective_trace.push_back(value);
    }

    out.w = std::move(w);
    out.value = value;
    return out;
}

// Halve every interval whose right-end jump carries more than `mass`, keeping
// knots at least `gap_floor` apart. Returns true when anything was split.
bool subdivide(std::vector<double>& knots, std::vector<double>& w, double mass,
               double gap_floor) {
    std::vector<double> nk{knots[0]}, nw{w[0]};
    bool split = false;
    for (std::size_t j = 1; j < knots.size(); ++j) {
        const double gap = knots[j] - knots[j - 1];
        if (w[j] > mass && gap >= 2.0 * gap_floor) {
            nk.push_back(0.5 * (knots[j - 1] + knots[j]));
            nw.push_back(0.5 * w[j]);
            nk.push_back(knots[j]);
            nw.push_back(0.5 * w[j]);
            split = true;
        } else {
            nk.push_back(knots[j]);
            nw.push_back(w[j]);
        }
    }
    knots = std::move(nk);
    w = std::move(nw);
    return split;
}

}  // namespace

MinimizeResult minimize_parisi(double beta, int K, const PdeGrid& grid,
                               const MinimizeOptions& opts) {
    if (K < 1) throw ValidationError("minimize_parisi: need K >= 1");
    if (opts.refine_rounds < 0)
        throw ValidationError("minimize_parisi: refine_rounds must be >= 0");
    grid.validate(beta);

    std::vector<double> knots(K + 1);
    for (int k = 0; k <= K; ++k) knots[k] = static_cast<double>(k) / K;

    // Warm start: a linear ramp of the distribution function up to roughly
    // 1 - 1/beta, which has the right large-beta shape.
    const double q0 = std::max(2.0 / K, 1.0 - 1.0 / beta);
    std::vector<double> w(K + 1, 0.0);
    {
        double prev = 0.0;
        for (int k = 0; k <= K; ++k) {
            const double c = std::min(1.0, knots[k] / q0);
            w[k] = c - prev;
            prev = c;
        }
        w = project_simplex(std::move(w));
    }

    auto stage = stage_minimize(beta, knots, std::move(w), grid, opts);
    int total_iters = stage.iterations;
    std::vector<double> trace = std::move(stage.objective_trace);

    const double gap_floor = 1.5 * grid.dt;
    for (int r = 0; r < opts.refine_rounds && stage.converged; ++r) {
        std::vector<double> rk = knots, rw = stage.w;
        if (!subdivide(rk, rw, opts.refine_mass, gap_floor)) break;
        auto next = stage_minimize(beta, rk, std::move(rw), grid, opts);
        total_iters += next.iterations;
        trace.insert(trace.end(), next.objective_trace.begin(),
                     next.objective_trace.end());
        knots = std::move(rk);
        stage = std::move(next);
    }

    MinimizeResult res;
    res.iterations = total_iters;
    res.grad_norm = stage.grad_norm;
    res.converged = stage.converged;
    res.objective_trace = std::move(trace);
    res.measure = ParisiMeasure::from_increments(knots, stage.w);
    // Report through the public functional so the value agrees with what a
    // caller re-evaluating the measure sees.
    res.value = parisi_functional(beta, res.measure, grid);
    if (!res.converged)
        throw MinimizeStalled("minimize_parisi: projected-gradient norm " +
                                  std::to_string(res.grad_norm) + " above tol after " +
                                  std::to_string(res.iterations) + " iterations",
                              res);
    return res;
}

}  // namespace skamp
