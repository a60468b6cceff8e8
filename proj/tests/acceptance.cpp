// Acceptance gate: ten pinned criteria, one [PASS]/[FAIL] line each, exit
// code equal to the number of failures. Every tolerance is a named constant
// below; none is read from the environment or adjusted at runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "skamp/amp.hpp"
#include "skamp/diagnostics.hpp"
#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"
#include "skamp/iamp.hpp"
#include "skamp/parisi.hpp"
#include "skamp/pipeline.hpp"
#include "skamp/rng.hpp"
#include "skamp/rounding.hpp"
#include "skamp/sde.hpp"

using namespace skamp;
using Clock = std::chrono::steady_clock;

namespace {

// ---- pinned configuration and tolerances -------------------------------

// 1: minimized functional per unit beta at beta = 5, K = 64, default grids
constexpr double C1_BETA = 5.0;
constexpr int C1_KNOTS = 64;
constexpr double C1_VALUE_LO = 0.755, C1_VALUE_HI = 0.80;
constexpr double C1_BUDGET_SEC = 600.0;

// 2: effective-diffusion identities at beta = 2 with 1e5 paths, step 1e-3
constexpr std::size_t C2_PATHS = 100000;
constexpr double C2_DELTA = 1e-3;
constexpr double C2_TOL = 0.02;
constexpr double C2_BUDGET_SEC = 300.0;

// 3: terminal-layer closed form against independent quadrature
constexpr double C3_TOL = 1e-4;
constexpr double C3_X_RANGE = 4.0;

// 4: iterate covariance at n = 4000, beta = 2, delta = 0.02
constexpr std::size_t C4_N = 4000;
constexpr double C4_DELTA = 0.02;
constexpr std::uint64_t C4_SEED = 4;
constexpr int C4_PAIR_STRIDE = 4;  // tested pairs: iterates at k = 0, 4, 8, ...
constexpr double C4_OVERLAP_TOL = 0.1;
constexpr double C4_VARIANCE_TOL = 0.15;
constexpr double C4_CONTROL_FLOOR = 0.2;

// 5: end-to-end energy at n = 2000, beta = 5
constexpr std::size_t C5_N = 2000;
constexpr double C5_DELTA = 0.01;
constexpr double C5_TRUNCATION = 8.0;
constexpr double C5_MEAN_FLOOR = 0.68;
constexpr double C5_SPECTRAL_BASELINE = 0.6366197723675814;  // 2/pi
constexpr double C5_SE_TOL = 0.05;
constexpr double C5_BUDGET_SEC = 600.0;
const std::vector<std::uint64_t> FIVE_SEEDS{1, 2, 3, 4, 5};

// 7: TAP residual decrease when delta halves at beta = 2, n = 2000
constexpr double C7_DELTA_COARSE = 0.02, C7_DELTA_FINE = 0.01;

// 8: Rademacher universality tolerance on the five-seed mean
constexpr double C8_TOL = 0.03;

// 9: MAXCUT on G(1000, 0.5)
constexpr std::int64_t C9_N = 1000;
constexpr double C9_P = 0.5;
constexpr double C9_EXCESS_LO = 0.55, C9_EXCESS_HI = 0.80;
constexpr double C9_IDENTITY_TOL = 1e-6;
const std::vector<std::uint64_t> C9_SEEDS{1, 2, 3};

// 10: wall-time ratio between n = 2000 and n = 500 instances
constexpr double C10_RATIO_LO = 10.0, C10_RATIO_HI = 26.0;
const std::vector<std::uint64_t> C10_SEEDS{11, 12, 13};

// beta = 2 reference solution shared by criteria 2, 3, 4, 6, 7, 10: fine
// grid, tight tolerance, edge refinement so the top of the support is
// resolved to the lattice limit.
ExperimentConfig beta2_config() {
    ExperimentConfig c;
    c.beta = 2.0;
    c.K = 64;
    c.dt = 1e-3;
    c.dx = 0.02;
    c.minimize_tol = 1e-5;
    c.minimize_iters = 5000;
    c.refine_rounds = 4;
    c.cache_dir = "acc_cache";
    c.output_dir = "acc_out";
    return c;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
    int failures = 0;
    void line(int idx, bool ok, const std::string& detail) {
        std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx,
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    void exception(int idx, const std::string& what) {
        line(idx, false, "exception: " + what);
    }
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// every rounding trace from every criterion lands here for criterion 6
struct RoundingLedger {
    std::size_t runs = 0;
    std::size_t steps = 0;
    double worst_step = 0.0;  // most negative energy change seen
    void absorb(const RoundingReport& rep) {
        ++runs;
        steps += rep.monotonicity_trace.size();
        for (double d : rep.monotonicity_trace) worst_step = std::min(worst_step, d);
    }
};

}  // namespace

int main() {
    Gate gate;
    RoundingLedger rounding;

    // ---- criterion 1: Parisi value at desk scale -----------------------
    MinimizeResult b5_min;
    bool b5_ok = false;
    try {
        const auto t0 = Clock::now();
        MinimizeOptions opts;  // default tolerance 1e-4
        opts.max_iters = 4000;
        b5_min = minimize_parisi(C1_BETA, C1_KNOTS, PdeGrid{}, opts);
        const double secs = seconds_since(t0);
        const double per_beta = b5_min.value / C1_BETA;
        const bool in_window = per_beta >= C1_VALUE_LO && per_beta <= C1_VALUE_HI;
        const bool in_budget = secs <= C1_BUDGET_SEC;
        b5_ok = true;
        gate.line(1, in_window && in_budget,
                  fmt("value/beta %.6f in [%.3f, %.3f], %d iterations, %.0f s "
                      "(budget %.0f s)",
                      per_beta, C1_VALUE_LO, C1_VALUE_HI, b5_min.iterations, secs,
                      C1_BUDGET_SEC));
    } catch (const std::exception& e) {
        gate.exception(1, e.what());
    }

    // ---- shared artifacts ----------------------------------------------
    ParisiArtifacts art2;
    bool art2_ok = false;
    try {
        art2 = solve_and_cache_parisi(beta2_config());
        art2_ok = art2.converged;
        if (!art2_ok)
            std::printf("note: beta=2 reference minimize did not converge "
                        "(gradient %.3g)\n",
                        art2.grad_norm);
    } catch (const std::exception& e) {
        std::printf("note: beta=2 reference artifact failed: %s\n", e.what());
    }

    ParisiOracle b5_oracle;
    if (b5_ok) {
        try {
            b5_oracle = solve_pde(C1_BETA, b5_min.measure, PdeGrid{});
        } catch (const std::exception& e) {
            b5_ok = false;
            std::printf("note: beta=5 equation solve failed: %s\n", e.what());
        }
    }

    // ---- criterion 2: effective-diffusion identities -------------------
    if (art2_ok) {
        try {
            const auto& measure = art2.oracle.measure();
            const double qs = art2.oracle.q_star();
            const auto t0 = Clock::now();
            const auto paths = simulate(art2.oracle, measure, 2.0, C2_DELTA, qs,
                                        C2_PATHS, 1234);
            const auto rep = identity_suite(paths, art2.oracle, measure, 2.0);
            const double secs = seconds_since(t0);
            double worst1 = 0.0, worst2 = 0.0, worst3 = 0.0;
            for (double frac : {0.25, 0.5, 1.0}) {
                const double target = frac * qs;
                std::size_t best = 0;
                for (std::size_t i = 1; i < rep.t.size(); ++i)
                    if (std::abs(rep.t[i] - target) < std::abs(rep.t[best] - target))
                        best = i;
                worst1 = std::max(worst1,
                                  std::abs(rep.e_dphi_sq[best] - rep.t[best]));
                worst2 = std::max(worst2, std::abs(rep.e_beta_d2_sq[best] - 1.0));
                worst3 = std::max(worst3,
                                  std::abs(rep.e_d2phi[best] - rep.tail_mu[best]));
            }
            const bool ok = worst1 <= C2_TOL && worst2 <= C2_TOL &&
                            worst3 <= C2_TOL && secs <= C2_BUDGET_SEC;
            gate.line(2, ok,
                      fmt("drift-identity dev %.4f, curvature-identity dev %.4f, "
                          "tail dev %.4f (tol %.2f) at {.25,.5,1}q*, %.0f s",
                          worst1, worst2, worst3, C2_TOL, secs));
        } catch (const std::exception& e) {
            gate.exception(2, e.what());
        }
    } else {
        gate.line(2, false, "beta=2 artifact unavailable");
    }

    // ---- criterion 3: terminal layer against independent quadrature ----
    if (art2_ok) {
        try {
            const oracle::GaussHermite gh(64);
            const double beta = 2.0;
            const double qs = art2.oracle.q_star();
            const double a = beta * std::sqrt(1.0 - qs);
            double worst = 0.0;
            for (std::size_t j = 0; j < art2.oracle.nx(); ++j) {
                const double x = art2.oracle.x_at(j);
                if (std::abs(x) > C3_X_RANGE) continue;
                const double ref = std::log(gh.expect(
                    [&](double z) { return 2.0 * std::cosh(x + a * z); }));
                worst = std::max(worst, std::abs(art2.oracle.phi(qs, x) - ref));
            }
            gate.line(3, worst <= C3_TOL,
                      fmt("max |Phi(q*,x) - quadrature| = %.2e over |x| <= %.0f "
                          "(tol %.0e)",
                          worst, C3_X_RANGE, C3_TOL));
        } catch (const std::exception& e) {
            gate.exception(3, e.what());
        }
    } else {
        gate.line(3, false, "beta=2 artifact unavailable");
    }

    // ---- criterion 4: iterate covariance and Onsager control -----------
    if (art2_ok) {
        try {
            IampParams params;
            params.beta = 2.0;
            params.delta = C4_DELTA;
            const auto A = sample_goe(static_cast<std::int64_t>(C4_N), C4_SEED);
            const auto run = run_iamp(A, art2.oracle, params, C4_SEED, true);

            double var_dev = 0.0;
            for (double v : run.trace.u_norm2_over_n)
                var_dev = std::max(var_dev, std::abs(v - 1.0));

            double overlap = 0.0;
            const auto& L = run.u_log;
            for (std::size_t a = 0; a < L.size(); a += C4_PAIR_STRIDE)
                for (std::size_t b = a + C4_PAIR_STRIDE; b < L.size();
                     b += C4_PAIR_STRIDE) {
                    double d = 0.0;
                    for (std::size_t i = 0; i < C4_N; ++i) d += L[a][i] * L[b][i];
                    overlap = std::max(overlap, std::abs(d) / C4_N);
                }

            // negative control through the general engine, correction off
            IampParams se = params;
            se.mode = NormalizationMode::StateEvolution;
            se.se_divisors =
                se_normalizers(art2.oracle, art2.oracle.measure(), 2.0, C4_DELTA,
                               art2.oracle.q_star(), 20000, 99);
            const auto f = make_iamp_nonlinearity(art2.oracle, se);
            const CounterRng rng(C4_SEED, 3);
            std::vector<double> u0(C4_N);
            for (std::size_t i = 0; i < C4_N; ++i) u0[i] = rng.normal(i);
            auto traj = make_trajectory(std::move(u0));
            AmpStepOptions control;
            control.onsager = false;
            const int k_star = se.horizon_steps(art2.oracle);
            for (int k = 0; k < k_star; ++k) amp_step(A, traj, f, control);
            const auto gram = empirical_overlap_check(traj);
            const std::size_t m = traj.iterates.size();
            double control_worst = 0.0;
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = a + 1; b < m; ++b)
                    control_worst =
                        std::max(control_worst, std::abs(gram[a * m + b]));

            const bool ok = overlap <= C4_OVERLAP_TOL &&
                            var_dev <= C4_VARIANCE_TOL &&
                            control_worst > C4_CONTROL_FLOOR;
            gate.line(4, ok,
                      fmt("stride-%d overlaps max %.3f (tol %.1f), variance dev "
                          "max %.3f (tol %.2f), no-correction control %.1f (> %.1f)",
                          C4_PAIR_STRIDE, overlap, C4_OVERLAP_TOL, var_dev,
                          C4_VARIANCE_TOL, control_worst, C4_CONTROL_FLOOR));
        } catch (const std::exception& e) {
            gate.exception(4, e.what());
        }
    } else {
        gate.line(4, false, "beta=2 artifact unavailable");
    }

    // ---- criterion 5: end-to-end energy at beta = 5 --------------------
    std::vector<double> goe_rounded;
    if (b5_ok) {
        try {
            const auto t0 = Clock::now();
            const auto paths =
                simulate(b5_oracle, b5_oracle.measure(), C1_BETA, 1e-3,
                         b5_oracle.q_star(), 20000, 77);
            const double se_pred =
                predicted_energy(paths, b5_oracle, C1_BETA, b5_oracle.q_star())
                    .path_estimate;

            IampParams params;
            params.beta = C1_BETA;
            params.delta = C5_DELTA;
            params.M = C5_TRUNCATION;
            bool each_beats_spectral = true;
            for (const auto seed : FIVE_SEEDS) {
                const auto A =
                    sample_goe(static_cast<std::int64_t>(C5_N), seed);
                const auto run = run_iamp(A, b5_oracle, params, seed);
                auto round = sequential_round(A, project_to_cube(run.z));
                rounding.absorb(round);
                goe_rounded.push_back(round.energy_after);
                if (!(round.energy_after > C5_SPECTRAL_BASELINE))
                    each_beats_spectral = false;
            }
            const double mean = mean_of(goe_rounded);
            const double secs = seconds_since(t0);
            const bool ok = mean >= C5_MEAN_FLOOR && each_beats_spectral &&
                            std::abs(mean - se_pred) <= C5_SE_TOL &&
                            secs <= C5_BUDGET_SEC;
            gate.line(5, ok,
                      fmt("mean rounded %.4f (floor %.2f), min seed %.4f vs 2/pi "
                          "%.4f, |mean - SE %.4f| = %.4f (tol %.2f), %.0f s",
                          mean, C5_MEAN_FLOOR,
                          *std::min_element(goe_rounded.begin(), goe_rounded.end()),
                          C5_SPECTRAL_BASELINE, se_pred, std::abs(mean - se_pred),
                          C5_SE_TOL, secs));
        } catch (const std::exception& e) {
            gate.exception(5, e.what());
        }
    } else {
        gate.line(5, false, "beta=5 artifact unavailable");
    }

    // ---- criterion 7: TAP residuals improve as delta halves ------------
    if (art2_ok) {
        try {
            auto residuals = [&](double delta) {
                IampParams params;
                params.beta = 2.0;
                params.delta = delta;
                std::vector<double> cons, full;
                for (const auto seed : FIVE_SEEDS) {
                    const auto A = sample_goe(2000, seed);
                    const auto run = run_iamp(A, art2.oracle, params, seed);
                    const auto tap = tap_residuals(A, run.z, run.x_final, 2.0,
                                                   art2.oracle.q_star());
                    cons.push_back(tap.residual_consistency);
                    full.push_back(tap.residual_full);
                }
                return std::pair{mean_of(cons), mean_of(full)};
            };
            const auto [cons_c, full_c] = residuals(C7_DELTA_COARSE);
            const auto [cons_f, full_f] = residuals(C7_DELTA_FINE);
            const bool ok = cons_f < cons_c && full_f < full_c;
            gate.line(7, ok,
                      fmt("consistency %.4f -> %.4f, tap %.4f -> %.4f as delta "
                          "%.2f -> %.2f over %zu seeds",
                          cons_c, cons_f, full_c, full_f, C7_DELTA_COARSE,
                          C7_DELTA_FINE, FIVE_SEEDS.size()));
        } catch (const std::exception& e) {
            gate.exception(7, e.what());
        }
    } else {
        gate.line(7, false, "beta=2 artifact unavailable");
    }

    // ---- criterion 8: Rademacher universality --------------------------
    if (b5_ok && !goe_rounded.empty()) {
        try {
            IampParams params;
            params.beta = C1_BETA;
            params.delta = C5_DELTA;
            params.M = C5_TRUNCATION;
            std::vector<double> rad_rounded;
            for (const auto seed : FIVE_SEEDS) {
                const auto A =
                    sample_rademacher(static_cast<std::int64_t>(C5_N), seed);
                const auto run = run_iamp(A, b5_oracle, params, seed);
                auto round = sequential_round(A, project_to_cube(run.z));
                rounding.absorb(round);
                rad_rounded.push_back(round.energy_after);
            }
            const double gap =
                std::abs(mean_of(rad_rounded) - mean_of(goe_rounded));
            gate.line(8, gap <= C8_TOL,
                      fmt("Rademacher mean %.4f vs GOE mean %.4f, gap %.4f "
                          "(tol %.2f)",
                          mean_of(rad_rounded), mean_of(goe_rounded), gap, C8_TOL));
        } catch (const std::exception& e) {
            gate.exception(8, e.what());
        }
    } else {
        gate.line(8, false, "beta=5 energies unavailable");
    }

    // ---- criterion 9: MAXCUT transport ---------------------------------
    if (b5_ok) {
        try {
            IampParams params;
            params.beta = C1_BETA;
            params.delta = C5_DELTA;
            params.M = C5_TRUNCATION;
            double excess_lo = 1e9, excess_hi = -1e9, identity_worst = 0.0;
            for (const auto seed : C9_SEEDS) {
                const ErGraph g = sample_er_graph(C9_N, C9_P, seed);
                const auto A = center_er_graph(g);
                const auto run = run_iamp(A, b5_oracle, params, seed);
                auto round = sequential_round(A, project_to_cube(run.z));
                rounding.absorb(round);
                auto sigma = balance_min_damage(std::move(round.sigma), A);

                std::int64_t sum = 0, deg2 = 0;
                for (auto s : sigma) sum += s;
                for (auto b : g.adj) deg2 += b;
                const auto edges = deg2 / 2;
                const auto cut = maxcut_value(g, sigma);
                const double nd = static_cast<double>(C9_N);
                const double qf = 2.0 * nd * energy(A, sigma);
                const double rhs =
                    0.5 * static_cast<double>(edges) -
                    C9_P / 4.0 * static_cast<double>(sum * sum) +
                    nd * C9_P / 4.0 +
                    0.25 * std::sqrt(nd * C9_P * (1.0 - C9_P)) * qf;
                identity_worst = std::max(
                    identity_worst,
                    std::abs(static_cast<double>(cut) - rhs) /
                        std::max(1.0, std::abs(static_cast<double>(cut))));
                const double excess =
                    (static_cast<double>(cut) - 0.5 * static_cast<double>(edges)) /
                    std::sqrt(nd * nd * nd * C9_P * (1.0 - C9_P) / 4.0);
                excess_lo = std::min(excess_lo, excess);
                excess_hi = std::max(excess_hi, excess);
            }
            const bool ok = excess_lo >= C9_EXCESS_LO &&
                            excess_hi <= C9_EXCESS_HI &&
                            identity_worst <= C9_IDENTITY_TOL;
            gate.line(9, ok,
                      fmt("normalized excess in [%.4f, %.4f] (window [%.2f, "
                          "%.2f]), cut identity gap %.2e (tol %.0e), %zu instances",
                          excess_lo, excess_hi, C9_EXCESS_LO, C9_EXCESS_HI,
                          identity_worst, C9_IDENTITY_TOL, C9_SEEDS.size()));
        } catch (const std::exception& e) {
            gate.exception(9, e.what());
        }
    } else {
        gate.line(9, false, "beta=5 artifact unavailable");
    }

    // ---- criterion 6: rounding monotone on every run above -------------
    gate.line(6, rounding.runs > 0 && rounding.worst_step >= 0.0,
              fmt("%zu rounding runs, %zu decisions, most negative energy "
                  "change %.3e (zero tolerance)",
                  rounding.runs, rounding.steps, rounding.worst_step));

    // ---- criterion 10: quadratic wall-time scaling ---------------------
    if (art2_ok) {
        try {
            auto medians = [&](std::int64_t n) {
                auto c = beta2_config();
                c.n = n;
                c.delta = 0.01;
                c.seeds = C10_SEEDS;
                c.sde_paths = 0;  // predictions excluded from per-instance time
                const auto sweep = run_sk(c);
                std::vector<double> ms;
                for (const auto& rep : sweep.reports) {
                    if (rep.error)
                        throw NumericError("timing run failed: " +
                                           rep.error->message);
                    ms.push_back(rep.ms_total);
                }
                std::sort(ms.begin(), ms.end());
                return ms[ms.size() / 2];
            };
            const double small = medians(500);
            const double large = medians(2000);
            const double ratio = large / small;
            gate.line(10, ratio >= C10_RATIO_LO && ratio <= C10_RATIO_HI,
                      fmt("median wall %.0f ms (n=2000) / %.0f ms (n=500) = "
                          "%.1f, window [%.0f, %.0f]",
                          large, small, ratio, C10_RATIO_LO, C10_RATIO_HI));
        } catch (const std::exception& e) {
            gate.exception(10, e.what());
        }
    } else {
        gate.line(10, false, "beta=2 artifact unavailable");
    }

    std::printf("%d of 10 criteria failed\n", gate.failures);
    return gate.failures;
}
