#include "skamp/parisi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "skamp/detail/parisi_march.hpp"
#include "skamp/io.hpp"

namespace skamp {

namespace {

double log_2cosh(double x) {
    return std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x)));
}

double sech_sq(double x) {
    const double c = std::cosh(std::min(std::abs(x), 350.0));
    return 1.0 / (c * c);
}

constexpr double kQStarSlack = 1e-10;
constexpr char kOracleMagic[5] = {'P', 'R', 'S', 'I', '1'};

}  // namespace

double ParisiMeasure::q_star() const {
    for (std::size_t k = 0; k < knots.size(); ++k)
        if (cdf[k] >= 1.0 - kQStarSlack) return knots[k];
    return 1.0;
}

double ParisiMeasure::mu_at(double t) const {
    if (t <= knots.front()) return cdf.front();
    // Left-continuous: an exact knot hit reads the value just below it.
    const auto it = std::lower_bound(knots.begin(), knots.end(), t);
    const auto idx = static_cast<std::size_t>(it - knots.begin());
    return cdf[idx - 1];
}

double ParisiMeasure::mu_avg(double a, double b) const {
    if (b <= a) return mu_at(b);
    return integral_mu(a, b) / (b - a);
}

double ParisiMeasure::integral_mu(double a, double b) const {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double lo = std::max(a, knots[k]);
        const double hi = std::min(b, knots[k + 1]);
        if (hi > lo) acc += cdf[k] * (hi - lo);
    }
    return acc;
}

double ParisiMeasure::integral_t_mu() const {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        acc += cdf[k] * 0.5 * (knots[k + 1] * knots[k + 1] - knots[k] * knots[k]);
    return acc;
}

double ParisiMeasure::second_moment() const {
    double acc = 0.0;
    const auto w = atom_weights();
    for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * knots[k] * knots[k];
    return acc;
}

std::vector<double> ParisiMeasure::atom_weights() const {
    std::vector<double> w(cdf.size());
    w[0] = cdf[0];
    for (std::size_t k = 1; k < cdf.size(); ++k) w[k] = cdf[k] - cdf[k - 1];
    return w;
}

void ParisiMeasure::validate() const {
    if (knots.size() < 2 || knots.size() != cdf.size())
        throw ValidationError("measure: need matching knot/cdf arrays, >= 2 knots");
    if (knots.front() != 0.0 || knots.back() != 1.0)
        throw ValidationError("measure: knots must start at 0 and end at 1");
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        if (!(knots[k] < knots[k + 1]))
            throw ValidationError("measure: knots must be strictly increasing");
    for (std::size_t k = 0; k < cdf.size(); ++k) {
        if (!(cdf[k] >= 0.0 && cdf[k] <= 1.0))
            throw ValidationError("measure: cdf values must lie in [0,1]");
        if (k > 0 && cdf[k] < cdf[k - 1])
            throw ValidationError("measure: cdf must be nondecreasing");
    }
    if (std::abs(cdf.back() - 1.0) > 1e-9)
        throw ValidationError("measure: cdf must reach 1 at t = 1");
}

ParisiMeasure ParisiMeasure::from_increments(std::vector<double> knots,
                                             std::span<const double> increments) {
    if (knots.size() != increments.size())
        throw ValidationError("from_increments: size mismatch");
    double total = 0.0;
    for (double w : increments) {
        if (!(w >= 0.0)) throw ValidationError("from_increments: negative weight");
        total += w;
    }
    if (total <= 0.0) throw ValidationError("from_increments: zero total mass");
    ParisiMeasure m;
    m.knots = std::move(knots);
    m.cdf.resize(increments.size());
    double run = 0.0;
    for (std::size_t k = 0; k < increments.size(); ++k) {
        run += increments[k];
        m.cdf[k] = std::min(run / total, 1.0);
    }
    m.cdf.back() = 1.0;
    m.validate();
    return m;
}

ParisiMeasure ParisiMeasure::point_mass_at_zero() {
    return ParisiMeasure{{0.0, 1.0}, {1.0, 1.0}};
}

ParisiMeasure ParisiMeasure::step_at(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        if (q == 0.0) return point_mass_at_zero();
        throw ValidationError("step_at: q must lie in [0,1)");
    }
    return ParisiMeasure{{0.0, q, 1.0}, {0.0, 1.0, 1.0}};
}

double PdeGrid::resolved_x_max(double beta) const {
    const double want = (x_max > 0.0) ? x_max : 6.0 + 3.0 * beta;
    const double steps = std::max(1.0, std::round(want / dx));
    return steps * dx;
}

void PdeGrid::validate(double beta) const {
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
    if (!(dt > 0.0) || !(dx > 0.0))
        throw ConfigError("grid: dt and dx must be positive");
    if (resolved_x_max(beta) < 4.0 + 2.0 * beta)
        throw ConfigError("grid: x_max must be at least 4 + 2*beta");
    if (beta * beta * dt > 1.0)
        throw ConfigError("grid: explicit term too large at this dt; use dt <= " +
                          std::to_string(1.0 / (beta * beta)));
}

namespace detail {

std::size_t MarchContext::line_index(double t) const {
    const auto it = std::lower_bound(lines.begin(), lines.end(), t - 1e-12);
    if (it == lines.end() || std::abs(*it - t) > 1e-9)
        throw NumericError("march context: time is not a grid line");
    return static_cast<std::size_t>(it - lines.begin());
}

MarchContext make_march_context(double beta, const ParisiMeasure& mu,
                                const PdeGrid& grid) {
    grid.validate(beta);
    MarchContext ctx;
    const double X = grid.resolved_x_max(beta);
    const auto half = static_cast<std::size_t>(std::round(X / grid.dx));
    ctx.nx = 2 * half + 1;
    ctx.dx = grid.dx;
    ctx.x_min = -X;

    std::vector<double> lines;
    const auto nt = static_cast<std::size_t>(std::ceil(1.0 / grid.dt));
    for (std::size_t k = 0; k < nt; ++k) lines.push_back(static_cast<double>(k) * grid.dt);
    lines.push_back(1.0);
    for (double t : mu.knots) lines.push_back(t);
    std::sort(lines.begin(), lines.end());
    for (double t : lines) {
        if (ctx.lines.empty() || t - ctx.lines.back() > 1e-12)
            ctx.lines.push_back(t);
        else if (t > ctx.lines.back())
            ctx.lines.back() = t;  // snap near-duplicates onto the knot value
    }

    ctx.s_star = 1.0;
    for (std::size_t k = 0; k < mu.knots.size(); ++k) {
        if (mu.cdf[k] >= 1.0) {
            ctx.s_star = mu.knots[k];
            break;
        }
    }
    ctx.s_idx = ctx.line_index(ctx.s_star);
    return ctx;
}

std::vector<double> closed_form_row(double beta, double t, const MarchContext& ctx) {
    std::vector<double> row(ctx.nx);
    const double shift = beta * beta * (1.0 - t) / 2.0;
    for (std::size_t j = 0; j < ctx.nx; ++j)
        row[j] = log_2cosh(ctx.x_min + ctx.dx * static_cast<double>(j)) + shift;
    return row;
}

namespace {

// One backward step t_hi -> t_lo: implicit diffusion (Thomas solve on the
// Neumann-closed tridiagonal system), explicit quadratic term evaluated on
// the incoming gradient, mu averaged exactly over the step interval.
void march_step(double beta, double mu_bar, double h, const MarchContext& ctx,
                std::vector<double>& phi, std::vector<double>& rhs,
                std::vector<double>& cp) {
    const double dx = ctx.dx;
    const double r = h * beta * beta / (2.0 * dx * dx);
    const double c = h * beta * beta * mu_bar / 2.0;
    const std::size_t N = ctx.nx - 1;

    rhs[0] = phi[0] + c + 2.0 * r * dx;  // boundary slope is exactly -1 / +1
    for (std::size_t j = 1; j < N; ++j) {
        const double d1 = (phi[j + 1] - phi[j - 1]) / (2.0 * dx);
        rhs[j] = phi[j] + c * d1 * d1;
    }
    rhs[N] = phi[N] + c + 2.0 * r * dx;

    const double b = 1.0 + 2.0 * r;
    cp[0] = -2.0 * r / b;
    rhs[0] /= b;
    for (std::size_t j = 1; j < N; ++j) {
        const double m = b + r * cp[j - 1];
        cp[j] = -r / m;
        rhs[j] = (rhs[j] + r * rhs[j - 1]) / m;
    }
    const double m = b + 2.0 * r * cp[N - 1];
    rhs[N] = (rhs[N] + 2.0 * r * rhs[N - 1]) / m;

    phi[N] = rhs[N];
    for (std::size_t j = N; j-- > 0;) phi[j] = rhs[j] - cp[j] * phi[j + 1];
}

}  // namespace

double march_phi(double beta, const ParisiMeasure& mu, const MarchContext& ctx,
                 std::size_t from_idx, std::vector<double>& row, const RowSink* sink) {
    std::vector<double> rhs(ctx.nx), cp(ctx.nx);
    for (std::size_t i = from_idx; i-- > 0;) {
        const double t_hi = ctx.lines[i + 1];
        const double t_lo = ctx.lines[i];
        march_step(beta, mu.mu_avg(t_lo, t_hi), t_hi - t_lo, ctx, row, rhs, cp);
        if (sink) (*sink)(i, row);
    }
    return row[ctx.zero_index()];
}

double phi_at_zero(double beta, const ParisiMeasure& mu, const PdeGrid& grid) {
    const auto ctx = make_march_context(beta, mu, grid);
    auto row = closed_form_row(beta, ctx.s_star, ctx);
    return march_phi(beta, mu, ctx, ctx.s_idx, row, nullptr);
}

MarchGradient march_phi_with_gradient(double beta, const ParisiMeasure& mu,
                                      const MarchContext& ctx) {
    const std::size_t nt = ctx.lines.size();
    const std::size_t nx = ctx.nx;
    const std::size_t N = nx - 1;
    const double dx = ctx.dx;

    // Slope rows seen by each step's quadratic term: the step from line i+1
    // down to line i reads row i+1.  Boundary slots stay zero so the Jacobian
    // pass skips the constant boundary slope terms without branching.
    std::vector<double> slopes(nt * nx, 0.0);
    auto record = [&](std::size_t i, std::span<const double> r) {
        double* g = slopes.data() + i * nx;
        for (std::size_t j = 1; j < N; ++j)
            g[j] = (r[j + 1] - r[j - 1]) / (2.0 * dx);
    };
    auto row = closed_form_row(beta, 1.0, ctx);
    record(nt - 1, row);
    RowSink sink = [&](std::size_t i, std::span<const double> r) { record(i, r); };
    MarchGradient out;
    out.phi0 = march_phi(beta, mu, ctx, nt - 1, row, &sink);
    out.d_mu_bar.assign(nt - 1, 0.0);

    // Transposed pass: `a` starts as the extraction functional at the origin;
    // each step solves against the transposed resolvent, reads off the
    // step's coefficient sensitivity, then applies the transposed Jacobian of
    // the explicit quadratic term.
    std::vector<double> a(nx, 0.0), bv(nx), q(nx), cp(nx);
    a[ctx.zero_index()] = 1.0;
    for (std::size_t i = 0; i + 1 < nt; ++i) {
        const double h = ctx.lines[i + 1] - ctx.lines[i];
        const double mu_bar = mu.mu_avg(ctx.lines[i], ctx.lines[i + 1]);
        const double r = h * beta * beta / (2.0 * dx * dx);
        const double c = h * beta * beta * mu_bar / 2.0;
        const double b = 1.0 + 2.0 * r;
        const double* g = slopes.data() + (i + 1) * nx;

        // Transpose of the resolvent rows: the doubled off-diagonals the
        // Neumann closure puts in rows 0 and N land in rows 1 and N-1 here.
        auto sub = [&](std::size_t j) { return (j == 1) ? -2.0 * r : -r; };
        auto sup = [&](std::size_t j) { return (j == N - 1) ? -2.0 * r : -r; };
        cp[0] = sup(0) / b;
        q[0] = a[0] / b;
        for (std::size_t j = 1; j <= N; ++j) {
            const double m = b - sub(j) * cp[j - 1];
            if (j < N) cp[j] = sup(j) / m;
            q[j] = (a[j] - sub(j) * q[j - 1]) / m;
        }
        bv[N] = q[N];
        for (std::size_t j = N; j-- > 0;) bv[j] = q[j] - cp[j] * bv[j + 1];

        double acc = bv[0] + bv[N];  // boundary slope is exactly -1 / +1
        for (std::size_t j = 1; j < N; ++j) acc += bv[j] * g[j] * g[j];
        out.d_mu_bar[i] = 0.5 * h * beta * beta * acc;

        // a <- bv + c J^T bv with (J^T v)_k = ((g v)_{k-1} - (g v)_{k+1})/dx;
        // reuse q as the g*v scratch.
        for (std::size_t j = 0; j < nx; ++j) q[j] = g[j] * bv[j];
        for (std::size_t k = 0; k < nx; ++k) {
            const double lo = (k > 0) ? q[k - 1] : 0.0;
            const double hi = (k < N) ? q[k + 1] : 0.0;
            a[k] = bv[k] + c * (lo - hi) / dx;
        }
    }
    return out;
}

}  // namespace detail

ParisiOracle solve_pde(double beta, const ParisiMeasure& mu, const PdeGrid& grid) {
    mu.validate();
    const auto ctx = detail::make_march_context(beta, mu, grid);

    ParisiOracle o;
    o.beta_ = beta;
    o.measure_ = mu;
    o.grid_ = grid;
    o.grid_.x_max = grid.resolved_x_max(beta);
    o.t_grid_ = ctx.lines;
    o.x_min_ = ctx.x_min;
    o.dx_ = ctx.dx;
    o.nx_ = ctx.nx;
    const std::size_t nt = ctx.lines.size();
    o.phi_.resize(nt * ctx.nx);
    o.dphi_.resize(nt * ctx.nx);
    o.d2phi_.resize(nt * ctx.nx);

    // Closed-form region: every line at or above the saturation point.
    for (std::size_t i = ctx.s_idx; i < nt; ++i) {
        const double shift = beta * beta * (1.0 - ctx.lines[i]) / 2.0;
        double* p = o.phi_.data() + i * ctx.nx;
        double* d1 = o.dphi_.data() + i * ctx.nx;
        double* d2 = o.d2phi_.data() + i * ctx.nx;
        for (std::size_t j = 0; j < ctx.nx; ++j) {
            const double x = o.x_at(j);
            p[j] = log_2cosh(x) + shift;
            d1[j] = std::tanh(x);
            d2[j] = std::max(sech_sq(x), 1e-300);
        }
    }

    // Numerical region: march down, tabulating centered-difference
    // derivatives as we go.  The derivative bounds |phi_x| <= 1 and
    // 0 < phi_xx <= 1 hold for the exact solution; the tabulated values are
    // clipped onto them so downstream consumers can rely on the bounds even
    // where discrete noise is of the order of the derivative itself.
    std::vector<double> row(o.phi_.begin() + ctx.s_idx * ctx.nx,
                            o.phi_.begin() + (ctx.s_idx + 1) * ctx.nx);
    const std::size_t N = ctx.nx - 1;
    detail::RowSink sink = [&](std::size_t i, std::span<const double> r) {
        double* p = o.phi_.data() + i * ctx.nx;
        double* d1 = o.dphi_.data() + i * ctx.nx;
        double* d2 = o.d2phi_.data() + i * ctx.nx;
        std::copy(r.begin(), r.end(), p);
        const double dx = ctx.dx;
        d1[0] = -1.0;
        d1[N] = 1.0;
        d2[0] = (2.0 * r[1] - 2.0 * r[0] + 2.0 * dx) / (dx * dx);
        d2[N] = (2.0 * r[N - 1] - 2.0 * r[N] + 2.0 * dx) / (dx * dx);
        for (std::size_t j = 1; j < N; ++j) {
            d1[j] = (r[j + 1] - r[j - 1]) / (2.0 * dx);
            d2[j] = (r[j + 1] - 2.0 * r[j] + r[j - 1]) / (dx * dx);
        }
        for (std::size_t j = 0; j <= N; ++j) {
            d1[j] = std::clamp(d1[j], -1.0, 1.0);
            d2[j] = std::clamp(d2[j], 1e-300, 1.0);
        }
    };
    detail::march_phi(beta, mu, ctx, ctx.s_idx, row, &sink);
    return o;
}

double parisi_functional(double beta, const ParisiMeasure& mu, const PdeGrid& grid) {
    mu.validate();
    return detail::phi_at_zero(beta, mu, grid) -
           beta * beta / 2.0 * mu.integral_t_mu();
}

StationarityProfile stationarity_profile(double beta, const ParisiMeasure& mu,
                                         const PdeGrid& grid) {
    mu.validate();
    const auto ctx = detail::make_march_context(beta, mu, grid);
    const std::size_t nt = ctx.lines.size();
    const std::size_t nx = ctx.nx;
    const std::size_t N = nx - 1;
    const double dx = ctx.dx;

    // Backward value march over the whole axis, recording Phi_x at each line.
    std::vector<double> d1(nt * nx);
    {
        double* top = d1.data() + (nt - 1) * nx;
        for (std::size_t j = 0; j < nx; ++j)
            top[j] = std::tanh(ctx.x_min + dx * static_cast<double>(j));
    }
    detail::RowSink sink = [&](std::size_t i, std::span<const double> r) {
        double* g = d1.data() + i * nx;
        g[0] = -1.0;
        g[N] = 1.0;
        for (std::size_t j = 1; j < N; ++j)
            g[j] = std::clamp((r[j + 1] - r[j - 1]) / (2.0 * dx), -1.0, 1.0);
    };
    auto row = detail::closed_form_row(beta, 1.0, ctx);
    const double phi0 = detail::march_phi(beta, mu, ctx, nt - 1, row, &sink);

    StationarityProfile prof;
    prof.value = phi0 - beta * beta / 2.0 * mu.integral_t_mu();
    prof.t = ctx.lines;
    prof.e_dphi_sq.assign(nt, 0.0);

    // Forward density march: implicit advection-diffusion step with absorbing
    // far boundaries, renormalized each step.  The drift row is the one the
    // backward step's nonlinearity saw, keeping the two marches consistent.
    // The first line is seeded with the exact small-time Gaussian (the drift
    // vanishes at the symmetric origin to first order), which avoids the fat
    // tails an implicit step from a point mass would produce.
    const std::size_t mid = ctx.zero_index();
    std::vector<double> p(nx, 0.0), q(nx), cp(nx);
    prof.e_dphi_sq[0] = d1[mid] * d1[mid];
    {
        const double var = beta * beta * (ctx.lines[1] - ctx.lines[0]);
        double mass = 0.0;
        for (std::size_t j = 1; j < N; ++j) {
            const double x = ctx.x_min + dx * static_cast<double>(j);
            p[j] = std::exp(-x * x / (2.0 * var));
            mass += p[j];
        }
        const double* g1 = d1.data() + nx;
        double e = 0.0;
        for (std::size_t j = 1; j < N; ++j) {
            p[j] /= mass * dx;
            e += g1[j] * g1[j] * p[j];
        }
        prof.e_dphi_sq[1] = e * dx;
    }
    const double D = beta * beta / 2.0;
    for (std::size_t i = 1; i + 1 < nt; ++i) {
        const double h = ctx.lines[i + 1] - ctx.lines[i];
        const double mu_bar = mu.mu_avg(ctx.lines[i], ctx.lines[i + 1]);
        const double* g = d1.data() + (i + 1) * nx;
        const double ad = h * beta * beta * mu_bar / (2.0 * dx);
        const double df = h * D / (dx * dx);
        const double diag = 1.0 + 2.0 * df;

        auto lower = [&](std::size_t j) { return -ad * g[j - 1] - df; };
        auto upper = [&](std::size_t j) { return ad * g[j + 1] - df; };
        cp[1] = upper(1) / diag;
        q[1] = p[1] / diag;
        for (std::size_t j = 2; j < N; ++j) {
            const double m = diag - lower(j) * cp[j - 1];
            cp[j] = upper(j) / m;
            q[j] = (p[j] - lower(j) * q[j - 1]) / m;
        }
        p[N - 1] = q[N - 1];
        for (std::size_t j = N - 1; j-- > 1;) p[j] = q[j] - cp[j] * p[j + 1];
        p[0] = p[N] = 0.0;

        double mass = 0.0;
        for (std::size_t j = 1; j < N; ++j) mass += p[j];
        const double inv = 1.0 / (mass * dx);
        double e = 0.0;
        for (std::size_t j = 1; j < N; ++j) {
            p[j] *= inv;
            e += g[j] * g[j] * p[j];
        }
        prof.e_dphi_sq[i + 1] = e * dx;
    }
    return prof;
}

double ParisiOracle::query(const std::vector<double>& table, double t, double x,
                           int which) const {
    if (!(t >= -1e-12 && t <= 1.0 + 1e-12))
        throw ValidationError("oracle query: t outside [0,1]");
    t = std::clamp(t, 0.0, 1.0);
    const auto r = row(t);
    switch (which) {
        case 0: {
            const double X = -x_min_;
            if (x > X || x < -X) {
                const double edge = (x > X) ? X : -X;
                const std::size_t j = (x > X) ? nx_ - 1 : 0;
                const double at_edge = table[r.i0 * nx_ + j] * (1.0 - r.w1) +
                                       table[r.i1 * nx_ + j] * r.w1;
                return std::abs(x) + at_edge - std::abs(edge);
            }
            break;
        }
        case 1:
            if (x < x_min_) return -1.0;
            if (x > -x_min_) return 1.0;
            break;
        default:
            if (x < x_min_) x = x_min_;
            if (x > -x_min_) x = -x_min_;
    }
    const double pos = (x - x_min_) / dx_;
    auto j0 = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0,
                                                  static_cast<double>(nx_ - 2)));
    const double wx = std::clamp(pos - static_cast<double>(j0), 0.0, 1.0);
    const double lo = table[r.i0 * nx_ + j0] * (1.0 - wx) + table[r.i0 * nx_ + j0 + 1] * wx;
    const double hi = table[r.i1 * nx_ + j0] * (1.0 - wx) + table[r.i1 * nx_ + j0 + 1] * wx;
    return lo * (1.0 - r.w1) + hi * r.w1;
}

ParisiOracle::Row ParisiOracle::row(double t) const {
    if (!(t >= -1e-12 && t <= 1.0 + 1e-12))
        throw ValidationError("oracle query: t outside [0,1]");
    t = std::clamp(t, 0.0, 1.0);
    const auto it = std::upper_bound(t_grid_.begin(), t_grid_.end(), t);
    auto i1 = static_cast<std::size_t>(it - t_grid_.begin());
    if (i1 == 0) return {this, 0, 0, 0.0};
    if (i1 >= t_grid_.size()) return {this, t_grid_.size() - 1, t_grid_.size() - 1, 0.0};
    const std::size_t i0 = i1 - 1;
    const double span = t_grid_[i1] - t_grid_[i0];
    return {this, i0, i1, (span > 0.0) ? (t - t_grid_[i0]) / span : 0.0};
}

namespace {

double row_lerp(const std::vector<double>& table, const ParisiOracle::Row& r,
                std::size_t nx, double x_min, double dx, double x) {
    const double pos = (x - x_min) / dx;
    auto j0 = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0,
                                                  static_cast<double>(nx - 2)));
    const double wx = std::clamp(pos - static_cast<double>(j0), 0.0, 1.0);
    const double lo = table[r.i0 * nx + j0] * (1.0 - wx) + table[r.i0 * nx + j0 + 1] * wx;
    const double hi = table[r.i1 * nx + j0] * (1.0 - wx) + table[r.i1 * nx + j0 + 1] * wx;
    return lo * (1.0 - r.w1) + hi * r.w1;
}

}  // namespace

double ParisiOracle::Row::phi(double x) const {
    const double X = -o->x_min_;
    if (x > X || x < -X) return o->query(o->phi_, o->t_grid_[i0] * (1 - w1) + o->t_grid_[i1] * w1, x, 0);
    return row_lerp(o->phi_, *this, o->nx_, o->x_min_, o->dx_, x);
}

double ParisiOracle::Row::dphi(double x) const {
    if (x < o->x_min_) return -1.0;
    if (x > -o->x_min_) return 1.0;
    return row_lerp(o->dphi_, *this, o->nx_, o->x_min_, o->dx_, x);
}

double ParisiOracle::Row::d2phi(double x) const {
    const double clamped = std::clamp(x, o->x_min_, -o->x_min_);
    return row_lerp(o->d2phi_, *this, o->nx_, o->x_min_, o->dx_, clamped);
}

namespace {

double cell_slope(const std::vector<double>& table, const ParisiOracle::Row& r,
                  std::size_t nx, double x_min, double dx, double x) {
    if (x < x_min || x > x_min + dx * static_cast<double>(nx - 1)) return 0.0;
    const double pos = (x - x_min) / dx;
    auto j0 = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0,
                                                  static_cast<double>(nx - 2)));
    const double lo = (table[r.i0 * nx + j0 + 1] - table[r.i0 * nx + j0]) / dx;
    const double hi = (table[r.i1 * nx + j0 + 1] - table[r.i1 * nx + j0]) / dx;
    return lo * (1.0 - r.w1) + hi * r.w1;
}

}  // namespace

double ParisiOracle::Row::dphi_slope(double x) const {
    return cell_slope(o->dphi_, *this, o->nx_, o->x_min_, o->dx_, x);
}

double ParisiOracle::Row::d2phi_slope(double x) const {
    return cell_slope(o->d2phi_, *this, o->nx_, o->x_min_, o->dx_, x);
}

void ParisiOracle::save(const std::filesystem::path& path) const {
    io::AtomicFileWriter w(path);
    auto& os = w.stream();
    os.write(kOracleMagic, sizeof(kOracleMagic));
    io::write_f64(os, beta_);
    io::write_u64(os, measure_.knots.size());
    io::write_f64_array(os, measure_.knots);
    io::write_f64_array(os, measure_.cdf);
    io::write_f64(os, grid_.dt);
    io::write_f64(os, grid_.dx);
    io::write_f64(os, grid_.x_max);
    io::write_f64(os, x_min_);
    io::write_u64(os, nx_);
    io::write_u64(os, t_grid_.size());
    io::write_f64_array(os, t_grid_);
    io::write_f64_array(os, phi_);
    io::write_f64_array(os, dphi_);
    io::write_f64_array(os, d2phi_);
    w.commit();
}

ParisiOracle ParisiOracle::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open oracle file: " + path.string());
    char magic[5];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kOracleMagic, sizeof(magic)) != 0)
        throw ValidationError("bad oracle file magic: " + path.string());
    ParisiOracle o;
    o.beta_ = io::read_f64(is);
    const auto nk = io::read_u64(is);
    if (nk < 2 || nk > 1u << 20) throw ValidationError("oracle file: bad knot count");
    o.measure_.knots = io::read_f64_array(is, nk);
    o.measure_.cdf = io::read_f64_array(is, nk);
    o.measure_.validate();
    o.grid_.dt = io::read_f64(is);
    o.grid_.dx = io::read_f64(is);
    o.grid_.x_max = io::read_f64(is);
    o.x_min_ = io::read_f64(is);
    o.nx_ = io::read_u64(is);
    o.dx_ = o.grid_.dx;
    const auto nt = io::read_u64(is);
    if (o.nx_ < 3 || o.nx_ > 1u << 24 || nt < 2 || nt > 1u << 24)
        throw ValidationError("oracle file: bad grid dimensions");
    o.t_grid_ = io::read_f64_array(is, nt);
    o.phi_ = io::read_f64_array(is, nt * o.nx_);
    o.dphi_ = io::read_f64_array(is, nt * o.nx_);
    o.d2phi_ = io::read_f64_array(is, nt * o.nx_);
    return o;
}

void export_measure_csv(const ParisiMeasure& mu, const std::filesystem::path& path) {
    io::AtomicFileWriter w(path);
    w.stream() << "t,mu\n";
    w.stream().precision(17);
    for (std::size_t k = 0; k < mu.knots.size(); ++k) {
        if (k > 0) w.stream() << mu.knots[k] << ',' << mu.cdf[k - 1] << '\n';
        w.stream() << mu.knots[k] << ',' << mu.cdf[k] << '\n';
    }
    w.commit();
}

void export_phi_slice_csv(const ParisiOracle& o, double t,
                          const std::filesystem::path& path) {
    io::AtomicFileWriter w(path);
    w.stream() << "x,phi,dphi,d2phi\n";
    w.stream().precision(17);
    const auto r = o.row(t);
    for (std::size_t j = 0; j < o.nx(); ++j) {
        const double x = o.x_at(j);
        w.stream() << x << ',' << r.phi(x) << ',' << r.dphi(x) << ',' << r.d2phi(x)
                   << '\n';
    }
    w.commit();
}

}  // namespace skamp
