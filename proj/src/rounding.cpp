#include "skamp/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace skamp {

std::vector<double> project_to_cube(std::vector<double> z) {
    for (auto& v : z) v = std::clamp(v, -1.0, 1.0);
    return z;
}

double cube_distance_sq(const std::vector<double>& z) {
    double acc = 0.0;
    for (double v : z) {
        const double ex = std::max(0.0, std::abs(v) - 1.0);
        acc += ex * ex;
    }
    return acc / static_cast<double>(z.size());
}

RoundingReport sequential_round(const CouplingMatrix& A, std::vector<double> v,
                                const RoundingOptions& opts) {
    const std::size_t n = v.size();
    if (static_cast<std::size_t>(A.n) != n)
        throw ValidationError("sequential_round: dimension mismatch");
    for (double x : v)
        if (!(x >= -1.0 && x <= 1.0))
            throw ValidationError("sequential_round: input outside [-1,1]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (opts.order) {
        if (opts.order->size() != n)
            throw ValidationError("sequential_round: order length mismatch");
        order = *opts.order;
    }

    RoundingReport rep;
    rep.energy_before = energy(A, v);
    rep.monotonicity_trace.reserve(n);

    // Local fields without the diagonal, maintained in O(n) per decision.
    std::vector<double> h(n);
    A.matvec(v, h);
    for (std::size_t i = 0; i < n; ++i) h[i] -= A.at(i, i) * v[i];

    std::vector<std::int8_t> sigma(n);
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t l = order[step];
        const double hl = h[l];
        const std::int8_t s = (hl >= 0.0) ? std::int8_t{1} : std::int8_t{-1};
        if (hl == 0.0) ++rep.ties;
        const double old = v[l];
        if ((old >= 0.0 ? 1 : -1) != s) ++rep.coordinate_flips;
        rep.monotonicity_trace.push_back((static_cast<double>(s) - old) * hl);
        const double d = static_cast<double>(s) - old;
        if (d != 0.0) {
            const auto row = A.row(l);
            for (std::size_t j = 0; j < n; ++j) h[j] += row[j] * d;
            h[l] -= A.at(l, l) * d;
        }
        v[l] = static_cast<double>(s);
        sigma[l] = s;
    }

    rep.energy_after = energy(A, v);
    rep.sigma = std::move(sigma);
    return rep;
}

std::vector<std::int8_t> balance(std::vector<std::int8_t> sigma) {
    const auto n = static_cast<std::int64_t>(sigma.size());
    std::int64_t sum = 0;
    for (auto s : sigma) sum += s;
    const std::int64_t majority = (sum >= 0) ? 1 : -1;
    std::int64_t flips = (std::abs(sum) - (n % 2)) / 2;
    for (std::size_t i = 0; i < sigma.size() && flips > 0; ++i)
        if (sigma[i] == majority) {
            sigma[i] = static_cast<std::int8_t>(-majority);
            --flips;
        }
    return sigma;
}

std::vector<std::int8_t> balance_min_damage(std::vector<std::int8_t> sigma,
                                            const CouplingMatrix& A) {
    const auto n = static_cast<std::int64_t>(sigma.size());
    if (A.n != n) throw ValidationError("balance_min_damage: dimension mismatch");
    std::int64_t sum = 0;
    for (auto s : sigma) sum += s;
    const std::int64_t majority = (sum >= 0) ? 1 : -1;
    const std::int64_t flips = (std::abs(sum) - (n % 2)) / 2;
    if (flips <= 0) return sigma;

    std::vector<double> x(sigma.begin(), sigma.end()), h(sigma.size());
    A.matvec(x, h);
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] == majority) cand.push_back(i);
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(h[a] - A.at(a, a) * x[a]) < std::abs(h[b] - A.at(b, b) * x[b]);
    });
    for (std::int64_t k = 0; k < flips; ++k)
        sigma[cand[static_cast<std::size_t>(k)]] = static_cast<std::int8_t>(-majority);
    return sigma;
}

std::int64_t maxcut_value(const ErGraph& g, const std::vector<std::int8_t>& sigma) {
    if (static_cast<std::size_t>(g.n) != sigma.size())
        throw ValidationError("maxcut_value: dimension mismatch");
    std::int64_t cut = 0;
    for (std::int64_t i = 0; i < g.n; ++i)
        for (std::int64_t j = i + 1; j < g.n; ++j)
            if (g.edge(i, j) && sigma[i] != sigma[j]) ++cut;
    return cut;
}

void export_sigma_text(const std::vector<std::int8_t>& sigma,
                       const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open " + path.string());
    for (std::size_t i = 0; i < sigma.size(); ++i)
        os << (i ? " " : "") << static_cast<int>(sigma[i]);
    os << '\n';
    if (!os) throw ValidationError("short write to " + path.string());
}

std::vector<std::int8_t> load_sigma_text(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open " + path.string());
    std::vector<std::int8_t> sigma;
    int v;
    while (is >> v) {
        if (v != 1 && v != -1)
            throw ValidationError("sigma file: entries must be +1 or -1");
        sigma.push_back(static_cast<std::int8_t>(v));
    }
    if (sigma.empty()) throw ValidationError("sigma file: empty");
    return sigma;
}

}  // namespace skamp
