#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <vector>

#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"
#include "skamp/rng.hpp"
#include "skamp/rounding.hpp"

using namespace skamp;

namespace {

CouplingMatrix make_matrix(std::int64_t n, std::vector<double> entries) {
    CouplingMatrix A;
    A.n = n;
    A.a = std::move(entries);
    return A;
}

std::vector<double> random_cube_point(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, 77);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = 2.0 * rng.uniform(i) - 1.0;
    return z;
}

// Off-diagonal part of <v, A v> / 2, the quantity each decision maximizes.
double half_offdiag_form(const CouplingMatrix& A, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t j = 0; j < A.n; ++j)
            if (i != j) acc += A.at(i, j) * v[i] * v[j];
    return acc / 2.0;
}

std::int64_t spin_sum(const std::vector<std::int8_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::int64_t{0});
}

}  // namespace

TEST_CASE("two by two decisions transcribed by hand") {
    const auto A = make_matrix(2, {0.3, 0.6, 0.6, -0.2});
    const std::vector<double> z{0.25, 0.5};
    const auto rep = sequential_round(A, z);

    // l=0: field 0.6*0.5 = 0.3, spin +1, gain (1-0.25)*0.3.
    // l=1: field 0.6*1.0 = 0.6, spin +1, gain (1-0.5)*0.6.
    REQUIRE(rep.sigma.size() == 2);
    CHECK(rep.sigma[0] == 1);
    CHECK(rep.sigma[1] == 1);
    CHECK(rep.monotonicity_trace[0] == doctest::Approx(0.225).epsilon(1e-14));
    CHECK(rep.monotonicity_trace[1] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(rep.coordinate_flips == 0);
    CHECK(rep.ties == 0);
    CHECK(rep.energy_before == doctest::Approx(0.11875 / 4.0).epsilon(1e-14));
    CHECK(rep.energy_after == doctest::Approx(1.3 / 4.0).epsilon(1e-14));

    // Reversed order changes the fields each decision sees.
    RoundingOptions opts;
    opts.order = std::vector<std::size_t>{1, 0};
    const auto rev = sequential_round(A, z, opts);
    CHECK(rev.monotonicity_trace[0] == doctest::Approx(0.075).epsilon(1e-14));
    CHECK(rev.monotonicity_trace[1] == doctest::Approx(0.45).epsilon(1e-14));
}

TEST_CASE("zero fields count as ties and resolve to plus one") {
    const auto A = make_matrix(2, {0.0, 0.0, 0.0, 0.0});
    const auto rep = sequential_round(A, {0.0, -0.5});
    CHECK(rep.ties == 2);
    CHECK(rep.sigma[0] == 1);
    CHECK(rep.sigma[1] == 1);
    CHECK(rep.coordinate_flips == 1);  // sign(-0.5) disagrees with +1
}

TEST_CASE("every recorded gain is nonnegative, exactly") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto A = sample_goe(200, seed);
        const auto rep = sequential_round(A, random_cube_point(200, seed));
        REQUIRE(rep.monotonicity_trace.size() == 200);
        // The spin is the sign of the field, so each product is sign-matched;
        // no tolerance is needed.
        CHECK(*std::min_element(rep.monotonicity_trace.begin(),
                                rep.monotonicity_trace.end()) >= 0.0);
    }
}

TEST_CASE("trace sums to the off-diagonal gain, diagonal handled separately") {
    const auto A = sample_goe(120, 9);
    const auto z = random_cube_point(120, 9);
    const auto rep = sequential_round(A, z);

    std::vector<double> sig(rep.sigma.begin(), rep.sigma.end());
    const double off_gain = half_offdiag_form(A, sig) - half_offdiag_form(A, z);
    const double trace_sum = std::accumulate(rep.monotonicity_trace.begin(),
                                             rep.monotonicity_trace.end(), 0.0);
    CHECK(trace_sum == doctest::Approx(off_gain).epsilon(1e-10));

    // Full energies differ from the off-diagonal ones only through the
    // diagonal, which rounding never touches by decision.
    double diag_shift = 0.0;
    for (std::int64_t i = 0; i < A.n; ++i)
        diag_shift += A.at(i, i) * (1.0 - z[i] * z[i]);
    const double full_gain =
        2.0 * static_cast<double>(A.n) * (rep.energy_after - rep.energy_before);
    CHECK(full_gain == doctest::Approx(2.0 * trace_sum + diag_shift).epsilon(1e-9));
}

TEST_CASE("repeated sweeps reach a state the rounder maps to itself") {
    const auto A = sample_goe(80, 4);
    auto v = random_cube_point(80, 4);
    std::vector<std::int8_t> prev;
    // Greedy sweeps never lower the off-diagonal energy and the state space
    // is finite, so this loop must stabilize.
    for (int sweep = 0; sweep < 200; ++sweep) {
        const auto rep = sequential_round(A, v);
        if (!prev.empty() && rep.sigma == prev) break;
        prev = rep.sigma;
        v.assign(rep.sigma.begin(), rep.sigma.end());
    }
    const auto again = sequential_round(A, v);
    CHECK(again.sigma == prev);
    CHECK(again.coordinate_flips == 0);
    const double before = again.energy_before;
    CHECK(again.energy_after == doctest::Approx(before).epsilon(1e-14));
}

TEST_CASE("rounding rejects points outside the cube") {
    const auto A = sample_goe(4, 1);
    CHECK_THROWS_AS(sequential_round(A, {0.0, 2.0, 0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(sequential_round(A, {0.0, 0.0, 0.0}), ValidationError);
}

TEST_CASE("cube projection and distance") {
    const auto p = project_to_cube({2.0, -3.0, 0.25});
    CHECK(p[0] == 1.0);
    CHECK(p[1] == -1.0);
    CHECK(p[2] == 0.25);
    CHECK(cube_distance_sq({2.0, -3.0, 0.25}) ==
          doctest::Approx((1.0 + 4.0) / 3.0).epsilon(1e-14));
    CHECK(cube_distance_sq({0.5, -0.5}) == 0.0);
}

TEST_CASE("balance flips the lowest-index majority spins") {
    {
        std::vector<std::int8_t> s{1, 1, 1, 1, -1, 1};
        const auto b = balance(s);  // sum 4, even n: flip two pluses
        CHECK(spin_sum(b) == 0);
        CHECK(b == std::vector<std::int8_t>{-1, -1, 1, 1, -1, 1});
    }
    {
        std::vector<std::int8_t> s{1, 1, 1, 1, 1};
        const auto b = balance(s);  // sum 5, odd n: flip two
        CHECK(spin_sum(b) == 1);
        CHECK(b == std::vector<std::int8_t>{-1, -1, 1, 1, 1});
    }
    {
        std::vector<std::int8_t> s{-1, 1, -1, -1};
        const auto b = balance(s);  // sum -2: flip one minority... majority -1
        CHECK(spin_sum(b) == 0);
        CHECK(b == std::vector<std::int8_t>{1, 1, -1, -1});
    }
    {
        std::vector<std::int8_t> s{1, -1};
        CHECK(balance(s) == s);  // already balanced
    }
}

TEST_CASE("min-damage balancing picks the weakest fields") {
    // Star-like couplings give distinct field magnitudes 0.1, 0.2, 0.3, 0.4
    // for the four plus spins against the hub.
    const std::int64_t n = 5;
    std::vector<double> e(n * n, 0.0);
    const double w[4] = {0.3, 0.1, 0.4, 0.2};
    for (int i = 0; i < 4; ++i) {
        e[0 * n + (i + 1)] = w[i];
        e[(i + 1) * n + 0] = w[i];
    }
    const auto A = make_matrix(n, std::move(e));
    std::vector<std::int8_t> s{1, 1, 1, 1, 1};  // sum 5: two flips due
    const auto b = balance_min_damage(s, A);
    CHECK(spin_sum(b) == 1);
    // Weakest couplings sit at indices 2 (0.1) and 4 (0.2).
    CHECK(b == std::vector<std::int8_t>{1, 1, -1, 1, -1});

    // Same flip budget as the positional rule.
    const auto pos = balance(s);
    std::int64_t flips_pos = 0, flips_md = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        flips_pos += pos[i] != s[i];
        flips_md += b[i] != s[i];
    }
    CHECK(flips_pos == flips_md);
}

TEST_CASE("cut values on graphs solvable by eye") {
    {
        // Complete graph on 4 vertices, split 2-2: every cross pair is an edge.
        ErGraph g;
        g.n = 4;
        g.p = 1.0;
        g.adj.assign(16, 1);
        for (int i = 0; i < 4; ++i) g.adj[i * 4 + i] = 0;
        g.edges = 6;
        CHECK(maxcut_value(g, {1, 1, -1, -1}) == 4);
        CHECK(maxcut_value(g, {1, -1, -1, -1}) == 3);
        CHECK(maxcut_value(g, {1, 1, 1, 1}) == 0);
    }
    {
        ErGraph g;
        g.n = 3;
        g.p = 0.0;
        g.adj.assign(9, 0);
        g.edges = 0;
        CHECK(maxcut_value(g, {1, -1, 1}) == 0);
    }
}

TEST_CASE("cut identity against the centered matrix") {
    // With S = sum sigma and A the centered adjacency,
    //   cut = |E|/2 - (p/4) S^2 + n p/4 + (1/4) sqrt(n p (1-p)) <sigma, A sigma>.
    for (const double p : {0.5, 0.2}) {
        const std::int64_t n = 500;
        const auto g = sample_er_graph(n, p, 31);
        const auto A = center_er_graph(g);
        const auto sigma_rep = sequential_round(A, random_cube_point(n, 5));
        for (const auto& sigma : {sigma_rep.sigma, balance(sigma_rep.sigma)}) {
            const double cut = static_cast<double>(maxcut_value(g, sigma));
            const double S = static_cast<double>(spin_sum(sigma));
            std::vector<double> sd(sigma.begin(), sigma.end());
            const double quad = A.quadratic_form(sd);
            const double rhs = static_cast<double>(g.edges) / 2.0 -
                               p / 4.0 * S * S + static_cast<double>(n) * p / 4.0 +
                               0.25 * std::sqrt(n * p * (1.0 - p)) * quad;
            CHECK(std::abs(cut - rhs) / cut < 1e-6);
        }
    }
}

TEST_CASE("sign vectors survive the text round trip") {
    const std::vector<std::int8_t> s{1, -1, -1, 1, 1};
    const auto path = std::filesystem::temp_directory_path() / "skamp_sigma.txt";
    export_sigma_text(s, path);
    CHECK(load_sigma_text(path) == s);
    std::filesystem::remove(path);

    const auto bad = std::filesystem::temp_directory_path() / "skamp_sigma_bad.txt";
    {
        FILE* f = std::fopen(bad.c_str(), "w");
        std::fputs("1 -1 2\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_sigma_text(bad), ValidationError);
    std::filesystem::remove(bad);
}
