#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "skamp/ensembles.hpp"
#include "skamp/errors.hpp"

using namespace skamp;

TEST_CASE("goe entry scale matches the 1/n and 2/n variances") {
    // Expected second moments: off-diagonal 1/n, diagonal 2/n, so
    // n * mean(offdiag^2) -> 1 and n * mean(diag^2) -> 2.
    const std::int64_t n = 1000;
    double off_acc = 0.0, diag_acc = 0.0, off_cnt = 0.0, diag_cnt = 0.0;
    double fourth_acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto A = sample_goe(n, seed);
        for (std::int64_t i = 0; i < n; ++i) {
            diag_acc += A.at(i, i) * A.at(i, i);
            diag_cnt += 1.0;
            for (std::int64_t j = i + 1; j < n; ++j) {
                const double v = A.at(i, j);
                off_acc += v * v;
                fourth_acc += v * v * v * v;
                off_cnt += 1.0;
            }
        }
    }
    CHECK(n * off_acc / off_cnt == doctest::Approx(1.0).epsilon(0.05));
    CHECK(n * diag_acc / diag_cnt == doctest::Approx(2.0).epsilon(0.20));
    // Gaussian fourth moment: E[A_ij^4] = 3/n^2.
    CHECK(n * n * fourth_acc / off_cnt == doctest::Approx(3.0).epsilon(0.10));
}

TEST_CASE("goe frobenius norm matches the analytic moment sum") {
    // E|A|_F^2 = (n^2-n)/n + n*(2/n) = n + 1.
    const std::int64_t n = 1000;
    const auto A = sample_goe(n, 7);
    double f2 = 0.0;
    for (double v : A.a) f2 += v * v;
    CHECK(f2 / (n + 1) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("goe is bitwise symmetric and seed deterministic") {
    const auto A = sample_goe(300, 42);
    const auto B = sample_goe(300, 42);
    const auto C = sample_goe(300, 43);
    CHECK(A.a == B.a);
    CHECK(A.a != C.a);
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t j = 0; j < A.n; ++j)
            REQUIRE(A.at(i, j) == A.at(j, i));
}

TEST_CASE("lanczos oracle sanity on a rank-one matrix") {
    const std::int64_t n = 50;
    CouplingMatrix A{n, Ensemble::Custom, 0, std::vector<double>(n * n)};
    // v v^T with zero diagonal for alternating signs v: eigenvalues n-1, -1.
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            A.a[i * n + j] = (i == j) ? 0.0 : ((i + j) % 2 ? -1.0 : 1.0);
    const auto e = oracle::lanczos_extreme_eigs(A, 50);
    CHECK(e.lambda_max == doctest::Approx(n - 1.0).epsilon(1e-10));
    CHECK(e.lambda_min == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("goe spectrum reaches the semicircle edge") {
    const auto A = sample_goe(2000, 11);
    const auto e = oracle::lanczos_extreme_eigs(A);
    CHECK(e.lambda_max > 1.9);
    CHECK(e.lambda_max < 2.1);
    CHECK(e.lambda_min < -1.9);
    CHECK(e.lambda_min > -2.1);
}

TEST_CASE("rademacher entries and edge of spectrum") {
    const std::int64_t n = 2000;
    const auto A = sample_rademacher(n, 3);
    const double v = 1.0 / std::sqrt(static_cast<double>(n));
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        REQUIRE(A.at(i, i) == 0.0);
        for (std::int64_t j = i + 1; j < n; ++j) {
            REQUIRE(std::abs(A.at(i, j)) == v);
            sum += A.at(i, j);
        }
    }
    const double entries = 0.5 * n * (n - 1);
    CHECK(std::abs(sum / v) < 5.0 * std::sqrt(entries));  // fair coin CLT band
    const auto e = oracle::lanczos_extreme_eigs(A);
    CHECK(e.lambda_max == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("er graph edge count and centered matrix constants") {
    const std::int64_t n = 1000;
    const double p = 0.3;
    const auto g = sample_er_graph(n, p, 5);
    const double pairs = 0.5 * n * (n - 1);
    CHECK(std::abs(g.edges - pairs * p) < 5.0 * std::sqrt(pairs * p * (1 - p)));

    const auto A = center_er_graph(g);
    const double on_edge = -std::sqrt((1 - p) / (n * p));
    const double on_gap = std::sqrt(p / (n * (1 - p)));
    double total = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        REQUIRE(A.at(i, i) == 0.0);
        for (std::int64_t j = i + 1; j < n; ++j) {
            REQUIRE(A.at(i, j) == (g.edge(i, j) ? on_edge : on_gap));
            total += 2 * A.at(i, j);
        }
    }
    CHECK(std::abs(total) / (n * n) < 3e-4);  // centering kills the mean
    // Variance of a centered entry is exactly p*a^2+(1-p)*b^2 = 1/n.
    CHECK(p * on_edge * on_edge + (1 - p) * on_gap * on_gap ==
          doctest::Approx(1.0 / n).epsilon(1e-12));
}

TEST_CASE("matrix dump round trip is bitwise and rejects bad files") {
    const auto dir = std::filesystem::temp_directory_path() / "skamp_test_io";
    std::filesystem::create_directories(dir);
    const auto path = dir / "m.skmat";
    const auto A = sample_goe(64, 9);
    save_matrix(path, A);
    const auto B = load_matrix(path);
    CHECK(B.n == A.n);
    CHECK(B.seed == A.seed);
    CHECK(B.ensemble == A.ensemble);
    CHECK(B.a == A.a);

    const auto bad = dir / "bad.skmat";
    {
        std::ofstream os(bad, std::ios::binary);
        os << "NOTMAGIC garbage";
    }
    CHECK_THROWS_AS(load_matrix(bad), ValidationError);
    CHECK_THROWS_AS(sample_goe(0, 1), ValidationError);
    CHECK_THROWS_AS(sample_er_graph(10, 1.5, 1), ValidationError);
}

TEST_CASE("energy is the quadratic form over 2n") {
    // 2x2 hand computation: A = [[0,1],[1,0]], v = (1,-1):
    // <v,Av> = -2, energy = -2/(2*2) = -0.5.
    CouplingMatrix A{2, Ensemble::Custom, 0, {0.0, 1.0, 1.0, 0.0}};
    const std::vector<double> v{1.0, -1.0};
    CHECK(energy(A, v) == doctest::Approx(-0.5));
    const std::vector<std::int8_t> s{1, 1};
    CHECK(energy(A, std::span<const std::int8_t>(s)) == doctest::Approx(0.5));
}
