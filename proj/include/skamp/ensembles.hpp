#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace skamp {

enum class Ensemble : std::uint8_t {
    Goe = 0,
    Rademacher = 1,
    CenteredEr = 2,
    Custom = 3,
};

// Dense symmetric coupling matrix, row-major n*n.  Symmetry is exact at the
// bit level: samplers draw the upper triangle and mirror it.
struct CouplingMatrix {
    std::int64_t n = 0;
    Ensemble ensemble = Ensemble::Custom;
    std::uint64_t seed = 0;
    std::vector<double> a;

    double at(std::int64_t i, std::int64_t j) const { return a[i * n + j]; }
    const double* row(std::int64_t i) const { return a.data() + i * n; }

    // y = A x
    void matvec(std::span<const double> x, std::span<double> y) const;
    // <x, A x>
    double quadratic_form(std::span<const double> x) const;
};

// <v, A v> / (2 n): the per-site energy of a configuration.
double energy(const CouplingMatrix& A, std::span<const double> v);
double energy(const CouplingMatrix& A, std::span<const std::int8_t> sigma);

// Off-diagonal entries N(0, 1/n), diagonal N(0, 2/n).
CouplingMatrix sample_goe(std::int64_t n, std::uint64_t seed);

// Off-diagonal entries uniform on {-1/sqrt(n), +1/sqrt(n)}, zero diagonal.
CouplingMatrix sample_rademacher(std::int64_t n, std::uint64_t seed);

struct ErGraph {
    std::int64_t n = 0;
    double p = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::uint8_t> adj;  // row-major n*n, symmetric, zero diagonal
    std::int64_t edges = 0;

    bool edge(std::int64_t i, std::int64_t j) const { return adj[i * n + j] != 0; }
};

ErGraph sample_er_graph(std::int64_t n, double p, std::uint64_t seed);

// Centered, variance-1/n version of the adjacency matrix: an edge maps to
// -sqrt((1-p)/(np)), a non-edge to +sqrt(p/(n(1-p))), the diagonal to zero.
CouplingMatrix center_er_graph(const ErGraph& g);

// Binary dump: magic "SKMAT1", n (u64), ensemble tag (1 byte), seed (u64),
// then the row-major upper triangle (diagonal included) as 64-bit reals.
void save_matrix(const std::filesystem::path& path, const CouplingMatrix& A);
CouplingMatrix load_matrix(const std::filesystem::path& path);

}  // namespace skamp
