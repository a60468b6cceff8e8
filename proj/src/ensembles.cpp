#include "skamp/ensembles.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "skamp/errors.hpp"
#include "skamp/io.hpp"
#include "skamp/rng.hpp"

namespace skamp {

namespace {

void check_n(std::int64_t n) {
    if (n < 1) throw ValidationError("matrix size must be >= 1, got " + std::to_string(n));
}

constexpr char kMatrixMagic[6] = {'S', 'K', 'M', 'A', 'T', '1'};

}  // namespace

void CouplingMatrix::matvec(std::span<const double> x, std::span<double> y) const {
    if (static_cast<std::int64_t>(x.size()) != n || static_cast<std::int64_t>(y.size()) != n)
        throw ValidationError("matvec: dimension mismatch");
    for (std::int64_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * n;
        double acc = 0.0;
        for (std::int64_t j = 0; j < n; ++j) acc += ai[j] * x[j];
        y[i] = acc;
    }
}

double CouplingMatrix::quadratic_form(std::span<const double> x) const {
    if (static_cast<std::int64_t>(x.size()) != n)
        throw ValidationError("quadratic_form: dimension mismatch");
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * n;
        double row = 0.0;
        for (std::int64_t j = 0; j < n; ++j) row += ai[j] * x[j];
        acc += x[i] * row;
    }
    return acc;
}

double energy(const CouplingMatrix& A, std::span<const double> v) {
    return A.quadratic_form(v) / (2.0 * static_cast<double>(A.n));
}

double energy(const CouplingMatrix& A, std::span<const std::int8_t> sigma) {
    std::vector<double> v(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) v[i] = static_cast<double>(sigma[i]);
    return energy(A, v);
}

CouplingMatrix sample_goe(std::int64_t n, std::uint64_t seed) {
    check_n(n);
    CouplingMatrix A{n, Ensemble::Goe, seed, std::vector<double>(n * n)};
    const CounterRng rng(seed, 0);
    const double off = 1.0 / std::sqrt(static_cast<double>(n));
    const double diag = std::sqrt(2.0 / static_cast<double>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        A.a[i * n + i] = diag * rng.normal(static_cast<std::uint64_t>(i * n + i));
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double v = off * rng.normal(static_cast<std::uint64_t>(i * n + j));
            A.a[i * n + j] = v;
            A.a[j * n + i] = v;
        }
    }
    return A;
}

CouplingMatrix sample_rademacher(std::int64_t n, std::uint64_t seed) {
    check_n(n);
    CouplingMatrix A{n, Ensemble::Rademacher, seed, std::vector<double>(n * n)};
    const CounterRng rng(seed, 1);
    const double off = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        A.a[i * n + i] = 0.0;
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double v = (rng.bits(static_cast<std::uint64_t>(i * n + j)) & 1) ? off : -off;
            A.a[i * n + j] = v;
            A.a[j * n + i] = v;
        }
    }
    return A;
}

ErGraph sample_er_graph(std::int64_t n, double p, std::uint64_t seed) {
    check_n(n);
    if (!(p > 0.0 && p < 1.0))
        throw ValidationError("edge probability must lie in (0,1), got " + std::to_string(p));
    ErGraph g{n, p, seed, std::vector<std::uint8_t>(n * n, 0), 0};
    const CounterRng rng(seed, 2);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) {
            if (rng.uniform(static_cast<std::uint64_t>(i * n + j)) <= p) {
                g.adj[i * n + j] = 1;
                g.adj[j * n + i] = 1;
                ++g.edges;
            }
        }
    }
    return g;
}

CouplingMatrix center_er_graph(const ErGraph& g) {
    check_n(g.n);
    const std::int64_t n = g.n;
    CouplingMatrix A{n, Ensemble::CenteredEr, g.seed, std::vector<double>(n * n)};
    const double on_edge = -std::sqrt((1.0 - g.p) / (n * g.p));
    const double on_gap = std::sqrt(g.p / (n * (1.0 - g.p)));
    for (std::int64_t i = 0; i < n; ++i) {
        A.a[i * n + i] = 0.0;
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double v = g.adj[i * n + j] ? on_edge : on_gap;
            A.a[i * n + j] = v;
            A.a[j * n + i] = v;
        }
    }
    return A;
}

void save_matrix(const std::filesystem::path& path, const CouplingMatrix& A) {
    io::AtomicFileWriter w(path);
    auto& os = w.stream();
    os.write(kMatrixMagic, sizeof(kMatrixMagic));
    io::write_u64(os, static_cast<std::uint64_t>(A.n));
    const char tag = static_cast<char>(A.ensemble);
    os.write(&tag, 1);
    io::write_u64(os, A.seed);
    for (std::int64_t i = 0; i < A.n; ++i)
        io::write_f64_array(os, std::span<const double>(A.a.data() + i * A.n + i,
                                                        static_cast<std::size_t>(A.n - i)));
    w.commit();
}

CouplingMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open matrix file: " + path.string());
    char magic[6];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0)
        throw ValidationError("bad matrix file magic: " + path.string());
    const auto n = static_cast<std::int64_t>(io::read_u64(is));
    check_n(n);
    char tag = 0;
    is.read(&tag, 1);
    if (!is || tag < 0 || tag > 3)
        throw ValidationError("bad ensemble tag in " + path.string());
    const auto seed = io::read_u64(is);
    CouplingMatrix A{n, static_cast<Ensemble>(tag), seed, std::vector<double>(n * n)};
    for (std::int64_t i = 0; i < n; ++i) {
        auto row = io::read_f64_array(is, static_cast<std::size_t>(n - i));
        for (std::int64_t j = i; j < n; ++j) {
            A.a[i * n + j] = row[j - i];
            A.a[j * n + i] = row[j - i];
        }
    }
    return A;
}

}  // namespace skamp
