#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <span>

#include "skamp/diagnostics.hpp"
#include "skamp/ensembles.hpp"
#include "skamp/iamp.hpp"
#include "skamp/parisi.hpp"
#include "skamp/pipeline.hpp"
#include "skamp/rounding.hpp"
#include "skamp/sde.hpp"

namespace py = pybind11;
using namespace skamp;

namespace {

py::array_t<double> dense_view(const CouplingMatrix& A) {
    const auto n = static_cast<py::ssize_t>(A.n);
    py::array_t<double> out({n, n});
    std::memcpy(out.mutable_data(), A.a.data(), A.a.size() * sizeof(double));
    return out;
}

CouplingMatrix matrix_from_numpy(const py::array_t<double, py::array::c_style |
                                                              py::array::forcecast>& arr,
                                 std::uint64_t seed) {
    if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1))
        throw ValidationError("expected a square 2-d array");
    CouplingMatrix A;
    A.n = static_cast<std::int64_t>(arr.shape(0));
    A.ensemble = Ensemble::Custom;
    A.seed = seed;
    A.a.assign(arr.data(), arr.data() + A.n * A.n);
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t j = i + 1; j < A.n; ++j)
            if (A.a[i * A.n + j] != A.a[j * A.n + i])
                throw ValidationError("matrix is not symmetric");
    return A;
}

std::vector<double> as_vector(const py::array_t<double, py::array::c_style |
                                                            py::array::forcecast>& arr) {
    if (arr.ndim() != 1) throw ValidationError("expected a 1-d array");
    return {arr.data(), arr.data() + arr.shape(0)};
}

py::array_t<double> to_numpy(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
}

}  // namespace

PYBIND11_MODULE(_skamp, m) {
    m.doc() = "ground-state search for mean-field spin glasses";

    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    py::enum_<Ensemble>(m, "Ensemble")
        .value("goe", Ensemble::Goe)
        .value("rademacher", Ensemble::Rademacher)
        .value("centered_er", Ensemble::CenteredEr)
        .value("custom", Ensemble::Custom);

    py::class_<CouplingMatrix>(m, "CouplingMatrix")
        .def_readonly("n", &CouplingMatrix::n)
        .def_readonly("ensemble", &CouplingMatrix::ensemble)
        .def_readonly("seed", &CouplingMatrix::seed)
        .def("dense", &dense_view, "copy of the matrix as an (n, n) array")
        .def("energy",
             [](const CouplingMatrix& A, const py::array_t<double>& v) {
                 const auto x = as_vector(v);
                 return energy(A, std::span<const double>(x));
             })
        .def("save", [](const CouplingMatrix& A, const std::filesystem::path& p) {
            save_matrix(p, A);
        });

    m.def("sample_goe", &sample_goe, py::arg("n"), py::arg("seed"));
    m.def("sample_rademacher", &sample_rademacher, py::arg("n"), py::arg("seed"));
    m.def("matrix_from_dense", &matrix_from_numpy, py::arg("array"),
          py::arg("seed") = 0, "wrap a symmetric numpy array");
    m.def("load_matrix", &load_matrix, py::arg("path"));

    py::class_<ErGraph>(m, "ErGraph")
        .def_readonly("n", &ErGraph::n)
        .def_readonly("p", &ErGraph::p)
        .def_readonly("edges", &ErGraph::edges);
    m.def("sample_er_graph", &sample_er_graph, py::arg("n"), py::arg("p"),
          py::arg("seed"));
    m.def("center_er_graph", &center_er_graph, py::arg("graph"));

    py::class_<ParisiMeasure>(m, "ParisiMeasure")
        .def_static("step_at", &ParisiMeasure::step_at, py::arg("q"))
        .def_static("point_mass_at_zero", &ParisiMeasure::point_mass_at_zero)
        .def_static(
            "from_increments",
            [](std::vector<double> knots, std::vector<double> inc) {
                return ParisiMeasure::from_increments(std::move(knots), inc);
            },
            py::arg("knots"), py::arg("increments"))
        .def_readonly("knots", &ParisiMeasure::knots)
        .def_readonly("cdf", &ParisiMeasure::cdf)
        .def("q_star", &ParisiMeasure::q_star)
        .def("mu_at", &ParisiMeasure::mu_at, py::arg("t"))
        .def("second_moment", &ParisiMeasure::second_moment)
        .def("integral_t_mu", &ParisiMeasure::integral_t_mu);

    py::class_<PdeGrid>(m, "PdeGrid")
        .def(py::init([](double dt, double dx, double x_max) {
                 return PdeGrid{dt, dx, x_max};
             }),
             py::arg("dt") = 1e-3, py::arg("dx") = 0.02, py::arg("x_max") = 0.0)
        .def_readwrite("dt", &PdeGrid::dt)
        .def_readwrite("dx", &PdeGrid::dx)
        .def_readwrite("x_max", &PdeGrid::x_max);

    py::class_<ParisiOracle>(m, "ParisiOracle")
        .def("phi", &ParisiOracle::phi, py::arg("t"), py::arg("x"))
        .def("dphi", &ParisiOracle::dphi, py::arg("t"), py::arg("x"))
        .def("d2phi", &ParisiOracle::d2phi, py::arg("t"), py::arg("x"))
        .def("beta", &ParisiOracle::beta)
        .def("q_star", &ParisiOracle::q_star)
        .def("measure", &ParisiOracle::measure)
        .def("save", &ParisiOracle::save, py::arg("path"))
        .def_static("load", &ParisiOracle::load, py::arg("path"));

    m.def("solve_pde", &solve_pde, py::arg("beta"), py::arg("measure"),
          py::arg("grid") = PdeGrid{});
    m.def("parisi_functional", &parisi_functional, py::arg("beta"),
          py::arg("measure"), py::arg("grid") = PdeGrid{});

    py::class_<MinimizeResult>(m, "MinimizeResult")
        .def_readonly("measure", &MinimizeResult::measure)
        .def_readonly("value", &MinimizeResult::value)
        .def_readonly("grad_norm", &MinimizeResult::grad_norm)
        .def_readonly("iterations", &MinimizeResult::iterations)
        .def_readonly("converged", &MinimizeResult::converged);
    m.def(
        "minimize_parisi",
        [](double beta, int K, const PdeGrid& grid, int max_iters, double tol) {
            MinimizeOptions opts;
            opts.max_iters = max_iters;
            opts.tol = tol;
            return minimize_parisi(beta, K, grid, opts);
        },
        py::arg("beta"), py::arg("K"), py::arg("grid") = PdeGrid{},
        py::arg("max_iters") = 600, py::arg("tol") = 1e-4);

    py::enum_<NormalizationMode>(m, "NormalizationMode")
        .value("empirical", NormalizationMode::Empirical)
        .value("state_evolution", NormalizationMode::StateEvolution);

    py::class_<IampParams>(m, "IampParams")
        .def(py::init<>())
        .def_readwrite("beta", &IampParams::beta)
        .def_readwrite("delta", &IampParams::delta)
        .def_readwrite("M", &IampParams::M)
        .def_readwrite("q_bar", &IampParams::q_bar)
        .def_readwrite("mode", &IampParams::mode)
        .def_readwrite("x0_ones", &IampParams::x0_ones)
        .def_readwrite("se_divisors", &IampParams::se_divisors);

    py::class_<IampResult>(m, "IampResult")
        .def_property_readonly("z", [](const IampResult& r) { return to_numpy(r.z); })
        .def_property_readonly(
            "x_final", [](const IampResult& r) { return to_numpy(r.x_final); })
        .def_readonly("energy", &IampResult::energy)
        .def_readonly("flops", &IampResult::flops)
        .def_property_readonly("trace", [](const IampResult& r) {
            py::dict d;
            d["k"] = r.trace.k;
            d["t"] = to_numpy(r.trace.t);
            d["b"] = to_numpy(r.trace.b);
            d["u_norm2_over_n"] = to_numpy(r.trace.u_norm2_over_n);
            d["mean_g"] = to_numpy(r.trace.mean_g);
            d["energy_partial_z"] = to_numpy(r.trace.energy_partial_z);
            return d;
        });
    m.def("run_iamp", &run_iamp, py::arg("A"), py::arg("oracle"), py::arg("params"),
          py::arg("seed"), py::arg("keep_u_log") = false,
          py::call_guard<py::gil_scoped_release>());

    py::class_<RoundingReport>(m, "RoundingReport")
        .def_property_readonly("sigma",
                               [](const RoundingReport& r) {
                                   py::array_t<std::int8_t> out(
                                       static_cast<py::ssize_t>(r.sigma.size()));
                                   std::memcpy(out.mutable_data(), r.sigma.data(),
                                               r.sigma.size());
                                   return out;
                               })
        .def_readonly("energy_before", &RoundingReport::energy_before)
        .def_readonly("energy_after", &RoundingReport::energy_after)
        .def_readonly("coordinate_flips", &RoundingReport::coordinate_flips)
        .def_readonly("ties", &RoundingReport::ties)
        .def_readonly("monotonicity_trace", &RoundingReport::monotonicity_trace);
    m.def(
        "sequential_round",
        [](const CouplingMatrix& A, const py::array_t<double>& z) {
            return sequential_round(A, as_vector(z));
        },
        py::arg("A"), py::arg("z"), py::call_guard<py::gil_scoped_release>());
    m.def("project_to_cube", [](const py::array_t<double>& z) {
        return to_numpy(project_to_cube(as_vector(z)));
    });
    m.def("cube_distance_sq", [](const py::array_t<double>& z) {
        return cube_distance_sq(as_vector(z));
    });
    m.def("balance", &balance, py::arg("sigma"));
    m.def("balance_min_damage", &balance_min_damage, py::arg("sigma"), py::arg("A"));
    m.def("maxcut_value", &maxcut_value, py::arg("graph"), py::arg("sigma"));

    py::class_<TapReport>(m, "TapReport")
        .def_readonly("residual_consistency", &TapReport::residual_consistency)
        .def_readonly("residual_tap", &TapReport::residual_tap)
        .def_readonly("residual_full", &TapReport::residual_full);
    m.def(
        "tap_residuals",
        [](const CouplingMatrix& A, const py::array_t<double>& z,
           const py::array_t<double>& x_final, double beta, double q_star) {
            return tap_residuals(A, as_vector(z), as_vector(x_final), beta, q_star);
        },
        py::arg("A"), py::arg("z"), py::arg("x_final"), py::arg("beta"),
        py::arg("q_star"));
    m.def("operator_norm_estimate", &operator_norm_estimate, py::arg("A"),
          py::arg("steps") = 200, py::arg("seed") = 99,
          py::call_guard<py::gil_scoped_release>());
    py::class_<SpectralBaseline>(m, "SpectralBaseline")
        .def_readonly("sigma", &SpectralBaseline::sigma)
        .def_readonly("energy", &SpectralBaseline::energy)
        .def_readonly("lambda_max", &SpectralBaseline::lambda_max)
        .def_readonly("iterations", &SpectralBaseline::iterations);
    m.def("spectral_baseline", &spectral_baseline, py::arg("A"), py::arg("seed") = 99,
          py::arg("max_iters") = 100000, py::call_guard<py::gil_scoped_release>());
    py::class_<EnergySandwich>(m, "EnergySandwich")
        .def_readonly("e0", &EnergySandwich::e0)
        .def_readonly("upper", &EnergySandwich::upper)
        .def_readonly("eps_beta", &EnergySandwich::eps_beta);
    m.def("energy_sandwich", &energy_sandwich, py::arg("measure"), py::arg("beta"));

    m.def("se_normalizers", &se_normalizers, py::arg("oracle"), py::arg("measure"),
          py::arg("beta"), py::arg("delta"), py::arg("q_bar"), py::arg("n_paths"),
          py::arg("seed"), py::arg("x_init") = 0.0,
          py::call_guard<py::gil_scoped_release>());

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def("set", &ExperimentConfig::set, py::arg("key"), py::arg("value"))
        .def("to_text", &ExperimentConfig::to_text)
        .def_static("from_text", &ExperimentConfig::from_text, py::arg("text"))
        .def_readwrite("beta", &ExperimentConfig::beta)
        .def_readwrite("n", &ExperimentConfig::n)
        .def_readwrite("seeds", &ExperimentConfig::seeds)
        .def_readwrite("K", &ExperimentConfig::K)
        .def_readwrite("cache_dir", &ExperimentConfig::cache_dir)
        .def_readwrite("output_dir", &ExperimentConfig::output_dir);

    py::class_<ParisiArtifacts>(m, "ParisiArtifacts")
        .def_property_readonly("oracle",
                               [](const ParisiArtifacts& a) { return a.oracle; })
        .def_readonly("value", &ParisiArtifacts::value)
        .def_readonly("converged", &ParisiArtifacts::converged)
        .def_readonly("cache_hit", &ParisiArtifacts::cache_hit)
        .def_readonly("cache_path", &ParisiArtifacts::cache_path);
    m.def("solve_and_cache_parisi", &solve_and_cache_parisi, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<RunReport>(m, "RunReport")
        .def_readonly("seed", &RunReport::seed)
        .def_readonly("energy_iamp_raw", &RunReport::energy_iamp_raw)
        .def_readonly("energy_iamp_rounded", &RunReport::energy_iamp_rounded)
        .def_readonly("energy_spectral", &RunReport::energy_spectral)
        .def_readonly("se_predicted", &RunReport::se_predicted)
        .def_readonly("cut", &RunReport::cut)
        .def_readonly("excess_cut_normalized", &RunReport::excess_cut_normalized)
        .def_property_readonly("failed",
                               [](const RunReport& r) { return r.error.has_value(); });
    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("reports", &SweepResult::reports)
        .def_readonly("report_paths", &SweepResult::report_paths)
        .def_readonly("mean_rounded_energy", &SweepResult::mean_rounded_energy);
    m.def("run_sk", &run_sk, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_maxcut", &run_maxcut, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
}
