#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tdseg/energy.hpp"
#include "tdseg/field.hpp"
#include "tdseg/image_io.hpp"
#include "tdseg/oracle.hpp"
#include "tdseg/solver.hpp"
#include "tdseg/spectral.hpp"

namespace py = pybind11;
using namespace tdseg;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ImageField image_from_array(const DoubleArray& array) {
    const auto buf = array.request();
    if (buf.ndim != 2 && buf.ndim != 3)
        throw std::invalid_argument("image must be (H, W) or (H, W, C)");
    const int ny = static_cast<int>(buf.shape[0]);
    const int nx = static_cast<int>(buf.shape[1]);
    const int channels = buf.ndim == 3 ? static_cast<int>(buf.shape[2]) : 1;
    const double* data = static_cast<const double*>(buf.ptr);
    std::vector<double> values(data, data + static_cast<std::size_t>(ny) * nx * channels);
    return ImageField(Grid::for_image(nx, ny), channels, std::move(values));
}

ScalarField field_from_array(const DoubleArray& array) {
    const auto buf = array.request();
    if (buf.ndim != 2) throw std::invalid_argument("field must be (H, W)");
    const int ny = static_cast<int>(buf.shape[0]);
    const int nx = static_cast<int>(buf.shape[1]);
    const double* data = static_cast<const double*>(buf.ptr);
    return ScalarField(Grid::for_image(nx, ny),
                       std::vector<double>(data, data + static_cast<std::size_t>(ny) * nx));
}

py::array_t<double> array_from_field(const ScalarField& field) {
    const int ny = field.grid().ny, nx = field.grid().nx;
    py::array_t<double> out({ny, nx});
    std::copy_n(field.data(), field.size(), out.mutable_data());
    return out;
}

py::array_t<double> array_from_image(const ImageField& image) {
    const int ny = image.grid().ny, nx = image.grid().nx, d = image.channels();
    py::array_t<double> out = d == 1 ? py::array_t<double>({ny, nx})
                                     : py::array_t<double>({ny, nx, d});
    std::copy_n(image.data(), image.size(), out.mutable_data());
    return out;
}

Partition partition_from_array(const LabelArray& array, int nphases) {
    const auto buf = array.request();
    if (buf.ndim != 2) throw std::invalid_argument("labels must be (H, W)");
    const int ny = static_cast<int>(buf.shape[0]);
    const int nx = static_cast<int>(buf.shape[1]);
    const std::uint8_t* data = static_cast<const std::uint8_t*>(buf.ptr);
    return Partition(
        Grid::for_image(nx, ny), nphases,
        std::vector<std::uint8_t>(data, data + static_cast<std::size_t>(ny) * nx));
}

py::array_t<std::uint8_t> array_from_labels(std::span<const std::uint8_t> labels, int nx,
                                            int ny) {
    py::array_t<std::uint8_t> out({ny, nx});
    std::copy(labels.begin(), labels.end(), out.mutable_data());
    return out;
}

LabelMap label_map_from_array(const LabelArray& array) {
    const auto buf = array.request();
    if (buf.ndim != 2) throw std::invalid_argument("labels must be (H, W)");
    LabelMap map;
    map.height = static_cast<int>(buf.shape[0]);
    map.width = static_cast<int>(buf.shape[1]);
    const std::uint8_t* data = static_cast<const std::uint8_t*>(buf.ptr);
    map.labels.assign(data, data + static_cast<std::size_t>(map.width) * map.height);
    return map;
}

py::dict breakdown_to_dict(const EnergyBreakdown& e) {
    py::dict out;
    out["fidelity"] = e.fidelity_total;
    out["perimeter"] = e.perimeter_total;
    out["total"] = e.total;
    out["lambda"] = e.lambda;
    out["per_phase_perimeter"] = e.per_phase_perimeter;
    return out;
}

} // namespace

PYBIND11_MODULE(_tdseg, m) {
    m.doc() = "Multi-phase piecewise-constant image segmentation by FFT-based "
              "threshold dynamics";
    m.attr("__version__") = "0.1.0";

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init([](int phases, double dt, double lambda, double tau, int max_iter,
                         const std::string& init, std::uint64_t seed, bool assert_decay) {
                 SolverConfig config;
                 config.nphases = phases;
                 config.dt = dt;
                 config.lambda = lambda;
                 config.tau = tau;
                 config.max_iter = max_iter;
                 config.init = init_strategy_from_string(init);
                 config.seed = seed;
                 config.assert_decay = assert_decay;
                 config.validate();
                 return config;
             }),
             py::arg("phases") = 2, py::arg("dt") = 0.01, py::arg("lambda_") = 0.003,
             py::arg("tau") = 0.0, py::arg("max_iter") = 500, py::arg("init") = "circles",
             py::arg("seed") = 0, py::arg("assert_decay") = true)
        .def_readwrite("phases", &SolverConfig::nphases)
        .def_readwrite("dt", &SolverConfig::dt)
        .def_readwrite("lambda_", &SolverConfig::lambda)
        .def_readwrite("tau", &SolverConfig::tau)
        .def_readwrite("max_iter", &SolverConfig::max_iter)
        .def_readwrite("seed", &SolverConfig::seed)
        .def_readwrite("assert_decay", &SolverConfig::assert_decay)
        .def_property(
            "init", [](const SolverConfig& c) { return to_string(c.init); },
            [](SolverConfig& c, const std::string& name) {
                c.init = init_strategy_from_string(name);
            });

    py::class_<SolveResult>(m, "SolveResult")
        .def_property_readonly("labels",
                               [](const SolveResult& r) {
                                   return array_from_labels(r.final.labels(),
                                                            r.final.grid().nx,
                                                            r.final.grid().ny);
                               })
        .def_property_readonly("converged", [](const SolveResult& r) { return r.converged; })
        .def_property_readonly("iterations",
                               [](const SolveResult& r) { return r.iterations(); })
        .def_property_readonly("stop_reason",
                               [](const SolveResult& r) { return to_string(r.stop_reason); })
        .def_property_readonly("energies",
                               [](const SolveResult& r) {
                                   std::vector<double> totals;
                                   for (const auto& rep : r.reports)
                                       totals.push_back(rep.energy.total);
                                   return totals;
                               })
        .def_property_readonly("e_history",
                               [](const SolveResult& r) {
                                   std::vector<double> e;
                                   for (const auto& rep : r.reports) e.push_back(rep.e_k);
                                   return e;
                               })
        .def("report", [](const SolveResult& r, int k) {
            const auto& rep = r.reports.at(k);
            py::dict out;
            out["k"] = rep.k;
            out["energy"] = breakdown_to_dict(rep.energy);
            out["e_k"] = rep.e_k;
            out["means"] = rep.means;
            out["changed_pixels"] = rep.changed_pixels;
            out["wall_seconds"] = rep.wall_seconds;
            return out;
        });

    m.def(
        "solve",
        [](const DoubleArray& image, const SolverConfig& config,
           const py::object& initial_labels) {
            const ImageField f = image_from_array(image);
            if (initial_labels.is_none()) {
                py::gil_scoped_release release;
                return solve(f, config);
            }
            const Partition initial =
                partition_from_array(initial_labels.cast<LabelArray>(), config.nphases);
            py::gil_scoped_release release;
            return solve(f, config, initial);
        },
        py::arg("image"), py::arg("config"), py::arg("initial_labels") = py::none(),
        "Run the iterative thresholding segmentation on an (H, W[, C]) array.");

    m.def(
        "initialize",
        [](const DoubleArray& image, const SolverConfig& config) {
            const ImageField f = image_from_array(image);
            const Partition u = initialize(f, config);
            return array_from_labels(u.labels(), u.grid().nx, u.grid().ny);
        },
        py::arg("image"), py::arg("config"), "Initial partition for an image.");

    m.def(
        "make_phantom",
        [](const std::string& kind, int size, double sigma, std::uint64_t seed) {
            const Phantom phantom =
                make_phantom(phantom_kind_from_string(kind), size, sigma, seed);
            return py::make_tuple(
                array_from_image(phantom.image),
                array_from_labels(phantom.truth.labels, phantom.truth.width,
                                  phantom.truth.height),
                phantom.nphases);
        },
        py::arg("kind"), py::arg("size"), py::arg("sigma") = 0.2, py::arg("seed") = 0,
        "Synthetic image with ground truth: returns (image, truth, phases).");

    m.def(
        "misclassification_rate",
        [](const LabelArray& result, const LabelArray& truth) {
            return misclassification_rate(label_map_from_array(result),
                                          label_map_from_array(truth));
        },
        py::arg("result"), py::arg("truth"),
        "Mismatch fraction minimized over phase relabelings.");

    m.def(
        "total_energy",
        [](const DoubleArray& image, const LabelArray& labels, int phases, double dt,
           double lambda) {
            const ImageField f = image_from_array(image);
            const Partition u = partition_from_array(labels, phases);
            const ConvolutionPlan plan(make_kernel(f.grid(), dt));
            return breakdown_to_dict(total_energy(f, u, phase_stats(f, u), plan, lambda));
        },
        py::arg("image"), py::arg("labels"), py::arg("phases"), py::arg("dt"),
        py::arg("lambda_"), "Approximate segmentation energy of a labeling.");

    m.def(
        "brute_energy",
        [](const DoubleArray& image, const LabelArray& labels, int phases, double dt,
           double lambda) {
            const ImageField f = image_from_array(image);
            return brute_energy(f, partition_from_array(labels, phases), dt, lambda);
        },
        py::arg("image"), py::arg("labels"), py::arg("phases"), py::arg("dt"),
        py::arg("lambda_"), "Reference energy by direct summation (small grids only).");

    m.def(
        "perimeter_estimate",
        [](const LabelArray& labels, int phases, double dt) {
            const Partition u = partition_from_array(labels, phases);
            const ConvolutionPlan plan(make_kernel(u.grid(), dt));
            return perimeter_estimate(u, plan);
        },
        py::arg("labels"), py::arg("phases"), py::arg("dt"),
        "Per-phase boundary length estimates.");

    m.def(
        "convolve",
        [](const DoubleArray& field, double dt) {
            const ScalarField u = field_from_array(field);
            const ConvolutionPlan plan(make_kernel(u.grid(), dt));
            return array_from_field(plan(u));
        },
        py::arg("field"), py::arg("dt"), "Heat-kernel convolution via FFT.");

    m.def(
        "convolve_direct",
        [](const DoubleArray& field, double dt) {
            const ScalarField u = field_from_array(field);
            return array_from_field(convolve_direct(u.grid(), dt, u));
        },
        py::arg("field"), py::arg("dt"),
        "Reference heat-kernel convolution by direct summation.");

    m.def(
        "load_image",
        [](const std::string& path) { return array_from_image(normalize(load_image(path))); },
        py::arg("path"), "Load PGM/PPM/PNG and normalize to [0, 1].");

    m.def(
        "write_label_map",
        [](const LabelArray& labels, int phases, const std::string& path) {
            write_label_map(label_map_from_array(labels), default_palette(phases), path);
        },
        py::arg("labels"), py::arg("phases"), py::arg("path"),
        "Write labels as a PNG through the default palette.");

    m.def(
        "load_label_map",
        [](const std::string& path, int phases) {
            const LabelMap map = load_label_map(path, default_palette(phases));
            return array_from_labels(map.labels, map.width, map.height);
        },
        py::arg("path"), py::arg("phases"),
        "Read back a label map written with the default palette.");

    py::register_exception<io_error>(m, "IoError");
    py::register_exception<unsupported_format_error>(m, "UnsupportedFormatError");
    py::register_exception<corrupt_file_error>(m, "CorruptFileError");
}
