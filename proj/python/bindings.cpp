#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psp/error.hpp"
#include "psp/geometry.hpp"
#include "psp/recovery.hpp"
#include "psp/report.hpp"
#include "psp/signal.hpp"
#include "psp/simkit.hpp"

namespace py = pybind11;
using namespace psp;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

PatternConfig make_config(std::size_t height, std::size_t width, std::size_t ts, double f0, double amplitude,
                          const std::string& mode) {
    PatternConfig cfg;
    cfg.height = height;
    cfg.width = width;
    cfg.sampling_period = ts;
    cfg.carrier_frequency = f0;
    cfg.amplitude = amplitude;
    cfg.mode = parse_carrier_mode(mode);
    cfg.validate();
    return cfg;
}

ComplexArray to_array(const Raster<Complex>& r) {
    ComplexArray out({r.height(), r.width()});
    std::copy(r.data().begin(), r.data().end(), out.mutable_data());
    return out;
}

ComplexArray to_array(const std::vector<Complex>& v) {
    return ComplexArray(static_cast<py::ssize_t>(v.size()), v.data());
}

RealArray to_real(const std::vector<double>& v) {
    return RealArray(static_cast<py::ssize_t>(v.size()), v.data());
}

Raster<double> to_raster(const RealArray& a, std::size_t h, std::size_t w, const char* name) {
    if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != h || static_cast<std::size_t>(a.shape(1)) != w) {
        throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must have shape (height, width)");
    }
    Raster<double> r(h, w);
    std::copy(a.data(), a.data() + h * w, r.data().begin());
    return r;
}

SampledSignal to_sampled(const ComplexArray& samples, std::size_t ts, const std::string& mode) {
    if (samples.ndim() != 1) throw Error(ErrorCode::InvalidArgument, "samples must be one-dimensional");
    if (ts < 1) throw Error(ErrorCode::InvalidArgument, "T_s must be >= 1");
    SampledSignal s;
    s.values.assign(samples.data(), samples.data() + samples.size());
    s.sampling_period = ts;
    s.dense_length = s.values.size() * ts;
    s.mode = parse_carrier_mode(mode);
    return s;
}

std::vector<geometry::WorldPoint> to_points(const RealArray& world) {
    if (world.ndim() != 2 || world.shape(1) != 3) {
        throw Error(ErrorCode::DimensionMismatch, "world points must have shape (n, 3)");
    }
    std::vector<geometry::WorldPoint> pts(static_cast<std::size_t>(world.shape(0)));
    auto w = world.unchecked<2>();
    for (py::ssize_t i = 0; i < world.shape(0); ++i) pts[static_cast<std::size_t>(i)] = {w(i, 0), w(i, 1), w(i, 2)};
    return pts;
}

template <std::size_t N>
std::array<double, N> to_theta(const std::vector<double>& v) {
    if (v.size() != N) throw Error(ErrorCode::InvalidArgument, "theta must have " + std::to_string(N) + " entries");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

}  // namespace

PYBIND11_MODULE(_psp, m) {
    m.doc() = "Phase sampling profilometry core.";

    py::register_exception<Error>(m, "PspError", PyExc_ValueError);

    m.def(
        "generate_pattern",
        [](std::size_t height, std::size_t width, std::size_t ts, double f0, double amplitude,
           const std::string& mode) {
            return to_array(generate_pattern(make_config(height, width, ts, f0, amplitude, mode)).pixels);
        },
        py::arg("height"), py::arg("width"), py::arg("ts"), py::arg("f0"), py::arg("amplitude") = 1.0,
        py::arg("mode") = "complex");

    m.def(
        "deformed_pattern",
        [](std::size_t height, std::size_t width, std::size_t ts, double f0, const RealArray& phase,
           const RealArray& reflectivity, double amplitude, const std::string& mode) {
            const auto cfg = make_config(height, width, ts, f0, amplitude, mode);
            const Scene scene{to_raster(phase, height, width, "phase"),
                              to_raster(reflectivity, height, width, "reflectivity")};
            return to_array(deform_pattern(generate_pattern(cfg), scene).pixels);
        },
        py::arg("height"), py::arg("width"), py::arg("ts"), py::arg("f0"), py::arg("phase"), py::arg("reflectivity"),
        py::arg("amplitude") = 1.0, py::arg("mode") = "complex");

    m.def(
        "recover",
        [](const ComplexArray& samples, std::size_t ts, const std::string& method, const std::string& mode) {
            return to_array(recover(to_sampled(samples, ts, mode), parse_recovery_method(method)).values);
        },
        py::arg("samples"), py::arg("ts"), py::arg("method") = "frequency", py::arg("mode") = "complex");

    m.def(
        "reconstruct_sinc",
        [](const ComplexArray& samples, std::size_t ts, double max_angular_frequency, std::optional<std::size_t> replicas) {
            return to_array(reconstruct_sinc(to_sampled(samples, ts, "complex"), max_angular_frequency, {replicas}).values);
        },
        py::arg("samples"), py::arg("ts"), py::arg("max_angular_frequency"), py::arg("replicas") = py::none());

    m.def(
        "extract_phase",
        [](const ComplexArray& dense, double f0, double min_magnitude) {
            DenseSignal d{std::vector<Complex>(dense.data(), dense.data() + dense.size()), CarrierMode::ComplexQuadrature};
            const auto p = extract_phase_masked(d, f0, min_magnitude);
            const std::vector<std::uint8_t> mask(p.valid.begin(), p.valid.end());
            py::array_t<bool> valid(static_cast<py::ssize_t>(mask.size()), reinterpret_cast<const bool*>(mask.data()));
            return py::make_tuple(to_real(p.phase), to_real(p.magnitude), valid);
        },
        py::arg("dense"), py::arg("f0"), py::arg("min_magnitude") = 1e-6);

    m.def("phase_to_projector_row", &phase_to_projector_row, py::arg("phase"), py::arg("f0"), py::arg("t"));

    m.def(
        "solve_camera",
        [](const RealArray& world, const RealArray& pixels) {
            const auto pts = to_points(world);
            if (pixels.ndim() != 2 || pixels.shape(1) != 2 || static_cast<std::size_t>(pixels.shape(0)) != pts.size()) {
                throw Error(ErrorCode::DimensionMismatch, "pixels must have shape (n, 2)");
            }
            auto px = pixels.unchecked<2>();
            geometry::CorrespondenceSet c;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const auto k = static_cast<py::ssize_t>(i);
                c.push_back({pts[i], {px(k, 0), px(k, 1)}, {}});
            }
            const auto sol = geometry::solve_camera(c);
            return py::make_tuple(std::vector<double>(sol.projection.theta.begin(), sol.projection.theta.end()),
                                  sol.residual_norm);
        },
        py::arg("world"), py::arg("pixels"));

    m.def(
        "solve_projector",
        [](const RealArray& world, const RealArray& rows) {
            const auto pts = to_points(world);
            if (rows.ndim() != 1 || static_cast<std::size_t>(rows.shape(0)) != pts.size()) {
                throw Error(ErrorCode::DimensionMismatch, "projector rows must have shape (n,)");
            }
            geometry::CorrespondenceSet c;
            for (std::size_t i = 0; i < pts.size(); ++i) c.push_back({pts[i], {}, {rows.data()[i]}});
            const auto sol = geometry::solve_projector(c);
            return py::make_tuple(std::vector<double>(sol.projection.theta.begin(), sol.projection.theta.end()),
                                  sol.residual_norm);
        },
        py::arg("world"), py::arg("rows"));

    m.def(
        "project_camera",
        [](const std::vector<double>& theta, double X, double Y, double Z) {
            const auto q = geometry::project_camera({to_theta<11>(theta)}, {X, Y, Z});
            return py::make_tuple(q.x, q.y);
        },
        py::arg("theta"), py::arg("X"), py::arg("Y"), py::arg("Z"));

    m.def(
        "project_projector",
        [](const std::vector<double>& theta, double X, double Y, double Z) {
            return geometry::project_projector({to_theta<7>(theta)}, {X, Y, Z}).y;
        },
        py::arg("theta"), py::arg("X"), py::arg("Y"), py::arg("Z"));

    m.def(
        "triangulate",
        [](const std::vector<double>& theta_c, const std::vector<double>& theta_p, double xc, double yc, double yp) {
            const auto p = geometry::triangulate({to_theta<11>(theta_c)}, {to_theta<7>(theta_p)}, xc, yc, yp);
            return py::make_tuple(p.X, p.Y, p.Z);
        },
        py::arg("theta_c"), py::arg("theta_p"), py::arg("xc"), py::arg("yc"), py::arg("yp"));

    m.def("default_experiment_config", [] { return report::to_json(report::default_experiment_config()).dump(); });

    m.def(
        "run_experiment",
        [](const std::string& config_json, unsigned threads) {
            const auto cfg = report::experiment_config_from_json(nlohmann::json::parse(config_json));
            cfg.spec.validate();
            py::gil_scoped_release release;
            return report::to_json(sim::run_experiment(cfg.spec, {threads})).dump();
        },
        py::arg("config_json"), py::arg("threads") = 0);
}
