#include "psp/simkit.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "psp/error.hpp"
#include "psp/numeric.hpp"
#include "psp/parallel.hpp"
#include "psp/report.hpp"

namespace psp::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMagnitudeFloor = 1e-6;  // relative to I_0

double unit_uniform(std::mt19937_64& rng) {
    // 53 random bits -> [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller on the engine's raw output so streams are identical across
// standard library implementations.
double standard_normal(std::mt19937_64& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double center_of(std::size_t n) { return static_cast<double>(n / 2); }

struct MethodAccumulator {
    CompensatedSum signal_sum;
    double signal_max = 0.0;
    CompensatedSum phase_sum;
    double phase_max = 0.0;
    std::size_t phase_count = 0;
    std::size_t masked = 0;
    CompensatedSum depth_sq;
    std::size_t depth_count = 0;
    std::size_t invalid_depth = 0;
};

struct ColumnResult {
    std::vector<MethodAccumulator> methods;
};

std::vector<Complex> complex_view(const DenseSignal& d) {
    return d.mode == CarrierMode::ComplexQuadrature ? d.values : analytic_signal(d).values;
}

}  // namespace

std::string_view to_string(SceneKind k) noexcept {
    switch (k) {
        case SceneKind::Flat: return "flat";
        case SceneKind::GaussianBump: return "gaussian_bump";
        case SceneKind::Ramp: return "ramp";
        case SceneKind::SinusoidalRelief: return "sinusoidal_relief";
    }
    return "unknown";
}

std::string_view to_string(ReflectivityKind k) noexcept {
    switch (k) {
        case ReflectivityKind::Uniform: return "uniform";
        case ReflectivityKind::LinearGradient: return "linear_gradient";
        case ReflectivityKind::Speckle: return "speckle";
    }
    return "unknown";
}

SceneKind parse_scene_kind(std::string_view text) {
    if (text == "flat") return SceneKind::Flat;
    if (text == "gaussian_bump" || text == "gaussian" || text == "bump") return SceneKind::GaussianBump;
    if (text == "ramp") return SceneKind::Ramp;
    if (text == "sinusoidal_relief" || text == "sinusoid") return SceneKind::SinusoidalRelief;
    throw Error(ErrorCode::InvalidSpec, "unknown scene kind '" + std::string(text) + "'");
}

ReflectivityKind parse_reflectivity_kind(std::string_view text) {
    if (text == "uniform") return ReflectivityKind::Uniform;
    if (text == "linear_gradient" || text == "gradient") return ReflectivityKind::LinearGradient;
    if (text == "speckle") return ReflectivityKind::Speckle;
    throw Error(ErrorCode::InvalidSpec, "unknown reflectivity profile '" + std::string(text) + "'");
}

void SceneSpec::validate() const {
    if (!std::isfinite(amplitude)) throw Error(ErrorCode::InvalidSpec, "scene amplitude must be finite");
    if (kind != SceneKind::Flat && !(scale > 0.0 && std::isfinite(scale))) {
        throw Error(ErrorCode::InvalidSpec, "scene scale must be positive");
    }
    if (!(min_reflectivity > 0.0 && min_reflectivity <= 1.0)) {
        throw Error(ErrorCode::InvalidSpec, "minimum reflectivity must lie in (0, 1]");
    }
}

Raster<double> make_reflectivity(const SceneSpec& spec, std::size_t height, std::size_t width) {
    Raster<double> gamma(height, width, 1.0);
    switch (spec.reflectivity) {
        case ReflectivityKind::Uniform: break;
        case ReflectivityKind::LinearGradient:
            if (width > 1) {
                for (std::size_t t = 0; t < height; ++t) {
                    for (std::size_t x = 0; x < width; ++x) {
                        gamma(t, x) = 1.0 - (1.0 - spec.min_reflectivity) * static_cast<double>(x) /
                                                static_cast<double>(width - 1);
                    }
                }
            }
            break;
        case ReflectivityKind::Speckle: {
            std::mt19937_64 rng(spec.speckle_seed);
            for (auto& g : gamma.data()) g = spec.min_reflectivity + (1.0 - spec.min_reflectivity) * unit_uniform(rng);
            break;
        }
    }
    return gamma;
}

Scene make_scene(const SceneSpec& spec, std::size_t height, std::size_t width) {
    spec.validate();
    if (height == 0 || width == 0) throw Error(ErrorCode::InvalidSpec, "scene dimensions must be positive");
    Scene scene{Raster<double>(height, width, 0.0), make_reflectivity(spec, height, width)};
    const double ct = center_of(height);
    const double cx = center_of(width);
    for (std::size_t t = 0; t < height; ++t) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dt = static_cast<double>(t) - ct;
            const double dx = static_cast<double>(x) - cx;
            double phi = 0.0;
            switch (spec.kind) {
                case SceneKind::Flat: break;
                case SceneKind::GaussianBump:
                    phi = spec.amplitude * std::exp(-(dt * dt + dx * dx) / (2.0 * spec.scale * spec.scale));
                    break;
                case SceneKind::Ramp:
                    phi = spec.amplitude * static_cast<double>(t) / static_cast<double>(height);
                    break;
                case SceneKind::SinusoidalRelief:
                    phi = spec.amplitude * std::sin(kTwoPi * static_cast<double>(t) / spec.scale);
                    break;
            }
            scene.phase(t, x) = phi;
        }
    }
    return scene;
}

Geometry make_rig(const RigSpec& rig, std::size_t height, std::size_t width) {
    if (!(rig.focal > 0.0 && rig.standoff > 0.0) || !std::isfinite(rig.baseline) || rig.baseline == 0.0) {
        throw Error(ErrorCode::InvalidSpec, "rig needs positive focal length and standoff and a nonzero baseline");
    }
    const double f = rig.focal;
    const double d = rig.standoff;
    const double cx = center_of(width);
    const double cy = center_of(height);
    const double cy_p = cy - f * rig.baseline / d;

    Eigen::Matrix<double, 3, 4> cam;
    cam << f, 0, cx, cx * d,  //
        0, f, cy, cy * d,     //
        0, 0, 1, d;
    Eigen::Matrix<double, 3, 4> proj;
    proj << f, 0, cx, cx * d,                  //
        0, f, cy_p, f * rig.baseline + cy_p * d,  //
        0, 0, 1, d;
    return {geometry::CameraProjection::from_matrix(cam), geometry::ProjectorProjection::from_matrix(proj)};
}

double surface_height(const SceneSpec& spec, double X, double Y) {
    switch (spec.kind) {
        case SceneKind::Flat: return 0.0;
        case SceneKind::GaussianBump:
            return spec.amplitude * std::exp(-(X * X + Y * Y) / (2.0 * spec.scale * spec.scale));
        case SceneKind::Ramp: return spec.amplitude * Y / spec.scale;
        case SceneKind::SinusoidalRelief: return spec.amplitude * std::sin(kTwoPi * Y / spec.scale);
    }
    return 0.0;
}

geometry::WorldPoint surface_point(const Geometry& g, const SceneSpec& spec, double x_c, double y_c) {
    const auto& m = g.camera.theta;
    // Camera rows give X, Y as functions of Z; iterate Z = h(X(Z), Y(Z)).
    auto on_ray = [&](double Z) {
        Eigen::Matrix2d A;
        A << m[0] - x_c * m[8], m[1] - x_c * m[9],  //
            m[4] - y_c * m[8], m[5] - y_c * m[9];
        const Eigen::Vector2d b(x_c - m[3] - (m[2] - x_c * m[10]) * Z, y_c - m[7] - (m[6] - y_c * m[10]) * Z);
        const Eigen::Vector2d xy = A.partialPivLu().solve(b);
        return geometry::WorldPoint{xy[0], xy[1], Z};
    };
    double Z = 0.0;
    for (int it = 0; it < 200; ++it) {
        const auto p = on_ray(Z);
        const double next = surface_height(spec, p.X, p.Y);
        if (std::abs(next - Z) <= 1e-13 * (1.0 + std::abs(Z))) return on_ray(next);
        Z = next;
    }
    throw Error(ErrorCode::InvalidSpec, "surface intersection did not converge; surface too steep for the rig");
}

GeometricScene make_geometric_scene(const SceneSpec& spec, const PatternConfig& cfg, const Geometry& g) {
    spec.validate();
    cfg.validate();
    GeometricScene out{{Raster<double>(cfg.height, cfg.width), make_reflectivity(spec, cfg.height, cfg.width)},
                       Raster<double>(cfg.height, cfg.width),
                       Raster<double>(cfg.height, cfg.width)};
    for (std::size_t t = 0; t < cfg.height; ++t) {
        for (std::size_t x = 0; x < cfg.width; ++x) {
            const auto p = surface_point(g, spec, static_cast<double>(x), static_cast<double>(t));
            const double yp = geometry::project_projector(g.projector, p).y;
            out.depth(t, x) = p.Z;
            out.projector_row(t, x) = yp;
            out.scene.phase(t, x) = kTwoPi * cfg.carrier_frequency * (yp - static_cast<double>(t));
        }
    }
    return out;
}

geometry::CorrespondenceSet make_correspondences(const Geometry& g, std::size_t height, std::size_t width) {
    const SceneSpec flat{};
    const auto lo = surface_point(g, flat, 0.1 * static_cast<double>(width), 0.1 * static_cast<double>(height));
    const auto hi = surface_point(g, flat, 0.9 * static_cast<double>(width), 0.9 * static_cast<double>(height));
    const double span = std::max(std::abs(hi.X - lo.X), std::abs(hi.Y - lo.Y));
    geometry::CorrespondenceSet out;
    constexpr int kGrid = 6;
    for (double z : {-0.25 * span, 0.0, 0.25 * span}) {
        for (int i = 0; i < kGrid; ++i) {
            for (int j = 0; j < kGrid; ++j) {
                const geometry::WorldPoint p{lo.X + (hi.X - lo.X) * i / (kGrid - 1),
                                             lo.Y + (hi.Y - lo.Y) * j / (kGrid - 1), z};
                out.push_back({p, geometry::project_camera(g.camera, p), geometry::project_projector(g.projector, p)});
            }
        }
    }
    return out;
}

void ExperimentSpec::validate() const {
    pattern.validate();
    scene.validate();
    if (methods.empty()) throw Error(ErrorCode::InvalidSpec, "at least one recovery method is required");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw Error(ErrorCode::InvalidSpec, "noise sigma must be non-negative");
    }
}

double bandwidth_bound(const PatternConfig& cfg, const Scene& scene) {
    const std::size_t h = scene.phase.height();
    double slope = 0.0;
    if (h > 1) {
        for (std::size_t t = 0; t < h; ++t) {
            const std::size_t a = t == 0 ? 0 : t - 1;
            const std::size_t b = t + 1 == h ? t : t + 1;
            for (std::size_t x = 0; x < scene.phase.width(); ++x) {
                const double d = (scene.phase(b, x) - scene.phase(a, x)) / static_cast<double>(b - a);
                slope = std::max(slope, std::abs(d));
            }
        }
    }
    return kTwoPi * cfg.carrier_frequency + slope;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, RunOptions options) {
    spec.validate();
    const PatternConfig& cfg = spec.pattern;

    std::optional<Geometry> rig;
    Scene scene;
    Raster<double> depth_truth;
    if (spec.rig) {
        rig = make_rig(*spec.rig, cfg.height, cfg.width);
        auto gs = make_geometric_scene(spec.scene, cfg, *rig);
        scene = std::move(gs.scene);
        depth_truth = std::move(gs.depth);
    } else {
        scene = make_scene(spec.scene, cfg.height, cfg.width);
    }

    ExperimentReport report;
    report.spec = spec;
    report.max_angular_frequency = bandwidth_bound(cfg, scene);
    report.sampling_angular_frequency = kTwoPi / static_cast<double>(cfg.sampling_period);
    report.nyquist_satisfied =
        report.sampling_angular_frequency >= 2.0 * report.max_angular_frequency * (1.0 - 1e-12);
    report.config_hash = config_hash(spec);

    const PatternImage image = deform_pattern(generate_pattern(cfg), scene);
    const double floor = kMagnitudeFloor * cfg.amplitude;
    const std::size_t snapshot_column = cfg.width / 2;
    const auto n_methods = spec.methods.size();

    std::vector<ColumnResult> columns(cfg.width);
    parallel_for(cfg.width, options.threads, [&](std::size_t x) {
        SampledSignal s = extract_column(image, x);
        if (spec.noise_sigma > 0.0) {
            std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(x)));
            for (auto& v : s.values) {
                const double re = spec.noise_sigma * standard_normal(rng);
                const double im = cfg.mode == CarrierMode::ComplexQuadrature ? spec.noise_sigma * standard_normal(rng) : 0.0;
                v += Complex{re, im};
            }
        }
        DenseSignal truth{std::vector<Complex>(cfg.height), cfg.mode};
        for (std::size_t t = 0; t < cfg.height; ++t) {
            truth.values[t] = modulated_carrier(cfg, static_cast<double>(t), scene.phase(t, x), scene.reflectivity(t, x));
        }
        const std::vector<Complex> truth_c = complex_view(truth);

        ColumnResult& col = columns[x];
        col.methods.resize(n_methods);
        std::vector<std::vector<Complex>> snapshots;
        for (std::size_t m = 0; m < n_methods; ++m) {
            const DenseSignal rec = recover(s, spec.methods[m]);
            MethodAccumulator& acc = col.methods[m];
            for (std::size_t t = 0; t < cfg.height; ++t) {
                const double e = std::abs(rec.values[t] - truth.values[t]);
                acc.signal_sum.add(e);
                acc.signal_max = std::max(acc.signal_max, e);
            }
            const std::vector<Complex> rec_c = complex_view(rec);
            for (std::size_t t = 0; t < cfg.height; ++t) {
                if (std::abs(rec_c[t]) < floor || std::abs(truth_c[t]) < floor) {
                    ++acc.masked;
                    continue;
                }
                const double e = std::abs(std::arg(rec_c[t] * std::conj(truth_c[t])));
                acc.phase_sum.add(e);
                acc.phase_max = std::max(acc.phase_max, e);
                ++acc.phase_count;
            }
            if (rig) {
                const PhaseProfile prof =
                    extract_phase_masked({rec_c, CarrierMode::ComplexQuadrature}, cfg.carrier_frequency, floor);
                for (std::size_t t = 0; t < cfg.height; ++t) {
                    if (!prof.valid[t]) {
                        ++acc.invalid_depth;
                        continue;
                    }
                    const auto tt = static_cast<double>(t);
                    const double yp = phase_to_projector_row(prof.phase[t], cfg.carrier_frequency, tt);
                    try {
                        const auto p = geometry::triangulate(rig->camera, rig->projector, static_cast<double>(x), tt, yp);
                        const double dz = p.Z - depth_truth(t, x);
                        acc.depth_sq.add(dz * dz);
                        ++acc.depth_count;
                    } catch (const Error&) {
                        ++acc.invalid_depth;
                    }
                }
            }
            if (x == snapshot_column) snapshots.push_back(rec.values);
        }
        if (x == snapshot_column) {
            ColumnSnapshot& snap = report.snapshot;
            snap.column = x;
            snap.samples = s.values;
            const Spectrum sp = spectrum_of(s);
            const Spectrum win = rect_window(sp, sp.sampling_angular_frequency());
            for (const auto& b : sp.bins) snap.sample_spectrum.push_back(std::abs(b));
            for (const auto& b : win.bins) snap.windowed_spectrum.push_back(std::abs(b));
            snap.truth = truth.values;
            snap.recovered = std::move(snapshots);
        }
    });

    const double pixels = static_cast<double>(cfg.height * cfg.width);
    for (std::size_t m = 0; m < n_methods; ++m) {
        CompensatedSum signal_sum, phase_sum, depth_sq;
        MethodResult r;
        r.method = spec.methods[m];
        std::size_t phase_count = 0;
        std::size_t depth_count = 0;
        for (const auto& col : columns) {
            const auto& acc = col.methods[m];
            signal_sum.add(acc.signal_sum.value());
            r.signal_error.max_abs = std::max(r.signal_error.max_abs, acc.signal_max);
            phase_sum.add(acc.phase_sum.value());
            r.phase_error.max_abs = std::max(r.phase_error.max_abs, acc.phase_max);
            phase_count += acc.phase_count;
            r.masked_pixels += acc.masked;
            depth_sq.add(acc.depth_sq.value());
            depth_count += acc.depth_count;
            r.invalid_depth_pixels += acc.invalid_depth;
        }
        r.signal_error.mean_abs = signal_sum.value() / pixels;
        r.phase_error.mean_abs = phase_count ? phase_sum.value() / static_cast<double>(phase_count) : 0.0;
        if (rig) {
            r.depth_rms = depth_count ? std::sqrt(depth_sq.value() / static_cast<double>(depth_count))
                                      : std::numeric_limits<double>::quiet_NaN();
        }
        report.methods.push_back(r);
    }
    return report;
}

SweepTable sweep_sampling_period(const ExperimentSpec& base, std::span<const std::size_t> periods,
                                 RunOptions options) {
    std::vector<std::size_t> sorted(periods.begin(), periods.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.empty()) throw Error(ErrorCode::InvalidSpec, "sweep needs at least one sampling period");
    for (std::size_t ts : sorted) {
        if (ts == 0 || base.pattern.height % ts != 0) {
            throw Error(ErrorCode::InvalidConfig, "sweep T_s " + std::to_string(ts) +
                                                      " does not divide height " + std::to_string(base.pattern.height));
        }
    }
    SweepTable table;
    for (std::size_t ts : sorted) {
        ExperimentSpec spec = base;
        spec.pattern.sampling_period = ts;
        ExperimentReport rep = run_experiment(spec, options);
        table.max_angular_frequency = rep.max_angular_frequency;
        for (const auto& m : rep.methods) {
            table.rows.push_back({ts, m.method, m.signal_error, m.phase_error, m.depth_rms, rep.nyquist_satisfied});
        }
        table.reports.push_back(std::move(rep));
    }
    table.nyquist_period_limit = std::numbers::pi / table.max_angular_frequency;
    return table;
}

std::uint64_t config_hash(const ExperimentSpec& spec) {
    return report::fnv1a(report::to_json(spec).dump());
}

}  // namespace psp::sim
