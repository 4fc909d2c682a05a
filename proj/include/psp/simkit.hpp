#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "psp/geometry.hpp"
#include "psp/recovery.hpp"
#include "psp/signal.hpp"

namespace psp::sim {

enum class SceneKind { Flat, GaussianBump, Ramp, SinusoidalRelief };
enum class ReflectivityKind { Uniform, LinearGradient, Speckle };

std::string_view to_string(SceneKind k) noexcept;
std::string_view to_string(ReflectivityKind k) noexcept;
SceneKind parse_scene_kind(std::string_view text);
ReflectivityKind parse_reflectivity_kind(std::string_view text);

// Without geometry, amplitude is a phase in radians and scale is in pixels.
// With geometry, the same shapes describe a height field Z(X, Y): amplitude
// in mm, scale in mm, centred on the world origin.
//   gaussian_bump:     amplitude * exp(-r^2 / (2 scale^2))
//   ramp:              amplitude * t / height      (geometric: amplitude * Y / scale)
//   sinusoidal_relief: amplitude * sin(2 pi t / scale) (geometric: Y in place of t)
struct SceneSpec {
    SceneKind kind = SceneKind::Flat;
    double amplitude = 0.0;
    double scale = 1.0;
    ReflectivityKind reflectivity = ReflectivityKind::Uniform;
    double min_reflectivity = 0.5;  // lower end for gradient and speckle
    std::uint64_t speckle_seed = 0;

    void validate() const;
    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

Scene make_scene(const SceneSpec& spec, std::size_t height, std::size_t width);

// Reflectivity field only (shared by phase and geometric scenes).
Raster<double> make_reflectivity(const SceneSpec& spec, std::size_t height, std::size_t width);

struct Geometry {
    geometry::CameraProjection camera;
    geometry::ProjectorProjection projector;
};

// Camera and projector sharing orientation and intrinsics, both at `standoff`
// mm in front of the Z = 0 reference plane. The projector sits `baseline` mm
// along -Y with its principal point shifted so that the reference plane maps
// camera row t to projector row t. Heights above the plane shift the
// projector row by about -focal * baseline * Z / standoff^2.
struct RigSpec {
    double focal = 1000.0;      // pixels
    double standoff = 1000.0;   // mm
    double baseline = 200.0;    // mm
    friend bool operator==(const RigSpec&, const RigSpec&) = default;
};

Geometry make_rig(const RigSpec& rig, std::size_t height, std::size_t width);

double surface_height(const SceneSpec& spec, double X, double Y);

// World point seen by camera pixel (x_c, y_c) on the surface of `spec`.
geometry::WorldPoint surface_point(const Geometry& g, const SceneSpec& spec, double x_c, double y_c);

struct GeometricScene {
    Scene scene;
    Raster<double> depth;           // ground-truth Z_w per camera pixel, mm
    Raster<double> projector_row;   // ground-truth y_p per camera pixel
};

// Phase field phi = 2 pi f0 (y_p - t) induced by the surface under the rig.
GeometricScene make_geometric_scene(const SceneSpec& spec, const PatternConfig& cfg, const Geometry& g);

// Noiseless calibration correspondences: a grid of world points on several
// planes at different heights, projected through `g`.
geometry::CorrespondenceSet make_correspondences(const Geometry& g, std::size_t height,
                                                 std::size_t width);

struct ExperimentSpec {
    PatternConfig pattern;
    SceneSpec scene;
    std::vector<RecoveryMethod> methods{RecoveryMethod::Frequency, RecoveryMethod::Spline};
    std::optional<RigSpec> rig;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;  // additive Gaussian noise on sample values, intensity units

    void validate() const;
};

struct RunOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
};

struct MethodResult {
    RecoveryMethod method = RecoveryMethod::Frequency;
    ErrorStats signal_error;           // |recovered - truth|, intensity units
    ErrorStats phase_error;            // |arg(recovered * conj(truth))|, radians
    std::size_t masked_pixels = 0;     // pixels with magnitude below 1e-6 I_0
    std::optional<double> depth_rms;   // mm, when a rig is configured
    std::size_t invalid_depth_pixels = 0;
};

struct ColumnSnapshot {
    std::size_t column = 0;
    std::vector<Complex> samples;
    std::vector<double> sample_spectrum;    // |DFT| of the zero-expanded samples
    std::vector<double> windowed_spectrum;  // after the rectangular window
    std::vector<Complex> truth;
    std::vector<std::vector<Complex>> recovered;  // per method, same order as methods
};

struct ExperimentReport {
    ExperimentSpec spec;
    double max_angular_frequency = 0.0;       // w_m bound: 2 pi f0 + max |d phi / dt|
    double sampling_angular_frequency = 0.0;  // w_s = 2 pi / T_s
    bool nyquist_satisfied = false;
    std::vector<MethodResult> methods;
    ColumnSnapshot snapshot;
    std::uint64_t config_hash = 0;
};

// Upper bound on the angular bandwidth of the deformed carrier along t.
double bandwidth_bound(const PatternConfig& cfg, const Scene& scene);

ExperimentReport run_experiment(const ExperimentSpec& spec, RunOptions options = {});

struct SweepRow {
    std::size_t sampling_period = 0;
    RecoveryMethod method = RecoveryMethod::Frequency;
    ErrorStats signal_error;
    ErrorStats phase_error;
    std::optional<double> depth_rms;
    bool nyquist_satisfied = false;
};

struct SweepTable {
    std::vector<SweepRow> rows;  // sorted by T_s, then method order
    double max_angular_frequency = 0.0;
    // Sampling periods up to pi / w_m satisfy w_s >= 2 w_m.
    double nyquist_period_limit = 0.0;
    std::vector<ExperimentReport> reports;
};

SweepTable sweep_sampling_period(const ExperimentSpec& base, std::span<const std::size_t> periods,
                                 RunOptions options = {});

// Stable 64-bit FNV-1a hash of the spec's canonical JSON encoding.
std::uint64_t config_hash(const ExperimentSpec& spec);

}  // namespace psp::sim
