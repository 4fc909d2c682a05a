#include "psp/signal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "psp/error.hpp"

namespace psp {

std::string_view to_string(CarrierMode mode) noexcept {
    return mode == CarrierMode::ComplexQuadrature ? "complex" : "real";
}

CarrierMode parse_carrier_mode(std::string_view text) {
    if (text == "complex" || text == "complex_quadrature") return CarrierMode::ComplexQuadrature;
    if (text == "real" || text == "real_cosine") return CarrierMode::RealCosine;
    throw Error(ErrorCode::InvalidConfig, "unknown carrier mode '" + std::string(text) + "'");
}

void PatternConfig::validate() const {
    if (sampling_period < 1) throw Error(ErrorCode::InvalidConfig, "T_s must be >= 1");
    if (height == 0 || width == 0) {
        throw Error(ErrorCode::InvalidConfig, "raster height and width must be positive");
    }
    if (height % sampling_period != 0) {
        throw Error(ErrorCode::InvalidConfig, "height " + std::to_string(height) +
                                                  " must be a multiple of T_s " +
                                                  std::to_string(sampling_period));
    }
    if (!(carrier_frequency > 0.0 && carrier_frequency < 0.5)) {
        throw Error(ErrorCode::InvalidConfig, "f0 must satisfy 0 < f0 < 0.5 cycles/pixel");
    }
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
        throw Error(ErrorCode::InvalidConfig, "I_0 must be positive");
    }
    const double cycles = carrier_cycles();
    if (std::abs(cycles - std::round(cycles)) > kCarrierCycleTolerance) {
        throw Error(ErrorCode::InvalidConfig,
                    "f0 * height must be an integer number of carrier cycles (got " +
                        std::to_string(cycles) + ")");
    }
}

PatternConfig snap_carrier(PatternConfig cfg, double tolerance) {
    if (cfg.height == 0) return cfg;
    const double cycles = cfg.carrier_cycles();
    const double whole = std::round(cycles);
    if (whole > 0.0 && std::abs(cycles - whole) <= tolerance) {
        cfg.carrier_frequency = whole / static_cast<double>(cfg.height);
    }
    return cfg;
}

Scene Scene::flat(std::size_t height, std::size_t width) {
    return {Raster<double>(height, width, 0.0), Raster<double>(height, width, 1.0)};
}

void Scene::validate(std::size_t height, std::size_t width) const {
    if (!phase.same_shape(height, width) || !reflectivity.same_shape(height, width)) {
        throw Error(ErrorCode::DimensionMismatch,
                    "scene fields must be " + std::to_string(height) + "x" + std::to_string(width));
    }
    for (double v : phase.data()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSpec, "scene phase must be finite");
    }
    for (double g : reflectivity.data()) {
        if (!(g > 0.0) || g > 1.0) {
            throw Error(ErrorCode::InvalidSpec, "reflectivity must lie in (0, 1]");
        }
    }
}

Raster<double> PatternImage::in_phase() const {
    Raster<double> out(pixels.height(), pixels.width());
    for (std::size_t i = 0; i < pixels.data().size(); ++i) out.data()[i] = pixels.data()[i].real();
    return out;
}

Raster<double> PatternImage::quadrature() const {
    Raster<double> out(pixels.height(), pixels.width());
    for (std::size_t i = 0; i < pixels.data().size(); ++i) out.data()[i] = pixels.data()[i].imag();
    return out;
}

Complex modulated_carrier(const PatternConfig& cfg, double t, double phase, double reflectivity) {
    const double arg = 2.0 * std::numbers::pi * cfg.carrier_frequency * t + phase;
    const double scale = reflectivity * cfg.amplitude;
    if (cfg.mode == CarrierMode::ComplexQuadrature) return std::polar(scale, arg);
    return {scale * 0.5 * (1.0 + std::cos(arg)), 0.0};
}

std::vector<double> SampledSignal::instants() const {
    std::vector<double> out(values.size());
    for (std::size_t n = 0; n < values.size(); ++n) out[n] = instant(n);
    return out;
}

void SampledSignal::validate() const {
    if (sampling_period < 1) throw Error(ErrorCode::InvalidArgument, "T_s must be >= 1");
    if (values.size() * sampling_period != dense_length) {
        throw Error(ErrorCode::InvalidArgument,
                    std::to_string(values.size()) + " samples at T_s " +
                        std::to_string(sampling_period) + " do not cover dense length " +
                        std::to_string(dense_length));
    }
}

PatternImage generate_pattern(const PatternConfig& cfg) {
    cfg.validate();
    PatternImage img{cfg, Raster<Complex>(cfg.height, cfg.width)};
    for (std::size_t t = 0; t < cfg.height; t += cfg.sampling_period) {
        const Complex v = modulated_carrier(cfg, static_cast<double>(t));
        for (auto& px : img.pixels.row(t)) px = v;
    }
    return img;
}

// Evaluates the deformed pattern from img.config; img is expected to be the
// designed (undeformed) pattern for that config.
PatternImage deform_pattern(const PatternImage& img, const Scene& scene) {
    const auto& cfg = img.config;
    if (!img.pixels.same_shape(cfg.height, cfg.width)) {
        throw Error(ErrorCode::DimensionMismatch, "pattern raster does not match its config");
    }
    scene.validate(cfg.height, cfg.width);
    PatternImage out{cfg, Raster<Complex>(cfg.height, cfg.width)};
    for (std::size_t t = 0; t < cfg.height; t += cfg.sampling_period) {
        for (std::size_t x = 0; x < cfg.width; ++x) {
            out.pixels(t, x) = modulated_carrier(cfg, static_cast<double>(t), scene.phase(t, x),
                                                 scene.reflectivity(t, x));
        }
    }
    return out;
}

SampledSignal extract_column(const PatternImage& img, std::size_t x) {
    const auto& cfg = img.config;
    if (x >= cfg.width) {
        throw Error(ErrorCode::ColumnOutOfRange,
                    "column " + std::to_string(x) + " outside width " + std::to_string(cfg.width));
    }
    SampledSignal s;
    s.sampling_period = cfg.sampling_period;
    s.dense_length = cfg.height;
    s.mode = cfg.mode;
    s.values.reserve(cfg.sample_count());
    for (std::size_t t = 0; t < cfg.height; t += cfg.sampling_period) s.values.push_back(img.pixels(t, x));
    return s;
}

}  // namespace psp
