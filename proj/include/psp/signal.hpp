#pragma once

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

#include "psp/raster.hpp"

namespace psp {

using Complex = std::complex<double>;

enum class CarrierMode {
    ComplexQuadrature,  // I0 e^{i 2 pi f0 t}, stored as an in-phase/quadrature pair
    RealCosine,         // I0 (1 + cos 2 pi f0 t) / 2
};

std::string_view to_string(CarrierMode mode) noexcept;
CarrierMode parse_carrier_mode(std::string_view text);

struct PatternConfig {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t sampling_period = 1;  // T_s, pixels
    double carrier_frequency = 0.0;   // f0, cycles per pixel
    double amplitude = 1.0;           // I_0
    CarrierMode mode = CarrierMode::ComplexQuadrature;

    // Throws InvalidConfig naming the first violated invariant.
    void validate() const;

    // Number of carrier cycles over the raster height; integral for valid configs.
    double carrier_cycles() const noexcept { return carrier_frequency * static_cast<double>(height); }
    std::size_t sample_count() const noexcept { return height / sampling_period; }
    bool is_sample_row(std::size_t t) const noexcept { return t % sampling_period == 0; }

    friend bool operator==(const PatternConfig&, const PatternConfig&) = default;
};

// Tolerance on the fractional part of f0 * height accepted by validate().
inline constexpr double kCarrierCycleTolerance = 1e-9;

// Moves f0 to the nearest whole number of cycles over the height when it is
// within `tolerance` cycles of one; otherwise returns cfg unchanged.
PatternConfig snap_carrier(PatternConfig cfg, double tolerance = 1e-3);

// Phase variation and reflectivity fields over the raster.
struct Scene {
    Raster<double> phase;         // radians
    Raster<double> reflectivity;  // in (0, 1]

    static Scene flat(std::size_t height, std::size_t width);
    void validate(std::size_t height, std::size_t width) const;
};

// Pattern raster. Real-cosine patterns keep a zero imaginary part.
struct PatternImage {
    PatternConfig config;
    Raster<Complex> pixels;

    Raster<double> in_phase() const;
    Raster<double> quadrature() const;
};

// Carrier observed at row t with phase variation phi and reflectivity gamma.
Complex modulated_carrier(const PatternConfig& cfg, double t, double phase = 0.0,
                          double reflectivity = 1.0);

struct SampledSignal {
    std::vector<Complex> values;  // at t = n * sampling_period
    std::size_t sampling_period = 1;
    std::size_t dense_length = 0;
    CarrierMode mode = CarrierMode::ComplexQuadrature;

    double instant(std::size_t n) const noexcept {
        return static_cast<double>(n * sampling_period);
    }
    std::vector<double> instants() const;

    // Throws InvalidArgument when the sample count, period and dense length disagree.
    void validate() const;
};

PatternImage generate_pattern(const PatternConfig& cfg);
PatternImage deform_pattern(const PatternImage& img, const Scene& scene);
SampledSignal extract_column(const PatternImage& img, std::size_t x);

}  // namespace psp
