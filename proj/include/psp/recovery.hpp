#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "psp/signal.hpp"

namespace psp {

// Full-resolution signal at unit pixel spacing, origin at t = 0.
struct DenseSignal {
    std::vector<Complex> values;
    CarrierMode mode = CarrierMode::ComplexQuadrature;

    std::size_t size() const noexcept { return values.size(); }
};

// Unnormalized DFT of a dense (zero-expanded) sequence in standard bin order.
struct Spectrum {
    std::vector<Complex> bins;
    std::size_t sampling_period = 1;

    std::size_t size() const noexcept { return bins.size(); }
    // w_s = 2 pi / T_s, radians per pixel.
    double sampling_angular_frequency() const noexcept;
    // Signed frequency of bin k in cycles per pixel, in (-1/2, 1/2].
    double bin_frequency(std::size_t k) const noexcept;
};

enum class RecoveryMethod { Frequency, Spline, Sinc };

std::string_view to_string(RecoveryMethod m) noexcept;
RecoveryMethod parse_recovery_method(std::string_view text);

struct ErrorStats {
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

struct RecoveryReport {
    RecoveryMethod method = RecoveryMethod::Frequency;
    DenseSignal recovered;
    std::optional<ErrorStats> error;  // present only when ground truth was supplied
};

struct PhaseProfile {
    std::vector<double> phase;      // unwrapped phase variation, radians; NaN where masked
    std::vector<double> magnitude;  // gamma * I_0 channel
    std::vector<bool> valid;
    std::size_t unwrap_jumps = 0;   // number of 2 pi corrections applied

    bool all_valid() const noexcept;
};

// Samples placed at t = n T_s with zeros elsewhere.
std::vector<Complex> zero_expand(const SampledSignal& s);

Spectrum spectrum_of(const SampledSignal& s);

// Ideal low-pass with gain T_s = 2 pi / w_s. The passband is -w_s/2 < w <= w_s/2:
// the +w_s/2 bin is kept and its -w_s/2 alias, which carries the same
// sample content, is dropped.
Spectrum rect_window(const Spectrum& sp, double sampling_angular_frequency);

// Inverse DFT with 1/N normalization.
DenseSignal inverse_spectrum(const Spectrum& sp, CarrierMode mode);

// zero_expand -> DFT -> rect_window(2 pi / T_s) -> inverse DFT. Real-cosine
// signals return the real part, which equals splitting the Nyquist bin evenly.
DenseSignal recover_frequency(const SampledSignal& s);

// Replica count for reconstruct_sinc; nullopt sums the infinite periodic
// extension in closed form.
struct SincExtension {
    std::optional<std::size_t> replicas;
};

// Time-domain sinc interpolation sum_n f(n T_s) sin(w_m (t - n T_s)) / (w_m (t - n T_s))
// evaluated at t = 0 .. n_dense - 1 over the periodically extended samples.
DenseSignal reconstruct_sinc(const SampledSignal& s, double max_angular_frequency,
                             SincExtension extension = {});

// Natural cubic spline through (n T_s, f(n T_s)), linear beyond the last knot.
DenseSignal recover_spline(const SampledSignal& s);

DenseSignal recover(const SampledSignal& s, RecoveryMethod method);

// Analytic signal of a real-cosine dense signal: DC removed, negative
// frequencies zeroed, positive frequencies doubled.
DenseSignal analytic_signal(const DenseSignal& d);

// phase(t) = unwrap(arg(d(t) e^{-i 2 pi f0 t})). Throws NearZeroMagnitude when
// any |d(t)| < min_magnitude.
PhaseProfile extract_phase(const DenseSignal& d, double carrier_frequency, double min_magnitude);

// As extract_phase, but masks low-magnitude entries instead of throwing.
PhaseProfile extract_phase_masked(const DenseSignal& d, double carrier_frequency,
                                  double min_magnitude);

// Projector row whose designed carrier phase matches the observed phase at t.
double phase_to_projector_row(double phase, double carrier_frequency, double t);

ErrorStats recovery_error(const DenseSignal& recovered, const DenseSignal& truth);
ErrorStats recovery_error(std::span<const Complex> recovered, std::span<const Complex> truth);

RecoveryReport run_recovery(const SampledSignal& s, RecoveryMethod method,
                            const DenseSignal* truth = nullptr);

}  // namespace psp
