#include "psp/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_interp.h>

#include "fft.hpp"
#include "psp/error.hpp"
#include "psp/numeric.hpp"

namespace psp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::ptrdiff_t signed_bin(std::size_t k, std::size_t n) {
    return 2 * k <= n ? static_cast<std::ptrdiff_t>(k)
                      : static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(n);
}

void require_samples(const SampledSignal& s) {
    if (s.values.empty()) throw Error(ErrorCode::EmptySignal, "sampled signal has no samples");
    s.validate();
}

DenseSignal finish(std::vector<Complex> values, CarrierMode mode) {
    if (mode == CarrierMode::RealCosine) {
        for (auto& v : values) v = {v.real(), 0.0};
    }
    return {std::move(values), mode};
}

// Periodic sum over all replicas of sin(w u)/(w u) at integer offset tau,
// period n. Poisson summation turns it into a finite Dirichlet sum over the
// harmonics below w, with half weight on a harmonic that sits exactly at w.
class PeriodicSincKernel {
public:
    PeriodicSincKernel(double w, std::size_t period) : period_(period) {
        const double cutoff = w * static_cast<double>(period) / kTwoPi;
        const double whole = std::round(cutoff);
        on_boundary_ = std::abs(cutoff - whole) < 1e-9;
        harmonics_ = on_boundary_ ? static_cast<std::size_t>(whole)
                                  : static_cast<std::size_t>(std::floor(cutoff));
        scale_ = std::numbers::pi / (w * static_cast<double>(period));
    }

    double operator()(std::ptrdiff_t tau) const {
        const auto n = static_cast<std::ptrdiff_t>(period_);
        const auto m = static_cast<std::size_t>(((tau % n) + n) % n);
        const double k = static_cast<double>(harmonics_);
        double dirichlet;
        double boundary = 1.0;
        if (m == 0) {
            dirichlet = 2.0 * k + 1.0;
        } else {
            const double theta = kTwoPi * static_cast<double>(m) / static_cast<double>(period_);
            dirichlet = std::sin((k + 0.5) * theta) / std::sin(0.5 * theta);
            boundary = std::cos(k * theta);
        }
        if (on_boundary_) dirichlet -= boundary;
        return scale_ * dirichlet;
    }

private:
    std::size_t period_;
    std::size_t harmonics_ = 0;
    bool on_boundary_ = false;
    double scale_ = 1.0;
};

double sinc_term(double w, double u) {
    if (u == 0.0) return 1.0;
    return std::sin(w * u) / (w * u);
}

void install_gsl_handler() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

// Natural cubic spline of one real channel, evaluated on 0..n_dense-1.
std::vector<double> spline_channel(const std::vector<double>& knots, const std::vector<double>& y,
                                   std::size_t dense_length) {
    install_gsl_handler();
    const std::size_t n = knots.size();
    gsl_interp* interp = gsl_interp_alloc(gsl_interp_cspline, n);
    if (interp == nullptr) throw Error(ErrorCode::InvalidArgument, "spline allocation failed");
    std::vector<double> out(dense_length);
    try {
        if (gsl_interp_init(interp, knots.data(), y.data(), n) != GSL_SUCCESS) {
            throw Error(ErrorCode::InvalidArgument, "spline initialization failed");
        }
        gsl_interp_accel* acc = nullptr;
        const double last = knots.back();
        const double last_value = y.back();
        const double last_slope = gsl_interp_eval_deriv(interp, knots.data(), y.data(), last, acc);
        for (std::size_t t = 0; t < dense_length; ++t) {
            const auto tt = static_cast<double>(t);
            out[t] = tt <= last ? gsl_interp_eval(interp, knots.data(), y.data(), tt, acc)
                                : last_value + last_slope * (tt - last);
        }
    } catch (...) {
        gsl_interp_free(interp);
        throw;
    }
    gsl_interp_free(interp);
    return out;
}

PhaseProfile phase_profile(const DenseSignal& d, double carrier_frequency, double min_magnitude,
                           bool mask) {
    if (d.mode != CarrierMode::ComplexQuadrature) {
        throw Error(ErrorCode::InvalidArgument,
                    "phase extraction needs a complex signal; form the analytic signal first");
    }
    PhaseProfile p;
    const std::size_t n = d.size();
    p.phase.assign(n, std::numeric_limits<double>::quiet_NaN());
    p.magnitude.resize(n);
    p.valid.assign(n, false);

    double offset = 0.0;
    double previous = 0.0;
    bool have_previous = false;
    for (std::size_t t = 0; t < n; ++t) {
        const Complex v = d.values[t];
        p.magnitude[t] = std::abs(v);
        if (!(p.magnitude[t] >= min_magnitude)) {
            if (!mask) {
                throw Error(ErrorCode::NearZeroMagnitude,
                            "magnitude " + std::to_string(p.magnitude[t]) + " at t=" +
                                std::to_string(t) + " below " + std::to_string(min_magnitude));
            }
            continue;
        }
        // Reduce the carrier argument modulo one cycle before exponentiating.
        const double cycles = carrier_frequency * static_cast<double>(t);
        const double carrier = kTwoPi * (cycles - std::floor(cycles));
        const double wrapped = std::arg(v * std::polar(1.0, -carrier));
        if (have_previous) {
            const double diff = wrapped + offset - previous;
            if (diff > std::numbers::pi) {
                const double turns = std::round(diff / kTwoPi);
                offset -= kTwoPi * turns;
                p.unwrap_jumps += static_cast<std::size_t>(turns);
            } else if (diff < -std::numbers::pi) {
                const double turns = std::round(-diff / kTwoPi);
                offset += kTwoPi * turns;
                p.unwrap_jumps += static_cast<std::size_t>(turns);
            }
        }
        p.phase[t] = wrapped + offset;
        previous = p.phase[t];
        have_previous = true;
        p.valid[t] = true;
    }
    return p;
}

}  // namespace

double Spectrum::sampling_angular_frequency() const noexcept {
    return kTwoPi / static_cast<double>(sampling_period);
}

double Spectrum::bin_frequency(std::size_t k) const noexcept {
    return static_cast<double>(signed_bin(k, bins.size())) / static_cast<double>(bins.size());
}

std::string_view to_string(RecoveryMethod m) noexcept {
    switch (m) {
        case RecoveryMethod::Frequency: return "frequency";
        case RecoveryMethod::Spline: return "spline";
        case RecoveryMethod::Sinc: return "sinc";
    }
    return "unknown";
}

RecoveryMethod parse_recovery_method(std::string_view text) {
    if (text == "frequency" || text == "freq") return RecoveryMethod::Frequency;
    if (text == "spline") return RecoveryMethod::Spline;
    if (text == "sinc") return RecoveryMethod::Sinc;
    throw Error(ErrorCode::InvalidArgument, "unknown recovery method '" + std::string(text) + "'");
}

bool PhaseProfile::all_valid() const noexcept {
    return std::all_of(valid.begin(), valid.end(), [](bool v) { return v; });
}

std::vector<Complex> zero_expand(const SampledSignal& s) {
    s.validate();
    std::vector<Complex> dense(s.dense_length);
    for (std::size_t n = 0; n < s.values.size(); ++n) dense[n * s.sampling_period] = s.values[n];
    return dense;
}

Spectrum spectrum_of(const SampledSignal& s) {
    require_samples(s);
    return {detail::forward_dft(zero_expand(s)), s.sampling_period};
}

Spectrum rect_window(const Spectrum& sp, double sampling_angular_frequency) {
    const double expected = sp.sampling_angular_frequency();
    if (!(std::abs(sampling_angular_frequency - expected) <= 1e-12 * expected)) {
        throw Error(ErrorCode::InvalidArgument,
                    "w_s " + std::to_string(sampling_angular_frequency) +
                        " does not match the spectrum's T_s " + std::to_string(sp.sampling_period));
    }
    const std::size_t n = sp.size();
    const double gain = kTwoPi / sampling_angular_frequency;
    // Passband edge w_s / 2 expressed in bins.
    const double edge = sampling_angular_frequency * static_cast<double>(n) / (2.0 * kTwoPi);
    constexpr double tie = 1e-9;

    Spectrum out{std::vector<Complex>(n), sp.sampling_period};
    for (std::size_t k = 0; k < n; ++k) {
        const auto b = static_cast<double>(signed_bin(k, n));
        if (b <= edge + tie && b > -edge + tie) out.bins[k] = sp.bins[k] * gain;
    }
    return out;
}

DenseSignal inverse_spectrum(const Spectrum& sp, CarrierMode mode) {
    return finish(detail::inverse_dft(sp.bins), mode);
}

DenseSignal recover_frequency(const SampledSignal& s) {
    const Spectrum sp = spectrum_of(s);
    return inverse_spectrum(rect_window(sp, sp.sampling_angular_frequency()), s.mode);
}

DenseSignal reconstruct_sinc(const SampledSignal& s, double max_angular_frequency,
                             SincExtension extension) {
    require_samples(s);
    if (!(max_angular_frequency > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "w_m must be positive");
    }
    const std::size_t count = s.values.size();
    const auto period = static_cast<std::ptrdiff_t>(s.sampling_period);
    std::vector<Complex> out(s.dense_length);

    if (!extension.replicas) {
        const PeriodicSincKernel kernel(max_angular_frequency, s.dense_length);
        for (std::size_t t = 0; t < s.dense_length; ++t) {
            Complex acc{0.0, 0.0};
            for (std::size_t n = 0; n < count; ++n) {
                acc += s.values[n] * kernel(static_cast<std::ptrdiff_t>(t) -
                                            static_cast<std::ptrdiff_t>(n) * period);
            }
            out[t] = acc;
        }
        return finish(std::move(out), s.mode);
    }

    const auto r = static_cast<std::ptrdiff_t>(*extension.replicas);
    const auto m = static_cast<std::ptrdiff_t>(count);
    for (std::size_t t = 0; t < s.dense_length; ++t) {
        Complex acc{0.0, 0.0};
        for (std::ptrdiff_t n = -r * m; n < (r + 1) * m; ++n) {
            const auto idx = static_cast<std::size_t>(((n % m) + m) % m);
            const double u = static_cast<double>(static_cast<std::ptrdiff_t>(t) - n * period);
            acc += s.values[idx] * sinc_term(max_angular_frequency, u);
        }
        out[t] = acc;
    }
    return finish(std::move(out), s.mode);
}

DenseSignal recover_spline(const SampledSignal& s) {
    s.validate();
    if (s.values.size() < 4) {
        throw Error(ErrorCode::TooFewSamples,
                    "spline recovery needs at least 4 samples, got " + std::to_string(s.values.size()));
    }
    const std::vector<double> knots = s.instants();
    std::vector<double> re(s.values.size());
    std::vector<double> im(s.values.size());
    for (std::size_t n = 0; n < s.values.size(); ++n) {
        re[n] = s.values[n].real();
        im[n] = s.values[n].imag();
    }
    const auto re_dense = spline_channel(knots, re, s.dense_length);
    std::vector<Complex> out(s.dense_length);
    if (s.mode == CarrierMode::RealCosine) {
        for (std::size_t t = 0; t < out.size(); ++t) out[t] = {re_dense[t], 0.0};
    } else {
        const auto im_dense = spline_channel(knots, im, s.dense_length);
        for (std::size_t t = 0; t < out.size(); ++t) out[t] = {re_dense[t], im_dense[t]};
    }
    return {std::move(out), s.mode};
}

DenseSignal recover(const SampledSignal& s, RecoveryMethod method) {
    switch (method) {
        case RecoveryMethod::Frequency: return recover_frequency(s);
        case RecoveryMethod::Spline: return recover_spline(s);
        case RecoveryMethod::Sinc:
            return reconstruct_sinc(s, std::numbers::pi / static_cast<double>(s.sampling_period));
    }
    throw Error(ErrorCode::InvalidArgument, "unknown recovery method");
}

DenseSignal analytic_signal(const DenseSignal& d) {
    const std::size_t n = d.size();
    if (n == 0) throw Error(ErrorCode::EmptySignal, "dense signal is empty");
    std::vector<Complex> real(n);
    for (std::size_t t = 0; t < n; ++t) real[t] = {d.values[t].real(), 0.0};
    auto bins = detail::forward_dft(real);
    bins[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const auto b = signed_bin(k, n);
        if (2 * k == n) continue;
        bins[k] = b > 0 ? 2.0 * bins[k] : Complex{0.0, 0.0};
    }
    return {detail::inverse_dft(bins), CarrierMode::ComplexQuadrature};
}

PhaseProfile extract_phase(const DenseSignal& d, double carrier_frequency, double min_magnitude) {
    return phase_profile(d, carrier_frequency, min_magnitude, false);
}

PhaseProfile extract_phase_masked(const DenseSignal& d, double carrier_frequency,
                                  double min_magnitude) {
    return phase_profile(d, carrier_frequency, min_magnitude, true);
}

double phase_to_projector_row(double phase, double carrier_frequency, double t) {
    return t + phase / (kTwoPi * carrier_frequency);
}

ErrorStats recovery_error(std::span<const Complex> recovered, std::span<const Complex> truth) {
    if (recovered.size() != truth.size()) {
        throw Error(ErrorCode::LengthMismatch, "recovered length " + std::to_string(recovered.size()) +
                                                   " != truth length " + std::to_string(truth.size()));
    }
    if (recovered.empty()) return {};
    CompensatedSum sum;
    double worst = 0.0;
    for (std::size_t t = 0; t < recovered.size(); ++t) {
        const double e = std::abs(recovered[t] - truth[t]);
        sum.add(e);
        worst = std::max(worst, e);
    }
    return {sum.value() / static_cast<double>(recovered.size()), worst};
}

ErrorStats recovery_error(const DenseSignal& recovered, const DenseSignal& truth) {
    return recovery_error(std::span<const Complex>(recovered.values),
                          std::span<const Complex>(truth.values));
}

RecoveryReport run_recovery(const SampledSignal& s, RecoveryMethod method, const DenseSignal* truth) {
    RecoveryReport r{method, recover(s, method), std::nullopt};
    if (truth != nullptr) r.error = recovery_error(r.recovered, *truth);
    return r;
}

}  // namespace psp
