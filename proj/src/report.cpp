#include "psp/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "psp/error.hpp"

namespace psp::report {

namespace {

json nullable(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

json method_json(const sim::MethodResult& m) {
    return json{{"method", std::string(to_string(m.method))},
                {"mean_abs_error", m.signal_error.mean_abs},
                {"max_abs_error", m.signal_error.max_abs},
                {"phase_mean_abs_error", m.phase_error.mean_abs},
                {"phase_max_abs_error", m.phase_error.max_abs},
                {"masked_pixels", m.masked_pixels},
                {"depth_rms_mm", nullable(m.depth_rms)},
                {"invalid_depth_pixels", m.invalid_depth_pixels}};
}

std::string color_for(std::size_t i) {
    static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};
    return palette[i % 5];
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex_hash(std::uint64_t h) { return fmt::format("{:016x}", h); }

json to_json(const sim::SceneSpec& spec) {
    return json{{"kind", std::string(to_string(spec.kind))},
                {"amplitude", spec.amplitude},
                {"scale", spec.scale},
                {"reflectivity", std::string(to_string(spec.reflectivity))},
                {"min_reflectivity", spec.min_reflectivity},
                {"speckle_seed", spec.speckle_seed}};
}

sim::SceneSpec scene_spec_from_json(const json& j) {
    try {
        sim::SceneSpec s;
        s.kind = sim::parse_scene_kind(j.value("kind", std::string("flat")));
        s.amplitude = j.value("amplitude", 0.0);
        s.scale = j.value("scale", 1.0);
        s.reflectivity = sim::parse_reflectivity_kind(j.value("reflectivity", std::string("uniform")));
        s.min_reflectivity = j.value("min_reflectivity", 0.5);
        s.speckle_seed = j.value("speckle_seed", std::uint64_t{0});
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("scene spec: ") + e.what());
    }
}

json to_json(const sim::ExperimentSpec& spec) {
    json methods = json::array();
    for (auto m : spec.methods) methods.push_back(std::string(to_string(m)));
    json rig = nullptr;
    if (spec.rig) {
        rig = json{{"focal", spec.rig->focal}, {"standoff", spec.rig->standoff}, {"baseline", spec.rig->baseline}};
    }
    return json{{"pattern", io::to_json(spec.pattern)},
                {"scene", to_json(spec.scene)},
                {"methods", methods},
                {"rig", rig},
                {"seed", spec.seed},
                {"noise_sigma", spec.noise_sigma}};
}

sim::ExperimentSpec experiment_spec_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "experiment config must be a JSON object");
    try {
        sim::ExperimentSpec spec;
        spec.pattern = io::pattern_config_from_json(j.at("pattern"));
        if (j.contains("scene")) spec.scene = scene_spec_from_json(j.at("scene"));
        if (j.contains("methods")) {
            spec.methods.clear();
            for (const auto& m : j.at("methods")) spec.methods.push_back(parse_recovery_method(m.get<std::string>()));
        }
        if (j.contains("rig") && !j.at("rig").is_null()) {
            const auto& r = j.at("rig");
            sim::RigSpec rig;
            rig.focal = r.value("focal", rig.focal);
            rig.standoff = r.value("standoff", rig.standoff);
            rig.baseline = r.value("baseline", rig.baseline);
            spec.rig = rig;
        }
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.noise_sigma = j.value("noise_sigma", 0.0);
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("experiment config: ") + e.what());
    }
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg{experiment_spec_from_json(j), {}};
    try {
        if (j.contains("sweep")) cfg.sweep = j.at("sweep").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("sweep: ") + e.what());
    }
    if (cfg.sweep.empty()) cfg.sweep.push_back(cfg.spec.pattern.sampling_period);
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json j = to_json(cfg.spec);
    j["sweep"] = cfg.sweep;
    return j;
}

ExperimentConfig default_experiment_config() {
    ExperimentConfig cfg;
    auto& p = cfg.spec.pattern;
    p.height = 459;
    p.width = 459;
    p.sampling_period = 17;
    // 12 cycles over 459 rows: below the T_s = 17 Nyquist limit (13.5 cycles)
    // and above the T_s = 27 one (8.5 cycles).
    p.carrier_frequency = 12.0 / 459.0;
    p.amplitude = 1.0;
    p.mode = CarrierMode::ComplexQuadrature;
    cfg.spec.rig = sim::RigSpec{};
    cfg.sweep = {17, 27};
    return cfg;
}

json to_json(const RecoveryReport& r, std::size_t sampling_period) {
    json j{{"method", std::string(to_string(r.method))}, {"T_s", sampling_period}};
    if (r.error) {
        j["mean_abs_error"] = r.error->mean_abs;
        j["max_abs_error"] = r.error->max_abs;
    }
    return j;
}

json to_json(const sim::ExperimentReport& r) {
    json methods = json::array();
    for (const auto& m : r.methods) methods.push_back(method_json(m));
    return json{{"T_s", r.spec.pattern.sampling_period},
                {"w_s", r.sampling_angular_frequency},
                {"w_m", r.max_angular_frequency},
                {"nyquist_satisfied", r.nyquist_satisfied},
                {"config_hash", hex_hash(r.config_hash)},
                {"methods", methods},
                {"snapshot",
                 {{"column", r.snapshot.column},
                  {"sample_spectrum", r.snapshot.sample_spectrum},
                  {"windowed_spectrum", r.snapshot.windowed_spectrum}}}};
}

json sweep_body(const sim::SweepTable& table, const ExperimentConfig& cfg) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        rows.push_back({{"T_s", row.sampling_period},
                        {"method", std::string(to_string(row.method))},
                        {"nyquist_satisfied", row.nyquist_satisfied},
                        {"mean_abs_error", row.signal_error.mean_abs},
                        {"max_abs_error", row.signal_error.max_abs},
                        {"phase_mean_abs_error", row.phase_error.mean_abs},
                        {"depth_rms_mm", nullable(row.depth_rms)}});
    }
    json runs = json::array();
    for (const auto& rep : table.reports) runs.push_back(to_json(rep));
    const json config = to_json(cfg);
    return json{{"config", config},
                {"provenance", {{"seed", cfg.spec.seed}, {"config_hash", hex_hash(fnv1a(config.dump()))}}},
                {"w_m", table.max_angular_frequency},
                {"nyquist_period_limit", table.nyquist_period_limit},
                {"table", rows},
                {"runs", runs}};
}

std::string summary_csv(const sim::SweepTable& table) {
    std::string out =
        "T_s,method,nyquist_satisfied,mean_abs_error,max_abs_error,phase_mean_abs_error,phase_max_abs_error,depth_rms_mm\n";
    for (const auto& r : table.rows) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.sampling_period, to_string(r.method),
                           r.nyquist_satisfied ? 1 : 0, io::format_number(r.signal_error.mean_abs),
                           io::format_number(r.signal_error.max_abs), io::format_number(r.phase_error.mean_abs),
                           io::format_number(r.phase_error.max_abs),
                           r.depth_rms ? io::format_number(*r.depth_rms) : std::string(""));
    }
    return out;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series) {
    constexpr double W = 800, H = 420, left = 60, right = 20, top = 40, bottom = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{3}</text>\n",
        W, H, W / 2, title);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left,
                       top, W - left - right, H - top - bottom);
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        W / 2, H - 12, x_label);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.4g}</text>\n", 4.0,
                       top + 10, ymax);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.4g}</text>\n", 4.0,
                       H - bottom, ymin);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.4g}</text>\n", left,
                       H - bottom + 14, xmin);
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n",
        W - right, H - bottom + 14, xmax);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const std::string color = s.color.empty() ? color_for(k) : s.color;
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"", color);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            out += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
        }
        out += "\"/>\n";
        out += fmt::format(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
            left + 10, top + 16 + 14 * static_cast<double>(k), color, s.name);
    }
    out += "</svg>\n";
    return out;
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const sim::SweepTable& table,
                                                const ExperimentConfig& cfg) {
    std::vector<std::filesystem::path> written;
    const json body = sweep_body(table, cfg);
    // Wall-clock time lives outside the hashed body.
    const auto now = std::chrono::system_clock::now();
    const json doc{{"body", body},
                   {"body_hash", hex_hash(fnv1a(body.dump()))},
                   {"generated_at", fmt::format("{}", std::chrono::duration_cast<std::chrono::seconds>(
                                                          now.time_since_epoch())
                                                          .count())}};
    written.push_back(dir / "report.json");
    io::write_text(written.back(), doc.dump(2) + "\n");
    written.push_back(dir / "summary.csv");
    io::write_text(written.back(), summary_csv(table));

    for (const auto& rep : table.reports) {
        const auto ts = rep.spec.pattern.sampling_period;
        const auto& snap = rep.snapshot;
        const std::size_t n = snap.sample_spectrum.size();
        Series sampled{"|F_s| sampled", "#1f77b4", {}, {}};
        Series windowed{"|F| windowed", "#d62728", {}, {}};
        // Centre the spectrum: bins in (-N/2, N/2].
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = (i + n / 2 + 1) % n;
            const double f = static_cast<double>(2 * k <= n ? static_cast<double>(k) : static_cast<double>(k) - n) /
                             static_cast<double>(n);
            sampled.x.push_back(f);
            sampled.y.push_back(snap.sample_spectrum[k]);
            windowed.x.push_back(f);
            windowed.y.push_back(snap.windowed_spectrum[k]);
        }
        written.push_back(dir / fmt::format("spectrum_Ts{}.svg", ts));
        io::write_text(written.back(), svg_line_chart(fmt::format("Spectrum, T_s = {}, column {}", ts, snap.column),
                                                      "frequency (cycles/pixel)", {sampled, windowed}));

        std::vector<Series> signal;
        Series truth{"ground truth", "#2ca02c", {}, {}};
        for (std::size_t t = 0; t < snap.truth.size(); ++t) {
            truth.x.push_back(static_cast<double>(t));
            truth.y.push_back(snap.truth[t].real());
        }
        signal.push_back(truth);
        std::string csv = "t,truth_re,truth_im";
        for (std::size_t m = 0; m < snap.recovered.size(); ++m) {
            const auto name = std::string(to_string(rep.spec.methods[m]));
            csv += "," + name + "_re," + name + "_im";
            Series s{name, m == 0 ? "#d62728" : "#1f77b4", {}, {}};
            for (std::size_t t = 0; t < snap.recovered[m].size(); ++t) {
                s.x.push_back(static_cast<double>(t));
                s.y.push_back(snap.recovered[m][t].real());
            }
            signal.push_back(std::move(s));
        }
        csv += "\n";
        for (std::size_t t = 0; t < snap.truth.size(); ++t) {
            csv += fmt::format("{},{},{}", t, io::format_number(snap.truth[t].real()),
                               io::format_number(snap.truth[t].imag()));
            for (const auto& r : snap.recovered) {
                csv += "," + io::format_number(r[t].real()) + "," + io::format_number(r[t].imag());
            }
            csv += "\n";
        }
        written.push_back(dir / fmt::format("signal_Ts{}.svg", ts));
        io::write_text(written.back(),
                       svg_line_chart(fmt::format("Recovered signal (real part), T_s = {}", ts), "t (pixels)", signal));
        written.push_back(dir / fmt::format("signal_Ts{}.csv", ts));
        io::write_text(written.back(), csv);
    }
    return written;
}

}  // namespace psp::report
