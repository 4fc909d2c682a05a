#include "psp_cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "psp/error.hpp"
#include "psp/geometry.hpp"
#include "psp/io.hpp"
#include "psp/numeric.hpp"
#include "psp/recovery.hpp"
#include "psp/report.hpp"
#include "psp/simkit.hpp"

namespace psp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Validation failure detected by the CLI itself (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PatternFlags {
    long long height = 0;
    long long width = 0;
    long long ts = 0;
    double f0 = 0.0;
    double amplitude = 1.0;
    std::string mode = "complex";
};

void add_pattern_flags(CLI::App* cmd, PatternFlags& f, bool required) {
    auto* h = cmd->add_option("--height", f.height, "Raster height in pixels (multiple of T_s)");
    auto* w = cmd->add_option("--width", f.width, "Raster width in pixels");
    auto* t = cmd->add_option("--ts", f.ts, "Sampling period T_s in pixels");
    auto* c = cmd->add_option("--f0", f.f0, "Carrier frequency in cycles per pixel");
    cmd->add_option("--amplitude", f.amplitude, "Carrier amplitude I_0");
    cmd->add_option("--mode", f.mode, "Carrier representation: complex or real");
    if (required) {
        for (auto* o : {h, w, t, c}) o->required();
    }
}

PatternConfig pattern_from_flags(const PatternFlags& f) {
    if (f.ts < 1) throw UsageError("T_s must be >= 1");
    if (f.height < 1 || f.width < 1) throw UsageError("height and width must be >= 1");
    PatternConfig cfg;
    cfg.height = static_cast<std::size_t>(f.height);
    cfg.width = static_cast<std::size_t>(f.width);
    cfg.sampling_period = static_cast<std::size_t>(f.ts);
    cfg.carrier_frequency = f.f0;
    cfg.amplitude = f.amplitude;
    cfg.mode = parse_carrier_mode(f.mode);
    cfg = snap_carrier(cfg);
    cfg.validate();
    return cfg;
}

io::PgmFormat parse_format(const std::string& s) {
    if (s == "p2" || s == "P2" || s == "ascii") return io::PgmFormat::Ascii;
    if (s == "p5" || s == "P5" || s == "binary") return io::PgmFormat::Binary;
    throw UsageError("unknown PGM format '" + s + "' (expected p2 or p5)");
}

json paths_json(const std::vector<fs::path>& paths) {
    json j = json::array();
    for (const auto& p : paths) j.push_back(p.string());
    return j;
}

json read_json_file(const fs::path& path) {
    const std::string text = io::read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

// ---- pattern -----------------------------------------------------------------

struct PatternCommand {
    PatternFlags flags;
    std::string out;
    std::string format = "p5";

    int run(std::ostream& os) const {
        const PatternConfig cfg = pattern_from_flags(flags);
        const PatternImage img = generate_pattern(cfg);
        auto files = io::save_pattern(out, img, parse_format(format));
        const fs::path config_path = out + ".json";
        io::write_text(config_path, io::to_json(cfg).dump(2) + "\n");
        files.push_back(config_path);
        os << json{{"command", "pattern"},
                   {"files", paths_json(files)},
                   {"sample_rows", cfg.sample_count()},
                   {"config", io::to_json(cfg)}}
                  .dump()
           << "\n";
        return kSuccess;
    }
};

// ---- simulate ------------------------------------------------------------------

struct SimulateCommand {
    PatternFlags flags;
    std::string pattern_file;
    std::string scene = "flat";
    double scene_amplitude = 0.0;
    double scene_scale = 1.0;
    std::string reflectivity = "uniform";
    double min_reflectivity = 0.5;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    bool rig = false;
    sim::RigSpec rig_spec;
    std::string out;
    std::string format = "p5";

    int run(std::ostream& os) const {
        PatternConfig cfg;
        if (!pattern_file.empty()) {
            cfg = io::pattern_config_from_json(read_json_file(pattern_file));
            cfg.validate();
        } else {
            if (flags.height == 0 && flags.ts == 0) throw UsageError("simulate needs --pattern or pattern flags");
            cfg = pattern_from_flags(flags);
        }
        if (!(noise_sigma >= 0.0)) throw UsageError("noise sigma must be >= 0");

        sim::SceneSpec spec;
        spec.kind = sim::parse_scene_kind(scene);
        spec.amplitude = scene_amplitude;
        spec.scale = scene_scale;
        spec.reflectivity = sim::parse_reflectivity_kind(reflectivity);
        spec.min_reflectivity = min_reflectivity;
        spec.speckle_seed = seed;
        spec.validate();

        const fs::path dir = out;
        std::vector<fs::path> files;
        Scene scene_fields;
        std::optional<sim::GeometricScene> geo;
        std::optional<sim::Geometry> geometry;
        if (rig) {
            geometry = sim::make_rig(rig_spec, cfg.height, cfg.width);
            geo = sim::make_geometric_scene(spec, cfg, *geometry);
            scene_fields = geo->scene;
        } else {
            scene_fields = sim::make_scene(spec, cfg.height, cfg.width);
        }

        const PatternImage deformed = deform_pattern(generate_pattern(cfg), scene_fields);
        for (auto& p : io::save_pattern(dir / "deformed", deformed, parse_format(format))) files.push_back(p);
        files.push_back(dir / "deformed.json");
        io::write_text(files.back(), io::to_json(cfg).dump(2) + "\n");

        // Sample values (with optional additive noise) and dense ground truth.
        std::map<std::size_t, SampledSignal> samples;
        std::map<std::size_t, DenseSignal> truth;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
        io::SignalTable phase_table;
        phase_table.has_column = true;
        phase_table.has_phase = true;
        for (std::size_t x = 0; x < cfg.width; ++x) {
            SampledSignal s = extract_column(deformed, x);
            if (noise_sigma > 0.0) {
                for (auto& v : s.values) {
                    const double im = cfg.mode == CarrierMode::ComplexQuadrature ? noise(rng) : 0.0;
                    v += Complex{noise(rng), im};
                }
            }
            samples.emplace(x, std::move(s));
            DenseSignal d{std::vector<Complex>(cfg.height), cfg.mode};
            for (std::size_t t = 0; t < cfg.height; ++t) {
                d.values[t] = modulated_carrier(cfg, static_cast<double>(t), scene_fields.phase(t, x),
                                                scene_fields.reflectivity(t, x));
                phase_table.rows.push_back({x, t, d.values[t], scene_fields.reflectivity(t, x) * cfg.amplitude,
                                            scene_fields.phase(t, x)});
            }
            truth.emplace(x, std::move(d));
        }
        files.push_back(dir / "samples.csv");
        io::write_text(files.back(), io::encode_signal_csv(io::table_from_sampled(samples, true)));
        files.push_back(dir / "gt.csv");
        io::write_text(files.back(), io::encode_signal_csv(io::table_from_dense(truth, true)));
        files.push_back(dir / "phase_gt.csv");
        io::write_text(files.back(), io::encode_signal_csv(phase_table));

        if (geo) {
            std::string depth = "x,t,Zw,yp\n";
            for (std::size_t t = 0; t < cfg.height; ++t) {
                for (std::size_t x = 0; x < cfg.width; ++x) {
                    depth += std::to_string(x) + "," + std::to_string(t) + "," + io::format_number(geo->depth(t, x)) +
                             "," + io::format_number(geo->projector_row(t, x)) + "\n";
                }
            }
            files.push_back(dir / "depth_gt.csv");
            io::write_text(files.back(), depth);
            files.push_back(dir / "correspondences.csv");
            io::write_text(files.back(), io::encode_correspondences(
                                             {sim::make_correspondences(*geometry, cfg.height, cfg.width), true}));
            files.push_back(dir / "rig.json");
            io::write_text(files.back(),
                           io::to_json(io::Calibration{geometry->camera, 0.0, geometry->projector, 0.0}).dump(2) + "\n");
        }

        os << json{{"command", "simulate"},
                   {"files", paths_json(files)},
                   {"scene", report::to_json(spec)},
                   {"bandwidth_bound", sim::bandwidth_bound(cfg, scene_fields)},
                   {"config", io::to_json(cfg)}}
                  .dump()
           << "\n";
        return kSuccess;
    }
};

// ---- recover -----------------------------------------------------------------

struct RecoverCommand {
    std::string input;
    long long ts = 0;
    std::string method = "frequency";
    std::string mode = "complex";
    std::string truth;
    bool phase = false;
    std::optional<double> f0;
    double amplitude = 1.0;
    std::string out;

    int run(std::ostream& os, std::ostream& es) const {
        if (ts < 1) throw UsageError("T_s must be >= 1");
        const RecoveryMethod m = parse_recovery_method(method);
        const CarrierMode carrier = parse_carrier_mode(mode);
        if (phase && !f0) throw UsageError("--phase requires --f0");
        if (f0 && !(*f0 > 0.0 && *f0 < 0.5)) throw UsageError("f0 must satisfy 0 < f0 < 0.5 cycles/pixel");

        const io::SignalTable table = io::decode_signal_csv(io::read_text(input));
        if (table.rows.empty()) throw UsageError("input signal has no rows");
        const auto columns = io::sampled_signals(table, static_cast<std::size_t>(ts), carrier);
        std::map<std::size_t, DenseSignal> truth_columns;
        if (!truth.empty()) truth_columns = io::dense_signals(io::decode_signal_csv(io::read_text(truth)), carrier);

        io::SignalTable result;
        result.has_column = table.has_column;
        result.has_phase = true;
        CompensatedSum error_sum;
        std::size_t error_count = 0;
        double error_max = 0.0;
        std::size_t masked = 0;
        for (const auto& [x, s] : columns) {
            const DenseSignal rec = recover(s, m);
            if (!truth.empty()) {
                const auto it = truth_columns.find(x);
                if (it == truth_columns.end()) {
                    throw UsageError("truth file lacks column " + std::to_string(x));
                }
                const ErrorStats e = recovery_error(rec, it->second);
                error_sum.add(e.mean_abs * static_cast<double>(rec.size()));
                error_count += rec.size();
                error_max = std::max(error_max, e.max_abs);
            }
            std::vector<double> phi(rec.size());
            if (phase) {
                const DenseSignal c = carrier == CarrierMode::ComplexQuadrature ? rec : analytic_signal(rec);
                const PhaseProfile prof = extract_phase_masked(c, *f0, 1e-6 * amplitude);
                for (std::size_t t = 0; t < rec.size(); ++t) {
                    phi[t] = prof.phase[t];
                    if (!prof.valid[t]) ++masked;
                }
            } else {
                for (std::size_t t = 0; t < rec.size(); ++t) phi[t] = std::arg(rec.values[t]);
            }
            for (std::size_t t = 0; t < rec.size(); ++t) {
                result.rows.push_back({x, t, rec.values[t], std::abs(rec.values[t]), phi[t]});
            }
        }

        const fs::path dir = out;
        io::write_text(dir / "recovered.csv", io::encode_signal_csv(result));
        json rep{{"method", std::string(to_string(m))}, {"T_s", ts}, {"columns", columns.size()}};
        if (!truth.empty()) {
            rep["mean_abs_error"] = error_count > 0 ? error_sum.value() / static_cast<double>(error_count) : 0.0;
            rep["max_abs_error"] = error_max;
        }
        if (phase) rep["masked_pixels"] = masked;
        io::write_text(dir / "report.json", rep.dump(2) + "\n");
        os << rep.dump() << "\n";
        if (masked > 0) {
            es << "NearZeroMagnitude: phase undefined at " << masked << " pixel(s); written as nan\n";
            return kNumericalDiagnostic;
        }
        return kSuccess;
    }
};

// ---- calibrate ------------------------------------------------------------------

struct CalibrateCommand {
    std::string input;
    std::string out;

    int run(std::ostream& os) const {
        const auto table = io::decode_correspondences(io::read_text(input));
        io::Calibration cal;
        const auto cam = geometry::solve_camera(table.records);
        cal.camera = cam.projection;
        cal.residual_c = cam.residual_norm;
        if (table.has_projector) {
            const auto proj = geometry::solve_projector(table.records);
            cal.projector = proj.projection;
            cal.residual_p = proj.residual_norm;
        }
        const json j = io::to_json(cal);
        io::write_text(out, j.dump(2) + "\n");
        os << json{{"command", "calibrate"}, {"file", out}, {"points", table.records.size()},
                   {"residual_c", cal.residual_c}, {"residual_p", cal.residual_p ? json(*cal.residual_p) : json(nullptr)}}
                  .dump()
           << "\n";
        return kSuccess;
    }
};

// ---- reconstruct ----------------------------------------------------------------

struct ReconstructCommand {
    std::string calibration;
    std::string phase_file;
    double f0 = 0.0;
    std::string out;

    int run(std::ostream& os) const {
        if (!(f0 > 0.0 && f0 < 0.5)) throw UsageError("f0 must satisfy 0 < f0 < 0.5 cycles/pixel");
        const io::Calibration cal = io::calibration_from_json(read_json_file(calibration));
        if (!cal.projector) throw UsageError("calibration file has no theta_p; projector calibration is required");
        const io::SignalTable table = io::decode_signal_csv(io::read_text(phase_file));
        if (table.rows.empty()) throw UsageError("phase file has no rows");
        if (!table.has_phase) throw UsageError("phase file needs mag and phase columns (recover --phase)");

        std::vector<io::CloudPoint> cloud;
        cloud.reserve(table.rows.size());
        std::size_t valid = 0;
        for (const auto& r : table.rows) {
            io::CloudPoint cp{{0.0, 0.0, 0.0}, false};
            if (std::isfinite(r.phase)) {
                const auto t = static_cast<double>(r.t);
                const double yp = phase_to_projector_row(r.phase, f0, t);
                try {
                    cp.point = geometry::triangulate(cal.camera, *cal.projector, static_cast<double>(r.x), t, yp);
                    cp.valid = true;
                    ++valid;
                } catch (const Error&) {
                }
            }
            cloud.push_back(cp);
        }
        io::write_text(out, io::encode_ply(cloud));
        os << json{{"command", "reconstruct"}, {"file", out}, {"points", cloud.size()}, {"valid", valid}}.dump()
           << "\n";
        return kSuccess;
    }
};

// ---- report ------------------------------------------------------------------------

struct ReportCommand {
    std::string config;
    std::string sweep;
    std::string out;
    unsigned threads = 0;

    int run(std::ostream& os) const {
        report::ExperimentConfig cfg = config.empty()
                                           ? report::default_experiment_config()
                                           : report::experiment_config_from_json(read_json_file(config));
        if (!sweep.empty()) {
            cfg.sweep.clear();
            std::stringstream ss(sweep);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    std::size_t used = 0;
                    const long long v = std::stoll(item, &used);
                    if (used != item.size() || v < 1) throw std::invalid_argument(item);
                    cfg.sweep.push_back(static_cast<std::size_t>(v));
                } catch (const std::exception&) {
                    throw UsageError("--sweep expects comma-separated positive integers, got '" + item + "'");
                }
            }
        }
        std::sort(cfg.sweep.begin(), cfg.sweep.end());
        cfg.sweep.erase(std::unique(cfg.sweep.begin(), cfg.sweep.end()), cfg.sweep.end());
        cfg.spec.validate();
        const auto table = sim::sweep_sampling_period(cfg.spec, cfg.sweep, {threads});
        const auto files = report::write_report(out, table, cfg);
        json rows = json::array();
        for (const auto& r : table.rows) {
            rows.push_back({{"T_s", r.sampling_period},
                            {"method", std::string(to_string(r.method))},
                            {"nyquist_satisfied", r.nyquist_satisfied},
                            {"mean_abs_error", r.signal_error.mean_abs}});
        }
        os << json{{"command", "report"}, {"files", paths_json(files)}, {"table", rows}}.dump() << "\n";
        return kSuccess;
    }
};

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return kIoFailure;
        case ErrorCode::NearZeroMagnitude:
        case ErrorCode::SingularSystem:
        case ErrorCode::DivisionByZeroDepth: return kNumericalDiagnostic;
        default: return kValidationFailure;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Phase sampling profilometry: pattern synthesis, recovery, calibration and reconstruction", "psp"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.fallthrough();

    PatternCommand pattern;
    auto* c_pattern = app.add_subcommand("pattern", "Generate a down-sampled phase pattern as PGM");
    add_pattern_flags(c_pattern, pattern.flags, true);
    c_pattern->add_option("--out", pattern.out, "Output prefix")->required();
    c_pattern->add_option("--format", pattern.format, "p2 (ASCII) or p5 (binary)");

    SimulateCommand simulate;
    auto* c_sim = app.add_subcommand("simulate", "Deform a pattern by a synthetic scene");
    add_pattern_flags(c_sim, simulate.flags, false);
    c_sim->add_option("--pattern", simulate.pattern_file, "Pattern config JSON written by `pattern`");
    c_sim->add_option("--scene", simulate.scene, "flat, gaussian_bump, ramp or sinusoidal_relief");
    c_sim->add_option("--scene-amplitude", simulate.scene_amplitude, "Scene amplitude (rad, or mm with --rig)");
    c_sim->add_option("--scene-scale", simulate.scene_scale, "Scene length scale (px, or mm with --rig)");
    c_sim->add_option("--reflectivity", simulate.reflectivity, "uniform, linear_gradient or speckle");
    c_sim->add_option("--min-reflectivity", simulate.min_reflectivity, "Lower reflectivity bound");
    c_sim->add_option("--seed", simulate.seed, "Seed for speckle and noise");
    c_sim->add_option("--noise-sigma", simulate.noise_sigma, "Gaussian noise on sample values");
    c_sim->add_flag("--rig", simulate.rig, "Interpret the scene as a height field under the synthetic rig");
    c_sim->add_option("--focal", simulate.rig_spec.focal, "Rig focal length, pixels");
    c_sim->add_option("--standoff", simulate.rig_spec.standoff, "Rig standoff, mm");
    c_sim->add_option("--baseline", simulate.rig_spec.baseline, "Rig baseline, mm");
    c_sim->add_option("--out", simulate.out, "Output directory")->required();
    c_sim->add_option("--format", simulate.format, "p2 (ASCII) or p5 (binary)");

    RecoverCommand recover;
    auto* c_rec = app.add_subcommand("recover", "Recover full-resolution signals from samples");
    c_rec->add_option("--input", recover.input, "Sample CSV (x,t,re,im or t,re,im)")->required();
    c_rec->add_option("--ts", recover.ts, "Sampling period T_s")->required();
    c_rec->add_option("--method", recover.method, "freq, spline or sinc");
    c_rec->add_option("--mode", recover.mode, "complex or real");
    c_rec->add_option("--truth", recover.truth, "Dense ground-truth CSV");
    c_rec->add_flag("--phase", recover.phase, "Extract the demodulated phase (needs --f0)");
    c_rec->add_option("--f0", recover.f0, "Carrier frequency, cycles per pixel");
    c_rec->add_option("--amplitude", recover.amplitude, "Carrier amplitude I_0 (magnitude floor)");
    c_rec->add_option("--out", recover.out, "Output directory")->required();

    CalibrateCommand calibrate;
    auto* c_cal = app.add_subcommand("calibrate", "Least-squares camera/projector calibration");
    c_cal->add_option("--input", calibrate.input, "Correspondence CSV (Xw,Yw,Zw,xc,yc[,yp])")->required();
    c_cal->add_option("--out", calibrate.out, "Calibration JSON")->required();

    ReconstructCommand reconstruct;
    auto* c_recon = app.add_subcommand("reconstruct", "Triangulate a recovered phase field into a PLY cloud");
    c_recon->add_option("--calibration", reconstruct.calibration, "Calibration JSON")->required();
    c_recon->add_option("--phase", reconstruct.phase_file, "Recovered CSV with mag,phase columns")->required();
    c_recon->add_option("--f0", reconstruct.f0, "Carrier frequency, cycles per pixel")->required();
    c_recon->add_option("--out", reconstruct.out, "Output PLY")->required();

    ReportCommand rep;
    auto* c_rep = app.add_subcommand("report", "Run the sampling-period experiment and write report artifacts");
    c_rep->add_option("--config", rep.config, "Experiment config JSON");
    c_rep->add_option("--sweep", rep.sweep, "Comma-separated T_s values");
    c_rep->add_option("--out", rep.out, "Output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kValidationFailure;
    }

    try {
        if (*c_pattern) return pattern.run(out);
        if (*c_sim) return simulate.run(out);
        if (*c_rec) return recover.run(out, err);
        if (*c_cal) return calibrate.run(out);
        if (*c_recon) return reconstruct.run(out);
        if (*c_rep) {
            rep.threads = threads;
            return rep.run(out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kValidationFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kIoFailure;
    }
    return kValidationFailure;
}

}  // namespace psp::cli
