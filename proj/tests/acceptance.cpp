// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "oracles.hpp"
#include "psp/geometry.hpp"
#include "psp/io.hpp"
#include "psp/recovery.hpp"
#include "psp/simkit.hpp"
#include "psp_cli.hpp"

using namespace psp;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Tolerances.
constexpr double kPerfectRecoveryMax = 1e-9;       // x I_0
constexpr double kAliasingMin = 1e-2;              // x I_0
constexpr double kSplineRatio = 100.0;
constexpr double kOracleAgreement = 1e-6;
constexpr double kCalibrationRelative = 1e-9;
constexpr double kCalibrationResidual = 1e-10;
constexpr double kTriangulationCondition = 1e6;
constexpr double kTriangulationError = 1e-8;
constexpr double kPlaneRms = 1e-3;                 // mm
constexpr double kBumpDepthRms = 1e-2;             // mm
constexpr double kNoiseSigma = 0.01;               // x I_0
constexpr double kNoiseFactor = 5.0;

// Sampling period of the end-to-end runs, well inside the bump's band limit
// (pi / w_m is about 18.9 pixels).
const std::string kPipelinePeriod = "9";

struct Verdict {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << fmt::format("criterion {}: {} {} ({})", id, v.pass ? "PASS" : "FAIL", name, v.detail) << std::endl;
}

PatternConfig carrier_config(std::size_t height, std::size_t ts, double f0) {
    PatternConfig c;
    c.height = height;
    c.width = 1;
    c.sampling_period = ts;
    c.carrier_frequency = f0;
    return c;
}

DenseSignal carrier_truth(const PatternConfig& cfg) {
    DenseSignal d{std::vector<Complex>(cfg.height), cfg.mode};
    for (std::size_t t = 0; t < cfg.height; ++t) d.values[t] = modulated_carrier(cfg, static_cast<double>(t));
    return d;
}

ErrorStats carrier_error(const PatternConfig& cfg, RecoveryMethod m) {
    const auto s = extract_column(generate_pattern(cfg), 0);
    return recovery_error(recover(s, m), carrier_truth(cfg));
}

int cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) throw std::runtime_error("psp " + args[0] + " failed: " + err.str());
    return code;
}

const std::vector<std::size_t> kCriterion1Periods{2, 4, 8, 14, 16};

Verdict perfect_recovery() {
    double worst = 0.0;
    for (std::size_t ts : kCriterion1Periods) {
        worst = std::max(worst, carrier_error(carrier_config(448, ts, 1.0 / 32), RecoveryMethod::Frequency).max_abs);
    }
    return {worst < kPerfectRecoveryMax, fmt::format("worst max error {:.3e} < {:.0e}", worst, kPerfectRecoveryMax)};
}

Verdict aliasing() {
    double least = std::numeric_limits<double>::infinity();
    std::string parts;
    for (auto [ts, height] : {std::pair<std::size_t, std::size_t>{17, 544}, {32, 448}, {64, 448}}) {
        const double e = carrier_error(carrier_config(height, ts, 1.0 / 32), RecoveryMethod::Frequency).max_abs;
        least = std::min(least, e);
        parts += fmt::format("{}T_s={}: {:.3g}", parts.empty() ? "" : ", ", ts, e);
    }
    return {least > kAliasingMin, fmt::format("{}; all > {:.0e}", parts, kAliasingMin)};
}

Verdict method_ordering() {
    bool ok = true;
    double weakest_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t ts : kCriterion1Periods) {
        const auto cfg = carrier_config(448, ts, 1.0 / 32);
        const auto freq = carrier_error(cfg, RecoveryMethod::Frequency);
        const auto spline = carrier_error(cfg, RecoveryMethod::Spline);
        ok = ok && freq.max_abs < kPerfectRecoveryMax && spline.mean_abs > 0.0 &&
             spline.mean_abs > kSplineRatio * freq.mean_abs;
        weakest_ratio = std::min(weakest_ratio, spline.mean_abs / std::max(freq.mean_abs, 1e-300));
    }
    return {ok, fmt::format("smallest spline/frequency mean error ratio {:.3e} > {:.0f}", weakest_ratio, kSplineRatio)};
}

Verdict oracle_agreement() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> pick(0, 4);
    const std::array<std::size_t, 5> periods{2, 3, 4, 6, 8};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t ts = periods[static_cast<std::size_t>(pick(rng))];
        const std::size_t n = 240;
        const auto tones = test::random_tones(rng, n, static_cast<int>(n / (2 * ts)), 12);
        SampledSignal s;
        s.sampling_period = ts;
        s.dense_length = n;
        for (std::size_t t = 0; t < n; t += ts) s.values.push_back(tones(static_cast<double>(t)));
        const auto a = recover_frequency(s);
        const auto b = reconstruct_sinc(s, kPi / static_cast<double>(ts));
        worst = std::max(worst, recovery_error(a, b).max_abs);
    }
    return {worst < kOracleAgreement, fmt::format("100 signals, worst disagreement {:.3e} < {:.0e}", worst, kOracleAgreement)};
}

Verdict calibration() {
    std::mt19937_64 rng(77);
    double worst_rel = 0.0, worst_res = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto cam = test::random_projection(rng, 1000.0);
        const auto proj = test::random_projection(rng, 1000.0, -200.0);
        geometry::CorrespondenceSet c;
        for (const auto& p : test::random_points(rng, 20, 100.0)) {
            const auto q = test::dehomogenize(cam, p);
            c.push_back({p, {q(0), q(1)}, {test::dehomogenize(proj, p)(1)}});
        }
        const auto sc = geometry::solve_camera(c);
        const auto sp = geometry::solve_projector(c);
        const auto want_c = geometry::CameraProjection::from_matrix(cam).theta;
        const auto want_p = geometry::ProjectorProjection::from_matrix(proj).theta;
        auto rel = [](std::span<const double> got, std::span<const double> want) {
            double scale = 0.0, diff = 0.0;
            for (std::size_t i = 0; i < want.size(); ++i) {
                scale = std::max(scale, std::abs(want[i]));
                diff = std::max(diff, std::abs(got[i] - want[i]));
            }
            return diff / scale;
        };
        worst_rel = std::max({worst_rel, rel(sc.projection.theta, want_c), rel(sp.projection.theta, want_p)});
        worst_res = std::max({worst_res, sc.residual_norm, sp.residual_norm});
    }
    return {worst_rel < kCalibrationRelative && worst_res < kCalibrationResidual,
            fmt::format("worst relative error {:.3e} < {:.0e}, worst residual {:.3e} < {:.0e}", worst_rel,
                        kCalibrationRelative, worst_res, kCalibrationResidual)};
}

Verdict triangulation() {
    std::mt19937_64 rng(1234);
    double worst = 0.0;
    int checked = 0;
    while (checked < 1000) {
        const auto tc = geometry::CameraProjection::from_matrix(test::random_projection(rng, 1000.0));
        const auto tp = geometry::ProjectorProjection::from_matrix(test::random_projection(rng, 1000.0, -200.0));
        const auto p = test::random_points(rng, 1, 150.0)[0];
        const auto q = geometry::project_camera(tc, p);
        const double yp = geometry::project_projector(tp, p).y;
        if (geometry::triangulation_condition(tc, tp, q.x, q.y, yp) >= kTriangulationCondition) continue;
        const auto r = geometry::triangulate(tc, tp, q.x, q.y, yp);
        worst = std::max({worst, std::abs(r.X - p.X), std::abs(r.Y - p.Y), std::abs(r.Z - p.Z)});
        ++checked;
    }
    return {worst < kTriangulationError, fmt::format("1000 round trips, worst coordinate error {:.3e} < {:.0e}", worst,
                                                     kTriangulationError)};
}

// pattern -> simulate -> recover -> calibrate -> reconstruct through the CLI.
struct PipelineResult {
    std::vector<io::CloudPoint> cloud;
    std::vector<io::SignalRow> rows;  // (x, t) of each cloud point
    std::map<std::pair<std::size_t, std::size_t>, double> depth_truth;
};

PipelineResult run_pipeline(const fs::path& dir, const std::string& scene, const std::string& amplitude,
                            const std::string& scale, const std::string& ts) {
    const std::string f0 = io::format_number(12.0 / 459.0);
    fs::remove_all(dir);
    cli({"pattern", "--height", "459", "--width", "459", "--ts", ts, "--f0", f0, "--out", (dir / "p").string()});
    cli({"simulate", "--pattern", (dir / "p.json").string(), "--scene", scene, "--scene-amplitude", amplitude,
         "--scene-scale", scale, "--rig", "--out", (dir / "sim").string()});
    cli({"recover", "--input", (dir / "sim/samples.csv").string(), "--ts", ts, "--method", "freq", "--phase",
         "--f0", f0, "--out", (dir / "rec").string()});
    cli({"calibrate", "--input", (dir / "sim/correspondences.csv").string(), "--out", (dir / "cal.json").string()});
    cli({"reconstruct", "--calibration", (dir / "cal.json").string(), "--phase", (dir / "rec/recovered.csv").string(),
         "--f0", f0, "--out", (dir / "cloud.ply").string()});

    PipelineResult r;
    r.cloud = io::decode_ply(io::read_text(dir / "cloud.ply"));
    r.rows = io::decode_signal_csv(io::read_text(dir / "rec/recovered.csv")).rows;
    std::istringstream depth(io::read_text(dir / "sim/depth_gt.csv"));
    std::string line;
    std::getline(depth, line);
    while (std::getline(depth, line)) {
        std::size_t x = 0, t = 0;
        double z = 0.0, yp = 0.0;
        char c = 0;
        std::istringstream ls(line);
        ls >> x >> c >> t >> c >> z >> c >> yp;
        r.depth_truth[{x, t}] = z;
    }
    return r;
}

Verdict end_to_end() {
    const auto root = fs::temp_directory_path() / "psp_acceptance";

    const auto flat = run_pipeline(root / "flat", "flat", "0", "1", kPipelinePeriod);
    Eigen::MatrixXd A(flat.cloud.size(), 3);
    Eigen::VectorXd z(flat.cloud.size());
    Eigen::Index n = 0;
    for (const auto& p : flat.cloud) {
        if (!p.valid) continue;
        A.row(n) << p.point.X, p.point.Y, 1.0;
        z(n++) = p.point.Z;
    }
    A.conservativeResize(n, 3);
    z.conservativeResize(n);
    const Eigen::Vector3d plane = A.colPivHouseholderQr().solve(z);
    const double plane_rms = std::sqrt((A * plane - z).squaredNorm() / static_cast<double>(n));

    const auto bump = run_pipeline(root / "bump", "gaussian_bump", "5", "60", kPipelinePeriod);
    double sq = 0.0;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < bump.cloud.size(); ++i) {
        if (!bump.cloud[i].valid) continue;
        const double d = bump.cloud[i].point.Z - bump.depth_truth.at({bump.rows[i].x, bump.rows[i].t});
        sq += d * d;
        ++valid;
    }
    const double depth_rms = std::sqrt(sq / static_cast<double>(valid));
    const bool all_valid = static_cast<Eigen::Index>(flat.cloud.size()) == n && valid == bump.cloud.size();
    return {all_valid && plane_rms < kPlaneRms && depth_rms < kBumpDepthRms,
            fmt::format("flat plane-fit RMS {:.3e} mm < {:.0e}, bump depth RMS {:.3e} mm < {:.0e}, invalid points {}",
                        plane_rms, kPlaneRms, depth_rms, kBumpDepthRms,
                        flat.cloud.size() - static_cast<std::size_t>(n) + bump.cloud.size() - valid)};
}

Verdict determinism() {
    const auto root = fs::temp_directory_path() / "psp_acceptance" / "determinism";
    fs::remove_all(root);
    cli({"report", "--threads", "1", "--out", (root / "a").string()});
    cli({"report", "--threads", "1", "--out", (root / "b").string()});
    cli({"report", "--threads", "4", "--out", (root / "c").string()});
    auto body = [&](const char* run) {
        const auto j = nlohmann::json::parse(io::read_text(root / run / "report.json"));
        return std::pair{j.at("body").dump(), j.at("body_hash").get<std::string>()};
    };
    const auto a = body("a"), b = body("b"), c = body("c");
    const bool same = a == b && a == c;
    return {same, fmt::format("body hashes {} / {} / {} (threads 1, 1, 4)", a.second, b.second, c.second)};
}

Verdict noise() {
    sim::ExperimentSpec spec;
    spec.pattern.height = 459;
    spec.pattern.width = 459;
    spec.pattern.sampling_period = 17;
    spec.pattern.carrier_frequency = 12.0 / 459;
    spec.noise_sigma = kNoiseSigma;
    spec.seed = 42;
    spec.methods = {RecoveryMethod::Frequency};
    const auto r = sim::run_experiment(spec);
    const double err = r.methods.at(0).signal_error.mean_abs;
    return {r.nyquist_satisfied && err < kNoiseFactor * kNoiseSigma,
            fmt::format("sigma {:.2g}, mean error {:.3e} < {:.2g}", kNoiseSigma, err, kNoiseFactor * kNoiseSigma)};
}

}  // namespace

int main() {
    report(1, "perfect recovery above Nyquist", perfect_recovery);
    report(2, "aliasing detected below Nyquist", aliasing);
    report(3, "spline worse than frequency recovery", method_ordering);
    report(4, "frequency and sinc reconstruction agree", oracle_agreement);
    report(5, "calibration exact on noiseless data", calibration);
    report(6, "triangulation round trip", triangulation);
    report(7, "end-to-end point cloud", end_to_end);
    report(8, "report determinism", determinism);
    report(9, "noise robustness", noise);
    std::cout << fmt::format("{} of 9 criteria passed", 9 - failures) << std::endl;
    return failures == 0 ? 0 : 1;
}
