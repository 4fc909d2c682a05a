#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "psp/geometry.hpp"
#include "psp/recovery.hpp"
#include "psp/signal.hpp"

namespace psp::io {

namespace fs = std::filesystem;
using nlohmann::json;

// 17 significant digits, enough to round-trip any double.
std::string format_number(double v);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

// ---- PGM -----------------------------------------------------------------

enum class PgmFormat { Ascii /* P2 */, Binary /* P5 */ };

struct GrayImage {
    Raster<std::uint8_t> pixels;
    std::vector<std::string> comments;  // without the leading '#'
};

std::string encode_pgm(const GrayImage& img, PgmFormat format);
GrayImage decode_pgm(const std::string& bytes);

// 8-bit encoding of pattern channels. Non-sample rows are 0; sample rows map
// [-I_0, I_0] (complex channels) or [0, I_0] (real) onto 1..255 with
// round-half-even, so sample rows stay nonzero.
std::uint8_t quantize_sample(double value, double amplitude, CarrierMode mode);
double dequantize_sample(std::uint8_t code, double amplitude, CarrierMode mode);

// File names written for a pattern: prefix_i.pgm / prefix_q.pgm in complex
// mode, prefix.pgm in real mode.
std::vector<fs::path> pattern_paths(const fs::path& prefix, CarrierMode mode);
std::vector<fs::path> save_pattern(const fs::path& prefix, const PatternImage& img, PgmFormat format);
// Reads the files written by save_pattern; the config comes from the header comment.
PatternImage load_pattern(const fs::path& prefix);

// ---- JSON encodings --------------------------------------------------------

json to_json(const PatternConfig& cfg);
PatternConfig pattern_config_from_json(const json& j);

// ---- Signal CSV (header t,re,im with optional leading x and trailing mag,phase)

struct SignalRow {
    std::size_t x = 0;
    std::size_t t = 0;
    Complex value;
    double magnitude = 0.0;
    double phase = 0.0;
};

struct SignalTable {
    bool has_column = false;
    bool has_phase = false;
    std::vector<SignalRow> rows;
};

std::string encode_signal_csv(const SignalTable& table);
SignalTable decode_signal_csv(const std::string& text);

// Groups sample rows by column into sampled signals. Sample instants must be
// 0, T_s, 2 T_s, ...; the dense length is count * T_s.
std::map<std::size_t, SampledSignal> sampled_signals(const SignalTable& table, std::size_t period,
                                                     CarrierMode mode);
std::map<std::size_t, DenseSignal> dense_signals(const SignalTable& table, CarrierMode mode);

SignalTable table_from_sampled(const std::map<std::size_t, SampledSignal>& columns, bool with_column);
SignalTable table_from_dense(const std::map<std::size_t, DenseSignal>& columns, bool with_column);

// ---- Correspondences CSV (Xw,Yw,Zw,xc,yc[,yp]) ------------------------------

struct CorrespondenceTable {
    geometry::CorrespondenceSet records;
    bool has_projector = false;
};

std::string encode_correspondences(const CorrespondenceTable& table);
CorrespondenceTable decode_correspondences(const std::string& text);

// ---- Calibration JSON --------------------------------------------------------

struct Calibration {
    geometry::CameraProjection camera;
    double residual_c = 0.0;
    std::optional<geometry::ProjectorProjection> projector;
    std::optional<double> residual_p;
};

json to_json(const Calibration& cal);
Calibration calibration_from_json(const json& j);

// ---- PLY ---------------------------------------------------------------------

struct CloudPoint {
    geometry::WorldPoint point;
    bool valid = true;
};

std::string encode_ply(const std::vector<CloudPoint>& cloud);
std::vector<CloudPoint> decode_ply(const std::string& text);

}  // namespace psp::io
