#include "psp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "psp/error.hpp"

namespace psp::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    for (auto& l : split(text, '\n')) {
        if (!l.empty()) out.push_back(l);
    }
    return out;
}

double parse_double(std::string_view s) {
    s = trim(s);
    if (s == "nan" || s == "NaN" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::ParseError, "not a number: '" + std::string(s) + "'");
    }
    return v;
}

std::size_t parse_index(std::string_view s) {
    const double v = parse_double(s);
    if (!(v >= 0.0) || v != std::floor(v)) {
        throw Error(ErrorCode::ParseError, "not a non-negative integer: '" + std::string(s) + "'");
    }
    return static_cast<std::size_t>(v);
}

class Header {
public:
    explicit Header(std::string_view line) {
        for (auto name : split(line, ',')) names_.emplace_back(name);
    }
    std::optional<std::size_t> find(std::string_view name) const {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }
    std::size_t require(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw Error(ErrorCode::ParseError, "CSV header lacks column '" + std::string(name) + "'");
    }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
};

std::vector<std::string_view> checked_fields(std::string_view line, const Header& h, std::size_t lineno) {
    auto f = split(line, ',');
    if (f.size() != h.size()) {
        throw Error(ErrorCode::ParseError, "CSV line " + std::to_string(lineno) + " has " +
                                               std::to_string(f.size()) + " fields, expected " +
                                               std::to_string(h.size()));
    }
    return f;
}

template <std::size_t N>
json array_json(const std::array<double, N>& a) {
    json j = json::array();
    for (double v : a) j.push_back(v);
    return j;
}

template <std::size_t N>
std::array<double, N> array_from_json(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != N) {
        throw Error(ErrorCode::ParseError,
                    std::string("calibration field '") + key + "' must hold " + std::to_string(N) + " numbers");
    }
    std::array<double, N> a{};
    for (std::size_t i = 0; i < N; ++i) {
        a[i] = j.at(key).at(i).get<double>();
        if (!std::isfinite(a[i])) {
            throw Error(ErrorCode::ParseError, std::string("non-finite entry in '") + key + "'");
        }
    }
    return a;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{:.17g}", v);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// ---- PGM -----------------------------------------------------------------

std::string encode_pgm(const GrayImage& img, PgmFormat format) {
    const auto& px = img.pixels;
    std::string out = format == PgmFormat::Ascii ? "P2\n" : "P5\n";
    for (const auto& c : img.comments) out += "#" + c + "\n";
    out += fmt::format("{} {}\n255\n", px.width(), px.height());
    if (format == PgmFormat::Binary) {
        for (auto v : px.data()) out.push_back(static_cast<char>(v));
        return out;
    }
    for (std::size_t r = 0; r < px.height(); ++r) {
        const auto row = px.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out.push_back(' ');
            out += std::to_string(row[c]);
        }
        out.push_back('\n');
    }
    return out;
}

GrayImage decode_pgm(const std::string& bytes) {
    std::size_t pos = 0;
    GrayImage img;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                const auto end = bytes.find('\n', pos);
                img.comments.push_back(bytes.substr(pos + 1, end - pos - 1));
                pos = end == std::string::npos ? bytes.size() : end + 1;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto token = [&] {
        skip_space_and_comments();
        const auto start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw Error(ErrorCode::ParseError, "truncated PGM header");
        return std::string_view(bytes).substr(start, pos - start);
    };
    const auto magic = token();
    if (magic != "P2" && magic != "P5") throw Error(ErrorCode::ParseError, "not a P2/P5 PGM file");
    const std::size_t width = parse_index(token());
    const std::size_t height = parse_index(token());
    const std::size_t maxval = parse_index(token());
    if (maxval != 255) throw Error(ErrorCode::ParseError, "only maxval 255 is supported");
    img.pixels = Raster<std::uint8_t>(height, width);
    if (magic == "P5") {
        ++pos;  // single whitespace after maxval
        if (bytes.size() - pos < width * height) throw Error(ErrorCode::ParseError, "truncated PGM data");
        for (std::size_t i = 0; i < width * height; ++i) {
            img.pixels.data()[i] = static_cast<std::uint8_t>(bytes[pos + i]);
        }
        return img;
    }
    for (std::size_t i = 0; i < width * height; ++i) {
        const std::size_t v = parse_index(token());
        if (v > 255) throw Error(ErrorCode::ParseError, "PGM value exceeds maxval");
        img.pixels.data()[i] = static_cast<std::uint8_t>(v);
    }
    return img;
}

std::uint8_t quantize_sample(double value, double amplitude, CarrierMode mode) {
    double u = mode == CarrierMode::ComplexQuadrature ? 0.5 * (value / amplitude + 1.0) : value / amplitude;
    u = std::clamp(u, 0.0, 1.0);
    // nearbyint rounds half to even under the default rounding mode.
    return static_cast<std::uint8_t>(1.0 + std::nearbyint(254.0 * u));
}

double dequantize_sample(std::uint8_t code, double amplitude, CarrierMode mode) {
    if (code == 0) return 0.0;
    const double u = (static_cast<double>(code) - 1.0) / 254.0;
    return mode == CarrierMode::ComplexQuadrature ? amplitude * (2.0 * u - 1.0) : amplitude * u;
}

std::vector<fs::path> pattern_paths(const fs::path& prefix, CarrierMode mode) {
    const std::string base = prefix.string();
    if (mode == CarrierMode::ComplexQuadrature) return {base + "_i.pgm", base + "_q.pgm"};
    return {base + ".pgm"};
}

namespace {

std::string pattern_comment(const PatternConfig& cfg, std::string_view channel) {
    return fmt::format(" psp height={} width={} ts={} f0={} amplitude={} mode={} channel={}", cfg.height,
                       cfg.width, cfg.sampling_period, format_number(cfg.carrier_frequency),
                       format_number(cfg.amplitude), to_string(cfg.mode), channel);
}

PatternConfig parse_pattern_comment(const std::vector<std::string>& comments) {
    for (const auto& c : comments) {
        auto body = trim(c);
        if (!body.starts_with("psp ")) continue;
        std::map<std::string, std::string> kv;
        for (auto field : split(body.substr(4), ' ')) {
            const auto eq = field.find('=');
            if (eq == std::string_view::npos) continue;
            kv[std::string(field.substr(0, eq))] = std::string(field.substr(eq + 1));
        }
        auto get = [&](const char* key) {
            const auto it = kv.find(key);
            if (it == kv.end()) throw Error(ErrorCode::ParseError, std::string("pattern header lacks ") + key);
            return it->second;
        };
        PatternConfig cfg;
        cfg.height = parse_index(get("height"));
        cfg.width = parse_index(get("width"));
        cfg.sampling_period = parse_index(get("ts"));
        cfg.carrier_frequency = parse_double(get("f0"));
        cfg.amplitude = parse_double(get("amplitude"));
        cfg.mode = parse_carrier_mode(get("mode"));
        return cfg;
    }
    throw Error(ErrorCode::ParseError, "PGM file carries no psp pattern header");
}

}  // namespace

std::vector<fs::path> save_pattern(const fs::path& prefix, const PatternImage& img, PgmFormat format) {
    const auto& cfg = img.config;
    const auto paths = pattern_paths(prefix, cfg.mode);
    for (std::size_t ch = 0; ch < paths.size(); ++ch) {
        GrayImage gray;
        gray.pixels = Raster<std::uint8_t>(cfg.height, cfg.width);
        const char* name = cfg.mode == CarrierMode::RealCosine ? "real" : (ch == 0 ? "i" : "q");
        gray.comments.push_back(pattern_comment(cfg, name));
        for (std::size_t t = 0; t < cfg.height; t += cfg.sampling_period) {
            for (std::size_t x = 0; x < cfg.width; ++x) {
                const Complex v = img.pixels(t, x);
                gray.pixels(t, x) = quantize_sample(ch == 0 ? v.real() : v.imag(), cfg.amplitude, cfg.mode);
            }
        }
        write_text(paths[ch], encode_pgm(gray, format));
    }
    return paths;
}

PatternImage load_pattern(const fs::path& prefix) {
    // Try complex first, then real.
    fs::path first = prefix.string() + "_i.pgm";
    if (!fs::exists(first)) first = prefix.string() + ".pgm";
    const GrayImage head = decode_pgm(read_text(first));
    const PatternConfig cfg = parse_pattern_comment(head.comments);
    cfg.validate();
    const auto paths = pattern_paths(prefix, cfg.mode);
    PatternImage img{cfg, Raster<Complex>(cfg.height, cfg.width)};
    for (std::size_t ch = 0; ch < paths.size(); ++ch) {
        const GrayImage gray = ch == 0 && paths[ch] == first ? head : decode_pgm(read_text(paths[ch]));
        if (!gray.pixels.same_shape(cfg.height, cfg.width)) {
            throw Error(ErrorCode::ParseError, paths[ch].string() + " does not match its header dimensions");
        }
        for (std::size_t t = 0; t < cfg.height; ++t) {
            for (std::size_t x = 0; x < cfg.width; ++x) {
                const double v = dequantize_sample(gray.pixels(t, x), cfg.amplitude, cfg.mode);
                if (ch == 0) {
                    img.pixels(t, x).real(v);
                } else {
                    img.pixels(t, x).imag(v);
                }
            }
        }
    }
    return img;
}

// ---- JSON -------------------------------------------------------------------

json to_json(const PatternConfig& cfg) {
    return json{{"height", cfg.height},
                {"width", cfg.width},
                {"ts", cfg.sampling_period},
                {"f0", cfg.carrier_frequency},
                {"amplitude", cfg.amplitude},
                {"mode", std::string(to_string(cfg.mode))}};
}

PatternConfig pattern_config_from_json(const json& j) {
    try {
        PatternConfig cfg;
        cfg.height = j.at("height").get<std::size_t>();
        cfg.width = j.at("width").get<std::size_t>();
        cfg.sampling_period = j.at("ts").get<std::size_t>();
        cfg.carrier_frequency = j.at("f0").get<double>();
        cfg.amplitude = j.value("amplitude", 1.0);
        cfg.mode = parse_carrier_mode(j.value("mode", std::string("complex")));
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("pattern config: ") + e.what());
    }
}

// ---- Signal CSV -------------------------------------------------------------

std::string encode_signal_csv(const SignalTable& table) {
    std::string out;
    if (table.has_column) out += "x,";
    out += "t,re,im";
    if (table.has_phase) out += ",mag,phase";
    out += "\n";
    for (const auto& r : table.rows) {
        if (table.has_column) out += std::to_string(r.x) + ",";
        out += std::to_string(r.t) + "," + format_number(r.value.real()) + "," + format_number(r.value.imag());
        if (table.has_phase) out += "," + format_number(r.magnitude) + "," + format_number(r.phase);
        out += "\n";
    }
    return out;
}

SignalTable decode_signal_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw Error(ErrorCode::ParseError, "signal CSV is empty");
    const Header h(lines[0]);
    const auto ct = h.require("t");
    const auto cre = h.require("re");
    const auto cim = h.require("im");
    const auto cx = h.find("x");
    const auto cmag = h.find("mag");
    const auto cphase = h.find("phase");
    SignalTable table;
    table.has_column = cx.has_value();
    table.has_phase = cmag.has_value() && cphase.has_value();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = checked_fields(lines[i], h, i + 1);
        SignalRow r;
        if (cx) r.x = parse_index(f[*cx]);
        r.t = parse_index(f[ct]);
        r.value = {parse_double(f[cre]), parse_double(f[cim])};
        if (table.has_phase) {
            r.magnitude = parse_double(f[*cmag]);
            r.phase = parse_double(f[*cphase]);
        }
        table.rows.push_back(r);
    }
    return table;
}

std::map<std::size_t, SampledSignal> sampled_signals(const SignalTable& table, std::size_t period,
                                                     CarrierMode mode) {
    if (period < 1) throw Error(ErrorCode::InvalidArgument, "T_s must be >= 1");
    std::map<std::size_t, SampledSignal> out;
    for (const auto& r : table.rows) {
        auto& s = out[r.x];
        s.sampling_period = period;
        s.mode = mode;
        const std::size_t expected = s.values.size() * period;
        if (r.t != expected) {
            throw Error(ErrorCode::ParseError, "column " + std::to_string(r.x) + ": sample at t=" +
                                                   std::to_string(r.t) + ", expected t=" +
                                                   std::to_string(expected) + " for T_s " +
                                                   std::to_string(period));
        }
        s.values.push_back(r.value);
    }
    for (auto& [x, s] : out) s.dense_length = s.values.size() * period;
    return out;
}

std::map<std::size_t, DenseSignal> dense_signals(const SignalTable& table, CarrierMode mode) {
    std::map<std::size_t, DenseSignal> out;
    for (const auto& r : table.rows) {
        auto& d = out[r.x];
        d.mode = mode;
        if (r.t != d.values.size()) {
            throw Error(ErrorCode::ParseError, "column " + std::to_string(r.x) +
                                                   ": dense rows must run t = 0, 1, 2, ...");
        }
        d.values.push_back(r.value);
    }
    return out;
}

SignalTable table_from_sampled(const std::map<std::size_t, SampledSignal>& columns, bool with_column) {
    SignalTable table;
    table.has_column = with_column;
    for (const auto& [x, s] : columns) {
        for (std::size_t n = 0; n < s.values.size(); ++n) {
            table.rows.push_back({x, n * s.sampling_period, s.values[n], 0.0, 0.0});
        }
    }
    return table;
}

SignalTable table_from_dense(const std::map<std::size_t, DenseSignal>& columns, bool with_column) {
    SignalTable table;
    table.has_column = with_column;
    for (const auto& [x, d] : columns) {
        for (std::size_t t = 0; t < d.values.size(); ++t) table.rows.push_back({x, t, d.values[t], 0.0, 0.0});
    }
    return table;
}

// ---- Correspondences ----------------------------------------------------------

std::string encode_correspondences(const CorrespondenceTable& table) {
    std::string out = table.has_projector ? "Xw,Yw,Zw,xc,yc,yp\n" : "Xw,Yw,Zw,xc,yc\n";
    for (const auto& c : table.records) {
        out += format_number(c.world.X) + "," + format_number(c.world.Y) + "," + format_number(c.world.Z) +
               "," + format_number(c.camera.x) + "," + format_number(c.camera.y);
        if (table.has_projector) out += "," + format_number(c.projector.y);
        out += "\n";
    }
    return out;
}

CorrespondenceTable decode_correspondences(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw Error(ErrorCode::ParseError, "correspondence CSV is empty");
    const Header h(lines[0]);
    const std::size_t cols[] = {h.require("Xw"), h.require("Yw"), h.require("Zw"), h.require("xc"),
                                h.require("yc")};
    const auto cyp = h.find("yp");
    CorrespondenceTable table;
    table.has_projector = cyp.has_value();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = checked_fields(lines[i], h, i + 1);
        geometry::Correspondence c;
        c.world = {parse_double(f[cols[0]]), parse_double(f[cols[1]]), parse_double(f[cols[2]])};
        c.camera = {parse_double(f[cols[3]]), parse_double(f[cols[4]])};
        if (cyp) c.projector = {parse_double(f[*cyp])};
        table.records.push_back(c);
    }
    return table;
}

// ---- Calibration --------------------------------------------------------------

json to_json(const Calibration& cal) {
    json j{{"theta_c", array_json(cal.camera.theta)}, {"residual_c", cal.residual_c}};
    if (cal.projector) j["theta_p"] = array_json(cal.projector->theta);
    if (cal.residual_p) j["residual_p"] = *cal.residual_p;
    return j;
}

Calibration calibration_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "calibration must be a JSON object");
    Calibration cal;
    cal.camera.theta = array_from_json<11>(j, "theta_c");
    cal.residual_c = j.value("residual_c", 0.0);
    if (j.contains("theta_p")) cal.projector = geometry::ProjectorProjection{array_from_json<7>(j, "theta_p")};
    if (j.contains("residual_p")) cal.residual_p = j.at("residual_p").get<double>();
    return cal;
}

// ---- PLY ----------------------------------------------------------------------

std::string encode_ply(const std::vector<CloudPoint>& cloud) {
    std::string out = fmt::format(
        "ply\nformat ascii 1.0\ncomment invalid points carry valid=0\nelement vertex {}\n"
        "property double x\nproperty double y\nproperty double z\nproperty uchar valid\nend_header\n",
        cloud.size());
    for (const auto& p : cloud) {
        out += format_number(p.point.X) + " " + format_number(p.point.Y) + " " + format_number(p.point.Z) +
               (p.valid ? " 1\n" : " 0\n");
    }
    return out;
}

std::vector<CloudPoint> decode_ply(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "ply") throw Error(ErrorCode::ParseError, "not a PLY file");
    std::size_t count = 0;
    std::size_t i = 1;
    bool have_count = false;
    for (; i < lines.size(); ++i) {
        if (lines[i] == "end_header") {
            ++i;
            break;
        }
        if (lines[i].starts_with("format") && lines[i] != "format ascii 1.0") {
            throw Error(ErrorCode::ParseError, "only ASCII PLY is supported");
        }
        if (lines[i].starts_with("element vertex ")) {
            count = parse_index(lines[i].substr(15));
            have_count = true;
        }
    }
    if (!have_count) throw Error(ErrorCode::ParseError, "PLY header has no vertex element");
    if (lines.size() - i != count) {
        throw Error(ErrorCode::ParseError, "PLY declares " + std::to_string(count) + " vertices but holds " +
                                               std::to_string(lines.size() - i));
    }
    std::vector<CloudPoint> cloud;
    cloud.reserve(count);
    for (; i < lines.size(); ++i) {
        const auto f = split(lines[i], ' ');
        if (f.size() != 4) throw Error(ErrorCode::ParseError, "PLY vertex must have 4 fields");
        cloud.push_back({{parse_double(f[0]), parse_double(f[1]), parse_double(f[2])}, parse_index(f[3]) != 0});
    }
    return cloud;
}

}  // namespace psp::io
