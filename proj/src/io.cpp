#include "structsim/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "structsim/errors.hpp"

namespace structsim {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

void CsvTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_double(v));
    rows.push_back(std::move(row));
}

std::string CsvTable::text() const {
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw Error("write failed: " + path.string());
}

namespace {

constexpr double kWidth = 720.0, kHeight = 480.0;
constexpr double kLeft = 80.0, kRight = 160.0, kTop = 40.0, kBottom = 60.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double map(double v) const { return log ? std::log10(v) : v; }
    double frac(double v) const { return (map(v) - lo) / (hi - lo); }
};

Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log) {
    Axis ax;
    ax.log = log;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* d : data)
        for (double v : *d) {
            if (!std::isfinite(v) || (log && v <= 0.0)) continue;
            double m = ax.map(v);
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (log) {
        lo = std::floor(lo);
        hi = std::ceil(hi);
    }
    if (hi - lo < 1e-12) {
        double pad = std::max(1.0, std::abs(lo)) * 0.5;
        lo -= pad;
        hi += pad;
    }
    ax.lo = lo;
    ax.hi = hi;
    return ax;
}

std::vector<double> ticks(const Axis& ax) {
    std::vector<double> t;
    if (ax.log) {
        double step = std::max(1.0, std::ceil((ax.hi - ax.lo) / 8.0));
        for (double e = ax.lo; e <= ax.hi + 1e-9; e += step) t.push_back(e);
        return t;
    }
    double raw = (ax.hi - ax.lo) / 6.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    for (double v = std::ceil(ax.lo / step) * step; v <= ax.hi + 1e-9 * step; v += step) t.push_back(v);
    return t;
}

}  // namespace

std::string render_svg(const SvgPlot& plot) {
    std::vector<const std::vector<double>*> xs, ys;
    for (const auto& s : plot.series) {
        xs.push_back(&s.x);
        ys.push_back(&s.y);
    }
    Axis ax = make_axis(xs, plot.log_x), ay = make_axis(ys, plot.log_y);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(plot.title)
       << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : ticks(ax)) {
        double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw;
        os << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
           << (ax.log ? "1e" + num(t) : num(t)) << "</text>\n";
    }
    for (double t : ticks(ay)) {
        double y = kTop + (1.0 - (t - ay.lo) / (ay.hi - ay.lo)) * ph;
        os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
           << (ay.log ? "1e" + num(t) : num(t)) << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
       << escape(plot.x_label) << (plot.log_x ? " (log10)" : "") << "</text>\n";
    os << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(plot.y_label) << (plot.log_y ? " (log10)" : "") << "</text>\n";

    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const char* color = kColors[si % std::size(kColors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        std::size_t n = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < n; ++i) {
            double x = s.x[i], y = s.y[i];
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if ((plot.log_x && x <= 0.0) || (plot.log_y && y <= 0.0)) continue;
            os << num(px(x)) << ',' << num(py(y)) << ' ';
        }
        os << "\"/>\n";
        double ly = kTop + 16.0 + 18.0 * static_cast<double>(si);
        os << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kWidth - kRight + 30
           << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kWidth - kRight + 35 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return sha256_hex(ss.str());
}

namespace {

nlohmann::ordered_json grid_json(const Grid& g) {
    return {{"delta", g.delta},     {"a_max_h", g.a_max_h},     {"a_max_m", g.a_max_m},
            {"tau_max_h", g.tau_max_h}, {"tau_max_m", g.tau_max_m}, {"eta_max", g.eta_max}};
}

}  // namespace

std::string RunManifest::input_digest() const {
    return sha256_hex(command_line + '\n' + config_text + '\n' + grid_json(grid).dump());
}

std::string RunManifest::json() const {
    nlohmann::ordered_json j;
    j["tool"] = "structsim";
    j["tool_version"] = tool_version;
    j["command_line"] = command_line;
    j["preset"] = preset;
    j["config"] = config_text;
    j["grid"] = grid_json(grid);
    j["input_digest"] = input_digest();
    j["wall_time_s"] = wall_time_s;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}});
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    write_text(path, manifest.json());
}

}  // namespace structsim
