#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#ifndef KNNRGG_VERSION
#define KNNRGG_VERSION "unknown"
#endif

namespace knnrgg {

inline constexpr std::string_view kVersion = KNNRGG_VERSION;

/// Shortest round-trippable text: %.17g, with "inf", "-inf" and "nan".
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_real(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("parse_real: trailing characters in '" + s + "'");
    return v;
}

/// JSON has no infinity; such values are written as the strings "inf"/"-inf".
inline nlohmann::json real_json(double v) {
    if (std::isfinite(v)) return v;
    return format_real(v);
}

inline double real_from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_real(j.get<std::string>());
    return j.get<double>();
}

/// Provenance written into every output file.
struct RunHeader {
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();

    nlohmann::json to_json() const {
        return {{"version", std::string(kVersion)}, {"command", command}, {"seed", seed}, {"params", params}};
    }
};

/// Rectangular table of already formatted cells.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// Comment lines (version, command, seed, params) then a header row.
inline std::string to_csv(const Table& table, const RunHeader& header) {
    std::ostringstream out;
    out << "# version=" << kVersion << "\n";
    out << "# command=" << header.command << "\n";
    out << "# seed=" << header.seed << "\n";
    out << "# params=" << header.params.dump() << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw std::invalid_argument("to_csv: ragged row");
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
    return out.str();
}

inline Table parse_csv(std::string_view text) {
    Table table;
    bool have_header = false;
    std::istringstream in{std::string(text)};
    std::string line;
    const auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            table.columns = split(line);
            have_header = true;
        } else {
            table.rows.push_back(split(line));
        }
    }
    return table;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// SVG plots.

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> low;   ///< error bar ends; empty for no bars
    std::vector<double> high;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<PlotSeries> series;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace detail

/// Standalone SVG with one marker per point, vertical CI bars and a legend.
/// Non-finite values (and non-positive ones on a log axis) are skipped; with
/// nothing to draw the axes span [0, 1].
inline std::string render_svg(const PlotSpec& spec, const RunHeader& header) {
    const double width = 640;
    const double height = 420;
    const double left = 70;
    const double right = 150;
    const double top = 40;
    const double bottom = 50;
    const auto usable = [&](double v) { return std::isfinite(v) && (!spec.log_y || v > 0.0); };
    const auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };

    double x0 = std::numeric_limits<double>::infinity();
    double x1 = -x0;
    double y0 = x0;
    double y1 = -x0;
    for (const auto& s : spec.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !usable(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
            if (i < s.low.size() && usable(s.low[i])) y0 = std::min(y0, ty(s.low[i]));
            if (i < s.high.size() && usable(s.high[i])) y1 = std::max(y1, ty(s.high[i]));
        }
    }
    if (!(x0 <= x1)) { x0 = 0.0; x1 = 1.0; }
    if (!(y0 <= y1)) { y0 = 0.0; y1 = 1.0; }
    if (x0 == x1) { x0 -= 0.5; x1 += 0.5; }
    if (y0 == y1) { y0 -= 0.5; y1 += 0.5; }
    const double pad_x = 0.05 * (x1 - x0);
    const double pad_y = 0.05 * (y1 - y0);
    x0 -= pad_x; x1 += pad_x; y0 -= pad_y; y1 += pad_y;

    const double pw = width - left - right;
    const double ph = height - top - bottom;
    const auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    const auto sy = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };
    using detail::svg_num;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<metadata>" << detail::xml_escape(header.to_json().dump()) << "</metadata>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << svg_num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << detail::xml_escape(spec.title) << "</text>\n";
    out << "<rect x=\"" << svg_num(left) << "\" y=\"" << svg_num(top) << "\" width=\"" << svg_num(pw)
        << "\" height=\"" << svg_num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0;
        const double yv = y0 + (y1 - y0) * t / 4.0;
        const double px = left + pw * t / 4.0;
        const double py = top + ph - ph * t / 4.0;
        out << "<line x1=\"" << svg_num(px) << "\" y1=\"" << svg_num(top + ph) << "\" x2=\"" << svg_num(px)
            << "\" y2=\"" << svg_num(top + ph + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << svg_num(px) << "\" y=\"" << svg_num(top + ph + 18)
            << "\" text-anchor=\"middle\">" << detail::tick_label(xv) << "</text>\n";
        out << "<line x1=\"" << svg_num(left - 5) << "\" y1=\"" << svg_num(py) << "\" x2=\"" << svg_num(left)
            << "\" y2=\"" << svg_num(py) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << svg_num(left - 8) << "\" y=\"" << svg_num(py + 4) << "\" text-anchor=\"end\">"
            << detail::tick_label(spec.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
    }
    out << "<text x=\"" << svg_num(left + pw / 2) << "\" y=\"" << svg_num(height - 10)
        << "\" text-anchor=\"middle\">" << detail::xml_escape(spec.x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << svg_num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << svg_num(top + ph / 2) << ")\">" << detail::xml_escape(spec.y_label) << "</text>\n";

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* colour = detail::kPalette[si % std::size(detail::kPalette)];
        out << "<g class=\"series\" fill=\"" << colour << "\" stroke=\"" << colour << "\">\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !usable(s.y[i])) continue;
            const double px = sx(s.x[i]);
            if (i < s.low.size() && i < s.high.size()) {
                const double lo = usable(s.low[i]) ? sy(s.low[i]) : top + ph;
                const double hi = usable(s.high[i]) ? sy(s.high[i]) : top;
                out << "<line class=\"ci\" x1=\"" << svg_num(px) << "\" y1=\"" << svg_num(lo) << "\" x2=\""
                    << svg_num(px) << "\" y2=\"" << svg_num(hi) << "\"/>\n";
            }
            out << "<circle class=\"point\" cx=\"" << svg_num(px) << "\" cy=\"" << svg_num(sy(s.y[i]))
                << "\" r=\"3.5\"/>\n";
        }
        out << "</g>\n";
        const double ly = top + 14 + 18 * static_cast<double>(si);
        out << "<circle cx=\"" << svg_num(width - right + 16) << "\" cy=\"" << svg_num(ly - 4)
            << "\" r=\"4\" fill=\"" << colour << "\"/>\n";
        out << "<text x=\"" << svg_num(width - right + 26) << "\" y=\"" << svg_num(ly) << "\">"
            << detail::xml_escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace knnrgg
