#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tandem/sweep.hpp"

namespace tandem {

class EmptyInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.3g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
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

} // namespace detail

// Success rate (%) against mean time per instance (s), one labeled point per
// configuration row.
inline std::string svg_scatter(const std::vector<ReportRow>& rows,
                               const std::string& title = "") {
    if (rows.empty()) throw EmptyInputError("plot: no rows");

    const double width = 720, height = 480;
    const double left = 80, right = 40, top = 48, bottom = 64;
    const double inset = 10;

    double max_x = 0.0;
    for (const auto& r : rows) max_x = std::max(max_x, r.mean_time_s);
    if (max_x <= 0.0) max_x = 1.0;
    max_x *= 1.05;

    auto sx = [&](double x) {
        return left + inset + (x / max_x) * (width - left - right - 2 * inset);
    };
    auto sy = [&](double y) {
        return height - bottom - inset - (y / 100.0) * (height - top - bottom - 2 * inset);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width, "%.0f") +
           "\" height=\"" + detail::fmt(height, "%.0f") + "\" viewBox=\"0 0 " +
           detail::fmt(width, "%.0f") + " " + detail::fmt(height, "%.0f") + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        svg += "<text x=\"" + detail::fmt(width / 2, "%.0f") +
               "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
               detail::xml_escape(title) + "</text>\n";

    // axes
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(height - bottom) +
           "\" x2=\"" + detail::fmt(width - right) + "\" y2=\"" + detail::fmt(height - bottom) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top) + "\" x2=\"" +
           detail::fmt(left) + "\" y2=\"" + detail::fmt(height - bottom) + "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        double xv = max_x * i / 5.0;
        double px = sx(xv);
        svg += "<line x1=\"" + detail::fmt(px) + "\" y1=\"" + detail::fmt(height - bottom) +
               "\" x2=\"" + detail::fmt(px) + "\" y2=\"" + detail::fmt(height - bottom + 5) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::fmt(px) + "\" y=\"" + detail::fmt(height - bottom + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               detail::fmt(xv) + "</text>\n";

        double yv = 100.0 * i / 5.0;
        double py = sy(yv);
        svg += "<line x1=\"" + detail::fmt(left - 5) + "\" y1=\"" + detail::fmt(py) + "\" x2=\"" +
               detail::fmt(left) + "\" y2=\"" + detail::fmt(py) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::fmt(left - 9) + "\" y=\"" + detail::fmt(py + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               detail::fmt(yv, "%.0f") + "</text>\n";
    }

    svg += "<text x=\"" + detail::fmt((left + width - right) / 2) + "\" y=\"" +
           detail::fmt(height - 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">average time "
           "per instance (s)</text>\n";
    svg += "<text x=\"20\" y=\"" + detail::fmt((top + height - bottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 "
           "20 " + detail::fmt((top + height - bottom) / 2) + ")\">success rate (%)</text>\n";

    for (const auto& r : rows) {
        double px = sx(r.mean_time_s), py = sy(r.success_rate);
        svg += "<circle cx=\"" + detail::fmt(px) + "\" cy=\"" + detail::fmt(py) +
               "\" r=\"4.5\" fill=\"#31708f\"/>\n";
        svg += "<text x=\"" + detail::fmt(px + 7) + "\" y=\"" + detail::fmt(py - 7) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::xml_escape(r.label) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

inline void write_scatter_svg(const std::vector<ReportRow>& rows,
                              const std::filesystem::path& out,
                              const std::string& title = "") {
    auto svg = svg_scatter(rows, title);
    std::ofstream file(out);
    if (!file) throw std::runtime_error("cannot write " + out.string());
    file << svg;
}

} // namespace tandem
