#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "latentscope/common.hpp"

namespace latentscope::svg {

inline std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<double> y;  // x is the index
};

namespace detail {

inline constexpr int kWidth = 760;
inline constexpr int kHeight = 420;
inline constexpr int kMarginLeft = 70;
inline constexpr int kMarginRight = 20;
inline constexpr int kMarginTop = 40;
inline constexpr int kMarginBottom = 50;

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
    return colors[i % 6];
}

struct Scale {
    double lo = 0.0, hi = 1.0;
    double px0 = 0.0, px1 = 1.0;
    double map(double v) const {
        if (hi == lo) return (px0 + px1) / 2.0;
        return px0 + (v - lo) / (hi - lo) * (px1 - px0);
    }
};

inline void open_svg(std::ofstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
}

inline void axes(std::ofstream& out, const Scale& x, const Scale& y,
                 const std::string& xlabel, const std::string& ylabel) {
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom
        << "\" x2=\"" << kWidth - kMarginRight << "\" y2=\"" << kHeight - kMarginBottom
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << kHeight - kMarginBottom << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x.lo + (x.hi - x.lo) * i / 4.0;
        const double fy = y.lo + (y.hi - y.lo) * i / 4.0;
        out << "<text x=\"" << fmt(x.map(fx)) << "\" y=\"" << kHeight - kMarginBottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt(fx) << "</text>\n";
        out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(y.map(fy) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt(fy) << "</text>\n";
    }
    out << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\""
        << kHeight - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\">" << xlabel << "</text>\n";
    out << "<text x=\"16\" y=\"" << (kMarginTop + kHeight - kMarginBottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << (kMarginTop + kHeight - kMarginBottom) / 2
        << ")\">" << ylabel << "</text>\n";
}

}  // namespace detail

// One polyline per series over the sample index.
inline void write_line_chart(const std::string& path, const std::vector<Series>& series,
                             const std::string& title, const std::string& xlabel,
                             const std::string& ylabel) {
    using namespace detail;
    require_config(!series.empty(), "line chart needs at least one series");
    double lo = 0.0, hi = -1e300;
    std::size_t count = 0;
    for (const auto& s : series) {
        count = std::max(count, s.y.size());
        for (double v : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi < lo) hi = lo + 1.0;
    if (hi == lo) hi = lo + 1.0;
    Scale sx{0.0, static_cast<double>(count > 1 ? count - 1 : 1),
             static_cast<double>(kMarginLeft), static_cast<double>(kWidth - kMarginRight)};
    Scale sy{lo, hi, static_cast<double>(kHeight - kMarginBottom),
             static_cast<double>(kMarginTop)};
    std::ofstream out(path, std::ios::binary);
    require_config(out.good(), "cannot open for writing: " + path);
    open_svg(out, title);
    axes(out, sx, sy, xlabel, ylabel);
    for (std::size_t si = 0; si < series.size(); ++si) {
        out << "<polyline fill=\"none\" stroke=\"" << palette(si)
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[si].y.size(); ++i) {
            if (i > 0) out << ' ';
            out << fmt(sx.map(static_cast<double>(i))) << ',' << fmt(sy.map(series[si].y[i]));
        }
        out << "\"/>\n";
        out << "<text x=\"" << kWidth - kMarginRight - 8 << "\" y=\""
            << kMarginTop + 16 * static_cast<int>(si) << "\" text-anchor=\"end\" "
            << "font-family=\"sans-serif\" font-size=\"12\" fill=\"" << palette(si) << "\">"
            << series[si].label << "</text>\n";
    }
    out << "</svg>\n";
    require_config(out.good(), "write failed: " + path);
}

// One bar per index; values in [0, 1] get a fixed scale when requested.
inline void write_bar_chart(const std::string& path, const std::vector<double>& values,
                            const std::string& title, const std::string& xlabel,
                            const std::string& ylabel, bool unit_scale = false) {
    using namespace detail;
    require_config(!values.empty(), "bar chart needs values");
    double hi = unit_scale ? 1.0 : *std::max_element(values.begin(), values.end());
    if (hi <= 0.0) hi = 1.0;
    Scale sy{0.0, hi, static_cast<double>(kHeight - kMarginBottom),
             static_cast<double>(kMarginTop)};
    const double span = static_cast<double>(kWidth - kMarginLeft - kMarginRight);
    const double slot = span / static_cast<double>(values.size());
    std::ofstream out(path, std::ios::binary);
    require_config(out.good(), "cannot open for writing: " + path);
    open_svg(out, title);
    Scale sx{0.0, static_cast<double>(values.size()),
             static_cast<double>(kMarginLeft), static_cast<double>(kWidth - kMarginRight)};
    axes(out, sx, sy, xlabel, ylabel);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = kMarginLeft + slot * static_cast<double>(i) + slot * 0.1;
        const double y = sy.map(values[i]);
        const double h = static_cast<double>(kHeight - kMarginBottom) - y;
        out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
            << fmt(slot * 0.8) << "\" height=\"" << fmt(std::max(h, 0.0))
            << "\" fill=\"#1f77b4\"/>\n";
    }
    out << "</svg>\n";
    require_config(out.good(), "write failed: " + path);
}

// Diverging blue-white-red map over [-1, 1]; +1 lands exactly on the extreme.
inline std::string correlation_color(double v) {
    v = std::clamp(v, -1.0, 1.0);
    const int neg[3] = {5, 48, 97};
    const int mid[3] = {247, 247, 247};
    const int pos[3] = {103, 0, 31};
    int rgb[3];
    for (int c = 0; c < 3; ++c) {
        if (v >= 0.0)
            rgb[c] = static_cast<int>(std::lround(mid[c] + (pos[c] - mid[c]) * v));
        else
            rgb[c] = static_cast<int>(std::lround(mid[c] + (neg[c] - mid[c]) * -v));
    }
    return "rgb(" + std::to_string(rgb[0]) + "," + std::to_string(rgb[1]) + "," +
           std::to_string(rgb[2]) + ")";
}

inline void write_heatmap(const std::string& path,
                          const std::vector<std::vector<double>>& matrix,
                          const std::string& title) {
    using namespace detail;
    require_config(!matrix.empty(), "heatmap needs a matrix");
    const std::size_t dims = matrix.size();
    const double cell = std::min(
        static_cast<double>(kWidth - kMarginLeft - kMarginRight) / static_cast<double>(dims),
        static_cast<double>(kHeight - kMarginTop - kMarginBottom) / static_cast<double>(dims));
    std::ofstream out(path, std::ios::binary);
    require_config(out.good(), "cannot open for writing: " + path);
    open_svg(out, title);
    for (std::size_t r = 0; r < dims; ++r) {
        require_config(matrix[r].size() == dims, "heatmap needs a square matrix");
        for (std::size_t c = 0; c < dims; ++c) {
            const double x = kMarginLeft + cell * static_cast<double>(c);
            const double y = kMarginTop + cell * static_cast<double>(r);
            out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
                << fmt(cell) << "\" height=\"" << fmt(cell) << "\" fill=\""
                << correlation_color(matrix[r][c]) << "\"/>\n";
        }
    }
    out << "</svg>\n";
    require_config(out.good(), "write failed: " + path);
}

struct DensityCurve {
    std::vector<double> x, y;
    bool dashed = false;
};

// Histogram reference plus overlaid density curves (overall fit and the
// individual components).
inline void write_density_overlay(const std::string& path,
                                  const std::vector<double>& bin_edges,
                                  const std::vector<double>& bin_heights,
                                  const std::vector<DensityCurve>& curves,
                                  const std::string& title) {
    using namespace detail;
    require_config(bin_edges.size() == bin_heights.size() + 1, "histogram shape mismatch");
    double xlo = bin_edges.front(), xhi = bin_edges.back();
    double yhi = 0.0;
    for (double h : bin_heights) yhi = std::max(yhi, h);
    for (const auto& c : curves) {
        for (double v : c.x) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : c.y) yhi = std::max(yhi, v);
    }
    if (yhi <= 0.0) yhi = 1.0;
    Scale sx{xlo, xhi, static_cast<double>(kMarginLeft),
             static_cast<double>(kWidth - kMarginRight)};
    Scale sy{0.0, yhi * 1.05, static_cast<double>(kHeight - kMarginBottom),
             static_cast<double>(kMarginTop)};
    std::ofstream out(path, std::ios::binary);
    require_config(out.good(), "cannot open for writing: " + path);
    open_svg(out, title);
    axes(out, sx, sy, "value", "density");
    for (std::size_t i = 0; i < bin_heights.size(); ++i) {
        const double x0 = sx.map(bin_edges[i]);
        const double x1 = sx.map(bin_edges[i + 1]);
        const double y = sy.map(bin_heights[i]);
        out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y) << "\" width=\""
            << fmt(std::max(x1 - x0, 0.1)) << "\" height=\""
            << fmt(static_cast<double>(kHeight - kMarginBottom) - y)
            << "\" fill=\"#c6dbef\" stroke=\"#6baed6\" stroke-width=\"0.5\"/>\n";
    }
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        out << "<polyline fill=\"none\" stroke=\"" << (ci == 0 ? "#ff7f0e" : "#7f7f7f")
            << "\" stroke-width=\"" << (ci == 0 ? "2" : "1") << "\"";
        if (curves[ci].dashed) out << " stroke-dasharray=\"4 3\"";
        out << " points=\"";
        for (std::size_t i = 0; i < curves[ci].x.size(); ++i) {
            if (i > 0) out << ' ';
            out << fmt(sx.map(curves[ci].x[i])) << ',' << fmt(sy.map(curves[ci].y[i]));
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
    require_config(out.good(), "write failed: " + path);
}

}  // namespace latentscope::svg
