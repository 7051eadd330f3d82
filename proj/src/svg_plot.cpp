#include "ajscc/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ajscc {

namespace {

constexpr double kWidth = 960.0;
constexpr double kPanelHeight = 230.0;
constexpr double kTop = 40.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kGap = 60.0;

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Extent {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle(double pad) {
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
        if (hi == lo) lo -= 0.5, hi += 0.5;
        const double d = (hi - lo) * pad;
        lo -= d;
        hi += d;
    }
};

}  // namespace

PlotSeries series_from(const Signal& sig, std::string label, std::string color, std::size_t max_columns) {
    PlotSeries s{std::move(label), {}, {}, std::move(color), false};
    const std::size_t n = sig.size();
    if (n <= 2 * max_columns) {
        for (std::size_t i = 0; i < n; ++i) {
            s.x.push_back(sig.time_of(i));
            s.y.push_back(sig[i]);
        }
        return s;
    }
    for (std::size_t c = 0; c < max_columns; ++c) {
        const std::size_t a = c * n / max_columns;
        const std::size_t b = (c + 1) * n / max_columns;
        const auto [mn, mx] = std::minmax_element(sig.samples().begin() + static_cast<std::ptrdiff_t>(a),
                                                  sig.samples().begin() + static_cast<std::ptrdiff_t>(b));
        const auto imn = static_cast<std::size_t>(mn - sig.samples().begin());
        const auto imx = static_cast<std::size_t>(mx - sig.samples().begin());
        for (const std::size_t i : {std::min(imn, imx), std::max(imn, imx)}) {
            s.x.push_back(sig.time_of(i));
            s.y.push_back(sig[i]);
        }
    }
    return s;
}

void write_svg(const std::filesystem::path& path, const std::string& title, std::span<const PlotPanel> panels) {
    const double height = kTop + static_cast<double>(panels.size()) * (kPanelHeight + kGap);
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) + "\" height=\"" +
           fmt("%.0f", height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">" +
           escape(title) + "</text>\n";

    const double plot_w = kWidth - kLeft - kRight;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double top = kTop + static_cast<double>(p) * (kPanelHeight + kGap) + 20.0;
        const double plot_h = kPanelHeight - 20.0;
        Extent xs, ys;
        for (const auto& s : panel.series) {
            for (double v : s.x) xs.add(v);
            for (double v : s.y) ys.add(v);
        }
        xs.settle(0.0);
        ys.settle(0.05);
        const auto px = [&](double x) { return kLeft + (x - xs.lo) / (xs.hi - xs.lo) * plot_w; };
        const auto py = [&](double y) { return top + plot_h - (y - ys.lo) / (ys.hi - ys.lo) * plot_h; };

        svg += "<text x=\"" + fmt("%.1f", kLeft) + "\" y=\"" + fmt("%.1f", top - 6) + "\" font-size=\"13\">" +
               escape(panel.title) + "</text>\n";
        svg += "<rect x=\"" + fmt("%.1f", kLeft) + "\" y=\"" + fmt("%.1f", top) + "\" width=\"" + fmt("%.1f", plot_w) +
               "\" height=\"" + fmt("%.1f", plot_h) + "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double xv = xs.lo + (xs.hi - xs.lo) * t / 4.0;
            const double yv = ys.lo + (ys.hi - ys.lo) * t / 4.0;
            svg += "<text x=\"" + fmt("%.1f", px(xv)) + "\" y=\"" + fmt("%.1f", top + plot_h + 14) +
                   "\" text-anchor=\"middle\">" + fmt("%.4g", xv) + "</text>\n";
            svg += "<text x=\"" + fmt("%.1f", kLeft - 6) + "\" y=\"" + fmt("%.1f", py(yv) + 4) +
                   "\" text-anchor=\"end\">" + fmt("%.3g", yv) + "</text>\n";
        }
        svg += "<text x=\"" + fmt("%.1f", kLeft + plot_w / 2) + "\" y=\"" + fmt("%.1f", top + plot_h + 30) +
               "\" text-anchor=\"middle\">" + escape(panel.x_label) + "</text>\n";
        svg += "<text transform=\"translate(18," + fmt("%.1f", top + plot_h / 2) +
               ") rotate(-90)\" text-anchor=\"middle\">" + escape(panel.y_label) + "</text>\n";

        for (std::size_t si = 0; si < panel.series.size(); ++si) {
            const auto& s = panel.series[si];
            svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1\" points=\"";
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                svg += fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.y[i])) + " ";
            }
            svg += "\"/>\n";
            if (s.markers) {
                for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                    svg += "<circle cx=\"" + fmt("%.2f", px(s.x[i])) + "\" cy=\"" + fmt("%.2f", py(s.y[i])) +
                           "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
                }
            }
            const double ly = top + 14 + 14.0 * static_cast<double>(si);
            svg += "<text x=\"" + fmt("%.1f", kLeft + plot_w - 8) + "\" y=\"" + fmt("%.1f", ly) +
                   "\" text-anchor=\"end\" fill=\"" + s.color + "\">" + escape(s.label) + "</text>\n";
        }
    }
    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << svg;
}

}  // namespace ajscc
