#pragma once

// Minimal self-contained SVG line plots for run artifacts.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ajscc/signal.hpp"

namespace ajscc {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool markers = false;
};

struct PlotPanel {
    std::string title;
    std::string x_label = "time (s)";
    std::string y_label;
    std::vector<PlotSeries> series;
};

// Time series of `sig`, reduced to at most ~2 * max_columns points by
// keeping the min and max of each column so narrow pulses stay visible.
PlotSeries series_from(const Signal& sig, std::string label, std::string color, std::size_t max_columns = 1200);

// Panels are stacked vertically and share the figure width.
void write_svg(const std::filesystem::path& path, const std::string& title, std::span<const PlotPanel> panels);

}  // namespace ajscc
