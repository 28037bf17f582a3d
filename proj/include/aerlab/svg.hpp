#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aerlab {

// Minimal static line-chart SVG writer: one polyline per series, axes with
// ticks, a legend, and optional horizontal reference line / band (used for
// the target-entropy overlay). `log2_x` switches the x axis to log2 scale
// with ticks at the given x values (pass@k curves).
struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
    std::optional<double> reference_line;
    std::optional<std::pair<double, double>> reference_band;
    bool log2_x = false;
    std::vector<double> x_ticks; // explicit ticks; auto when empty
    int width = 880;
    int height = 500;
};

void write_svg(std::ostream& out, const ChartSpec& spec);

} // namespace aerlab
