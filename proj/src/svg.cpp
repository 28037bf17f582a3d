#include "aerlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "aerlab/errors.hpp"

namespace aerlab {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// Round a span to a pleasant tick step (1/2/5 times a power of ten).
double nice_step(double span, int target_ticks) {
    const double raw = span / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    double step = 10.0;
    if (norm <= 1.0) {
        step = 1.0;
    } else if (norm <= 2.0) {
        step = 2.0;
    } else if (norm <= 5.0) {
        step = 5.0;
    }
    return step * mag;
}

} // namespace

void write_svg(std::ostream& out, const ChartSpec& spec) {
    if (spec.series.empty()) {
        throw contract_error("write_svg: no series");
    }

    const double margin_left = 70.0;
    const double margin_right = 170.0;
    const double margin_top = 48.0;
    const double margin_bottom = 56.0;
    const double plot_w = spec.width - margin_left - margin_right;
    const double plot_h = spec.height - margin_top - margin_bottom;

    auto x_value = [&](double x) { return spec.log2_x ? std::log2(x) : x; };

    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const ChartSeries& s : spec.series) {
        if (s.x.size() != s.y.size() || s.x.empty()) {
            throw contract_error("write_svg: series '" + s.label + "' is empty or ragged");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, x_value(s.x[i]));
            xmax = std::max(xmax, x_value(s.x[i]));
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (spec.reference_line) {
        ymin = std::min(ymin, *spec.reference_line);
        ymax = std::max(ymax, *spec.reference_line);
    }
    if (spec.reference_band) {
        ymin = std::min(ymin, spec.reference_band->first);
        ymax = std::max(ymax, spec.reference_band->second);
    }
    if (xmax == xmin) {
        xmax = xmin + 1.0;
    }
    if (ymax == ymin) {
        ymax = ymin + 1.0;
    }
    const double ypad = 0.06 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) {
        return margin_left + (x_value(x) - xmin) / (xmax - xmin) * plot_w;
    };
    auto py = [&](double y) {
        return margin_top + (ymax - y) / (ymax - ymin) * plot_h;
    };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
        << spec.height << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << spec.width / 2.0 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << spec.title << "</text>\n";

    if (spec.reference_band) {
        const double y0 = py(spec.reference_band->second);
        const double y1 = py(spec.reference_band->first);
        out << "<rect x=\"" << fmt(margin_left) << "\" y=\"" << fmt(y0) << "\" width=\""
            << fmt(plot_w) << "\" height=\"" << fmt(y1 - y0)
            << "\" fill=\"#2ca02c\" fill-opacity=\"0.12\"/>\n";
    }

    // axes
    out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(margin_top + plot_h)
        << "\" x2=\"" << fmt(margin_left + plot_w) << "\" y2=\"" << fmt(margin_top + plot_h)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(margin_top) << "\" x2=\""
        << fmt(margin_left) << "\" y2=\"" << fmt(margin_top + plot_h)
        << "\" stroke=\"black\"/>\n";

    // x ticks
    std::vector<double> xticks = spec.x_ticks;
    if (xticks.empty()) {
        const double step = nice_step(xmax - xmin, 8);
        for (double v = std::ceil(xmin / step) * step; v <= xmax + 1e-9; v += step) {
            xticks.push_back(spec.log2_x ? std::pow(2.0, v) : v);
        }
    }
    for (double tick : xticks) {
        const double x = px(tick);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(margin_top + plot_h) << "\" x2=\""
            << fmt(x) << "\" y2=\"" << fmt(margin_top + plot_h + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(margin_top + plot_h + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt(tick) << "</text>\n";
    }
    out << "<text x=\"" << fmt(margin_left + plot_w / 2) << "\" y=\""
        << fmt(margin_top + plot_h + 42)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << spec.x_label << "</text>\n";

    // y ticks
    const double ystep = nice_step(ymax - ymin, 6);
    for (double v = std::ceil(ymin / ystep) * ystep; v <= ymax + 1e-9; v += ystep) {
        const double y = py(v);
        out << "<line x1=\"" << fmt(margin_left - 5) << "\" y1=\"" << fmt(y) << "\" x2=\""
            << fmt(margin_left) << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(y) << "\" x2=\""
            << fmt(margin_left + plot_w) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << fmt(margin_left - 9) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
            << "</text>\n";
    }
    out << "<text x=\"18\" y=\"" << fmt(margin_top + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << fmt(margin_top + plot_h / 2) << ")\">"
        << spec.y_label << "</text>\n";

    if (spec.reference_line) {
        const double y = py(*spec.reference_line);
        out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(y) << "\" x2=\""
            << fmt(margin_left + plot_w) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#2ca02c\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << fmt(margin_left + plot_w - 4) << "\" y=\"" << fmt(y - 5)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
            << "fill=\"#2ca02c\">target</text>\n";
    }

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const ChartSeries& s = spec.series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
        }
        out << "\"/>\n";
        // legend entry
        const double ly = margin_top + 16.0 * static_cast<double>(si);
        out << "<line x1=\"" << fmt(margin_left + plot_w + 12) << "\" y1=\"" << fmt(ly)
            << "\" x2=\"" << fmt(margin_left + plot_w + 34) << "\" y2=\"" << fmt(ly)
            << "\" stroke=\"" << color << "\" stroke-width=\"2.5\"/>\n";
        out << "<text x=\"" << fmt(margin_left + plot_w + 40) << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
    }

    out << "</svg>\n";
}

} // namespace aerlab
