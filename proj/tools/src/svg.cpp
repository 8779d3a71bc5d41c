#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace interlock::svg {

namespace {

const char* kPalette[] = {"#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed"};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_chart(const std::string& title, const std::vector<Series>& series,
                         const std::string& x_label, const std::string& y_label, int width,
                         int height) {
    const double ml = 56, mr = 12, mt = 26, mb = 34;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!(xmin <= xmax)) {
        xmin = 0;
        xmax = 1;
    }
    if (!(ymin <= ymax)) {
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) {
        ymax += ymin == 0.0 ? 1.0 : std::abs(ymin) * 0.1;
        ymin -= ymin == 0.0 ? 1.0 : std::abs(ymin) * 0.1;
    }

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out << "<g>\n";
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"#ffffff\" stroke=\"#94a3b8\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"16\" font-size=\"13\" font-family=\"sans-serif\" "
           "fill=\"#0f172a\">"
        << escape(title) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.x.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[si % 5]
            << "\" stroke-width=\"1.3\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        out << "\"/>\n";
        if (!s.label.empty()) {
            out << "<text x=\"" << ml + 8 + 90.0 * static_cast<double>(si) << "\" y=\""
                << mt + 14 << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\""
                << kPalette[si % 5] << "\">" << escape(s.label) << "</text>\n";
        }
    }

    auto tick_text = [&](double x, double y, const std::string& t, const char* anchor) {
        out << "<text x=\"" << x << "\" y=\"" << y
            << "\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#475569\" text-anchor=\""
            << anchor << "\">" << escape(t) << "</text>\n";
    };
    tick_text(ml, mt + ph + 14, num(xmin), "middle");
    tick_text(ml + pw, mt + ph + 14, num(xmax), "middle");
    tick_text(ml - 4, mt + ph + 3, num(ymin), "end");
    tick_text(ml - 4, mt + 9, num(ymax), "end");
    tick_text(ml + pw / 2, mt + ph + 28, x_label, "middle");
    out << "<text x=\"12\" y=\"" << mt + ph / 2
        << "\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#475569\" "
           "transform=\"rotate(-90 12 "
        << mt + ph / 2 << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
    out << "</g>\n";
    return out.str();
}

std::string render_panel(const std::vector<std::string>& charts, int columns, int chart_width,
                         int chart_height) {
    const int cols = std::max(1, columns);
    const int rows = static_cast<int>((charts.size() + static_cast<std::size_t>(cols) - 1) /
                                      static_cast<std::size_t>(cols));
    const int w = cols * chart_width, h = rows * chart_height;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#f8fafc\"/>\n";
    for (std::size_t i = 0; i < charts.size(); ++i) {
        const int r = static_cast<int>(i) / cols, c = static_cast<int>(i) % cols;
        out << "<g transform=\"translate(" << c * chart_width << ' ' << r * chart_height
            << ")\">\n"
            << charts[i] << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace interlock::svg
