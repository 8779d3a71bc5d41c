#pragma once

#include <string>
#include <vector>

namespace interlock::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// One framed polyline chart with axis labels and min/max ticks.
std::string render_chart(const std::string& title, const std::vector<Series>& series,
                         const std::string& x_label, const std::string& y_label, int width,
                         int height);

// A grid of charts laid out `columns` wide, wrapped in one <svg> document.
std::string render_panel(const std::vector<std::string>& charts, int columns, int chart_width,
                         int chart_height);

}  // namespace interlock::svg
