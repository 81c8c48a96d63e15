#pragma once

#include "cpl/geometry.hpp"

#include <string>
#include <vector>

namespace cpl {

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    int label = 0;
    int predicted = 0;
};

// Static scatter of 2-d features colored by true class on an ordinal ramp.
// Misclassified samples are drawn as crosses, proxies as large outlined
// markers joined in class order. Both axes share one scale.
std::string render_layout_svg(const ProxySet& proxies, const std::vector<ScatterPoint>& points,
                              int classes, const std::string& title);

// Ramp color for class k of K, as #rrggbb.
std::string class_color(int k, int classes);

} // namespace cpl
