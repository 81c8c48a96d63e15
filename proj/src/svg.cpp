#include "cpl/svg.hpp"

#include "cpl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cpl {

namespace {

constexpr double kSize = 640.0;
constexpr double kMargin = 48.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string class_color(int k, int classes) {
    // Blue to red through purple, linear in the class index.
    const double t = classes > 1 ? static_cast<double>(k) / (classes - 1) : 0.0;
    const int r = static_cast<int>(std::lround(31 + t * (214 - 31)));
    const int g = static_cast<int>(std::lround(119 + t * (39 - 119)));
    const int b = static_cast<int>(std::lround(180 + t * (40 - 180)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string render_layout_svg(const ProxySet& proxies, const std::vector<ScatterPoint>& points,
                              int classes, const std::string& title) {
    for (const auto& p : proxies) {
        if (p.size() != 2) throw ConfigError("layout plot needs 2-d proxies");
    }
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
    double lo_y = lo_x, hi_y = -lo_x;
    auto grow = [&](double x, double y) {
        lo_x = std::min(lo_x, x);
        hi_x = std::max(hi_x, x);
        lo_y = std::min(lo_y, y);
        hi_y = std::max(hi_y, y);
    };
    for (const auto& p : proxies) grow(p[0], p[1]);
    for (const auto& s : points) grow(s.x, s.y);
    if (!std::isfinite(lo_x)) {
        lo_x = lo_y = -1.0;
        hi_x = hi_y = 1.0;
    }
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9}) * 1.1;
    const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
    const double unit = (kSize - 2.0 * kMargin) / span;
    auto sx = [&](double x) { return kSize / 2.0 + (x - cx) * unit; };
    auto sy = [&](double y) { return kSize / 2.0 - (y - cy) * unit; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << " " << kSize << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    o << "<text x=\"" << kSize / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << escape(title) << "</text>\n";

    o << "<g id=\"features\">\n";
    for (const auto& s : points) {
        const std::string color = class_color(s.label, classes);
        const double x = sx(s.x), y = sy(s.y);
        if (s.label == s.predicted) {
            o << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"2.5\" fill=\"" << color
              << "\" fill-opacity=\"0.55\"/>\n";
        } else {
            o << "<path class=\"miss\" d=\"M" << fmt(x - 3.5) << " " << fmt(y - 3.5) << "L" << fmt(x + 3.5)
              << " " << fmt(y + 3.5) << "M" << fmt(x - 3.5) << " " << fmt(y + 3.5) << "L" << fmt(x + 3.5) << " "
              << fmt(y - 3.5) << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
        }
    }
    o << "</g>\n";

    o << "<g id=\"proxies\">\n";
    if (proxies.size() > 1) {
        o << "<polyline fill=\"none\" stroke=\"#444444\" stroke-width=\"1.2\" stroke-dasharray=\"5 4\" points=\"";
        for (size_t k = 0; k < proxies.size(); ++k) {
            o << (k ? " " : "") << fmt(sx(proxies[k][0])) << "," << fmt(sy(proxies[k][1]));
        }
        o << "\"/>\n";
    }
    for (size_t k = 0; k < proxies.size(); ++k) {
        const double x = sx(proxies[k][0]), y = sy(proxies[k][1]);
        o << "<circle class=\"proxy\" cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"8\" fill=\""
          << class_color(static_cast<int>(k), classes) << "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << fmt(x + 10) << "\" y=\"" << fmt(y - 10)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << k << "</text>\n";
    }
    o << "</g>\n";

    o << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<circle cx=\"20\" cy=\"" << kSize - 20 << "\" r=\"3\" fill=\"#777777\"/>"
      << "<text x=\"28\" y=\"" << kSize - 16 << "\">correct</text>\n"
      << "<path d=\"M97 " << kSize - 23 << "L103 " << kSize - 17 << "M97 " << kSize - 17 << "L103 "
      << kSize - 23 << "\" stroke=\"#777777\" stroke-width=\"1.8\"/>"
      << "<text x=\"110\" y=\"" << kSize - 16 << "\">misclassified</text>\n"
      << "<circle cx=\"210\" cy=\"" << kSize - 20 << "\" r=\"6\" fill=\"#ffffff\" stroke=\"#000000\" "
         "stroke-width=\"2\"/>"
      << "<text x=\"220\" y=\"" << kSize - 16 << "\">proxy</text>\n"
      << "</g>\n";
    o << "</svg>\n";
    return o.str();
}

} // namespace cpl
