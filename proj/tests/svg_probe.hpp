#pragma once

// Reads mark geometry back out of rendered SVG and inverts the pixel mapping,
// using only the documented layout constants and element ids.

#include <cmath>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "chartforge/chart_model.hpp"
#include "chartforge/renderer.hpp"

namespace probe {

using Attrs = std::map<std::string, std::string>;

// id -> attributes of every element carrying an id.
inline std::map<std::string, Attrs> elements_by_id(const std::string& svg) {
    static const std::regex tag_re(R"re(<[a-z]+\s([^>]*?)/?>)re");
    static const std::regex attr_re(R"re(([a-z0-9:-]+)="([^"]*)")re");
    std::map<std::string, Attrs> out;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag_re); it != std::sregex_iterator(); ++it) {
        const std::string body = (*it)[1].str();
        Attrs attrs;
        for (auto a = std::sregex_iterator(body.begin(), body.end(), attr_re); a != std::sregex_iterator(); ++a) {
            attrs[(*a)[1].str()] = (*a)[2].str();
        }
        if (auto id = attrs.find("id"); id != attrs.end()) out[id->second] = attrs;
    }
    return out;
}

inline std::vector<std::pair<double, double>> parse_points(const std::string& s) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(s);
    std::string pair;
    while (ss >> pair) {
        const auto comma = pair.find(',');
        out.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
    }
    return out;
}

struct Recovered {
    double expected;
    double recovered;
    double span;  // axis max - min
    std::string where;
};

inline double from_y(double y, const chartforge::AxisSpec& a, const chartforge::Layout& L) {
    return a.min + (L.plot_bottom - y) / (L.plot_bottom - L.plot_top) * (a.max - a.min);
}

inline double from_x(double x, const chartforge::AxisSpec& a, const chartforge::Layout& L) {
    return a.min + (x - L.plot_left) / (L.plot_right - L.plot_left) * (a.max - a.min);
}

/// Every data value of `spec` paired with the value read back from the SVG.
inline std::vector<Recovered> recover(const chartforge::ChartSpec& spec, const std::string& svg,
                                      const chartforge::Layout& L = {}) {
    using namespace chartforge;
    const auto els = elements_by_id(svg);
    auto get = [&](const std::string& id) -> const Attrs& {
        auto it = els.find(id);
        if (it == els.end()) throw std::runtime_error("missing element " + id);
        return it->second;
    };
    auto num = [](const Attrs& a, const char* k) { return std::stod(a.at(k)); };
    std::vector<Recovered> out;
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const AxisSpec& axis = value_axis_for(spec, s);
        const double span = axis.max - axis.min;
        const std::string sid = std::to_string(si);
        if (spec.chart_type == ChartType::box) {
            const BoxStats st = box_stats(s);
            out.push_back({st.median, from_y(num(get("median-s" + sid), "y1"), axis, L), span, "median-s" + sid});
            const auto& box = get("box-s" + sid);
            out.push_back({st.q3, from_y(num(box, "y"), axis, L), span, "q3-s" + sid});
            out.push_back({st.q1, from_y(num(box, "y") + num(box, "height"), axis, L), span, "q1-s" + sid});
            out.push_back({st.lower_whisker, from_y(num(get("whisker-lo-s" + sid), "y2"), axis, L), span, "wlo-s" + sid});
            out.push_back({st.upper_whisker, from_y(num(get("whisker-hi-s" + sid), "y2"), axis, L), span, "whi-s" + sid});
            continue;
        }
        if (s.mark == Mark::area_fill) {
            const auto pts = parse_points(get("edge-s" + sid).at("points"));
            for (std::size_t j = 0; j < s.points.size(); ++j) {
                out.push_back({s.points[j].y, from_y(pts.at(j).second, axis, L), span, "edge-s" + sid});
            }
            continue;
        }
        for (std::size_t j = 0; j < s.points.size(); ++j) {
            const std::string id = "mark-s" + sid + "-p" + std::to_string(j);
            const auto& a = get(id);
            if (spec.chart_type == ChartType::radar) {
                const double dx = num(a, "cx") - L.radar_cx;
                const double dy = num(a, "cy") - L.radar_cy;
                const double r = std::sqrt(dx * dx + dy * dy);
                out.push_back({s.points[j].y, axis.min + r / L.radar_radius * span, span, id});
            } else if (s.mark == Mark::bar) {
                out.push_back({s.points[j].y, from_y(num(a, "y"), axis, L), span, id});
                // The bar's foot sits on the axis minimum.
                out.push_back({axis.min, from_y(num(a, "y") + num(a, "height"), axis, L), span, id + "-base"});
            } else {
                out.push_back({s.points[j].y, from_y(num(a, "cy"), axis, L), span, id});
                if (spec.chart_type == ChartType::scatter) {
                    const double xspan = spec.x_axis->max - spec.x_axis->min;
                    out.push_back({*s.points[j].x, from_x(num(a, "cx"), *spec.x_axis, L), xspan, id + "-x"});
                }
            }
        }
    }
    return out;
}

}  // namespace probe
