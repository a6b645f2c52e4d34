#pragma once

// Deterministic SVG rendering of chart specs. Data marks never carry value
// text; the only text nodes are the title, axis labels, tick labels, legend
// entries and category (or point) labels.

#include <cmath>
#include <numbers>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chartforge/chart_model.hpp"
#include "chartforge/common.hpp"

namespace chartforge {

struct RenderedChart {
    std::string svg_text;
    int width_px = 800;
    int height_px = 600;
    std::string spec_id;
    std::vector<std::string> palette;  // color per series, in series order
    std::uint32_t style_seed = 0;
};

/// Rejection raised when asked to render a spec that fails validation.
struct InvalidSpecError : Error {
    explicit InvalidSpecError(ValidationReport r)
        : Error("invalid chart spec: " + describe(r)), report(std::move(r)) {}
    ValidationReport report;
};

/// Fixed layout. The plot region is where the value-to-pixel maps live.
struct Layout {
    int width = 800;
    int height = 600;
    double plot_left = 90.0;
    double plot_right = 720.0;
    double plot_top = 70.0;
    double plot_bottom = 500.0;
    double radar_cx = 400.0;
    double radar_cy = 290.0;
    double radar_radius = 190.0;

    double plot_width() const { return plot_right - plot_left; }
    double plot_height() const { return plot_bottom - plot_top; }
};

inline const std::vector<std::string>& palette10() {
    static const std::vector<std::string> colors{"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                                 "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
    return colors;
}

inline std::string series_color(std::size_t series_index, std::uint32_t style_seed) {
    return palette10()[(series_index + style_seed) % palette10().size()];
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string px(double v) { return format_fixed(v, 3); }

class SvgWriter {
public:
    void raw(std::string_view s) {
        out_ += s;
        out_ += '\n';
    }

    void text(const std::string& id_or_class, double x, double y, std::string_view content,
              std::string_view anchor = "middle", int size = 12, double rotate = 0.0) {
        out_ += "<text " + id_or_class + " x=\"" + px(x) + "\" y=\"" + px(y) + "\" font-family=\"monospace\" font-size=\"" +
                std::to_string(size) + "\" text-anchor=\"" + std::string(anchor) + "\"";
        if (rotate != 0.0) out_ += " transform=\"rotate(" + format_number(rotate) + " " + px(x) + " " + px(y) + ")\"";
        out_ += ">" + xml_escape(content) + "</text>\n";
    }

    void line(std::string_view attrs, double x1, double y1, double x2, double y2, std::string_view stroke,
              double width = 1.0) {
        out_ += "<line " + std::string(attrs) + (attrs.empty() ? "" : " ") + "x1=\"" + px(x1) + "\" y1=\"" + px(y1) +
                "\" x2=\"" + px(x2) + "\" y2=\"" + px(y2) + "\" stroke=\"" + std::string(stroke) +
                "\" stroke-width=\"" + format_number(width) + "\"/>\n";
    }

    std::string str() && { return std::move(out_); }

private:
    std::string out_;
};

inline double map_linear(double v, const AxisSpec& a, double lo_px, double hi_px) {
    return lo_px + (v - a.min) / (a.max - a.min) * (hi_px - lo_px);
}

inline std::string tick_label(double t) { return format_number(t); }

}  // namespace detail

/// Vertical pixel for value `v` on `axis` (axis.min at the bottom edge).
inline double value_to_y(double v, const AxisSpec& axis, const Layout& L = {}) {
    return detail::map_linear(v, axis, L.plot_bottom, L.plot_top);
}

inline double value_to_x(double v, const AxisSpec& axis, const Layout& L = {}) {
    return detail::map_linear(v, axis, L.plot_left, L.plot_right);
}

inline RenderedChart render(const ChartSpec& spec, const Layout& L = {}) {
    if (auto report = validate_spec(spec); !report.empty()) throw InvalidSpecError(std::move(report));

    using detail::px;
    detail::SvgWriter w;
    RenderedChart out;
    out.spec_id = spec.id;
    out.width_px = L.width;
    out.height_px = L.height;
    out.style_seed = spec.style_seed;
    for (std::size_t i = 0; i < spec.series.size(); ++i) out.palette.push_back(series_color(i, spec.style_seed));

    w.raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    w.raw("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(L.width) +
          "\" height=\"" + std::to_string(L.height) + "\" viewBox=\"0 0 " + std::to_string(L.width) + " " +
          std::to_string(L.height) + "\">");
    w.raw("<rect x=\"0\" y=\"0\" width=\"" + std::to_string(L.width) + "\" height=\"" + std::to_string(L.height) +
          "\" fill=\"#ffffff\"/>");
    if (!spec.title.empty()) w.text("id=\"title\"", L.width / 2.0, 36.0, spec.title, "middle", 18);

    const std::size_t ncat = spec.x_categories.size();
    const double band = ncat > 0 ? L.plot_width() / static_cast<double>(ncat) : 0.0;
    auto category_center = [&](std::size_t i) { return L.plot_left + (static_cast<double>(i) + 0.5) * band; };

    if (spec.chart_type == ChartType::radar) {
        const AxisSpec& a = spec.y_axis;
        const double cx = L.radar_cx;
        const double cy = L.radar_cy;
        const double R = L.radar_radius;
        auto angle = [&](std::size_t j) { return -std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(ncat); };
        auto radius = [&](double v) { return (v - a.min) / (a.max - a.min) * R; };
        w.raw("<circle id=\"radar-frame\" cx=\"" + px(cx) + "\" cy=\"" + px(cy) + "\" r=\"" + px(R) +
              "\" fill=\"none\" stroke=\"none\"/>");
        w.raw("<g id=\"grid\">");
        for (double t : a.ticks()) {
            const double r = radius(t);
            std::string pts;
            for (std::size_t j = 0; j < ncat; ++j) {
                if (!pts.empty()) pts += ' ';
                pts += px(cx + r * std::cos(angle(j))) + "," + px(cy + r * std::sin(angle(j)));
            }
            w.raw("<polygon class=\"ring\" points=\"" + pts + "\" fill=\"none\" stroke=\"#dddddd\"/>");
        }
        for (std::size_t j = 0; j < ncat; ++j) {
            w.line("class=\"spoke\"", cx, cy, cx + R * std::cos(angle(j)), cy + R * std::sin(angle(j)), "#bbbbbb");
        }
        w.raw("</g>");
        for (double t : a.ticks()) {
            w.text("class=\"tick y\"", cx + 4.0, cy - radius(t) - 2.0, detail::tick_label(t), "start", 10);
        }
        for (std::size_t j = 0; j < ncat; ++j) {
            const double lx = cx + (R + 18.0) * std::cos(angle(j));
            const double ly = cy + (R + 18.0) * std::sin(angle(j)) + 4.0;
            const double c = std::cos(angle(j));
            w.text("class=\"category\"", lx, ly, spec.x_categories[j], c > 0.3 ? "start" : c < -0.3 ? "end" : "middle");
        }
        for (std::size_t si = 0; si < spec.series.size(); ++si) {
            const auto& s = spec.series[si];
            const std::string color = out.palette[si];
            std::string pts;
            for (std::size_t j = 0; j < s.points.size(); ++j) {
                if (!pts.empty()) pts += ' ';
                const double r = radius(s.points[j].y);
                pts += px(cx + r * std::cos(angle(j))) + "," + px(cy + r * std::sin(angle(j)));
            }
            w.raw("<polygon id=\"radar-s" + std::to_string(si) + "\" points=\"" + pts + "\" fill=\"" + color +
                  "\" fill-opacity=\"0.2\" stroke=\"" + color + "\" stroke-width=\"2\"/>");
            for (std::size_t j = 0; j < s.points.size(); ++j) {
                const double r = radius(s.points[j].y);
                w.raw("<circle id=\"mark-s" + std::to_string(si) + "-p" + std::to_string(j) + "\" cx=\"" +
                      px(cx + r * std::cos(angle(j))) + "\" cy=\"" + px(cy + r * std::sin(angle(j))) +
                      "\" r=\"3\" fill=\"" + color + "\"/>");
            }
        }
        w.text("id=\"y-label\"", cx, cy + R + 48.0, a.label, "middle", 12);
    } else {
        w.raw("<rect id=\"plot-area\" x=\"" + px(L.plot_left) + "\" y=\"" + px(L.plot_top) + "\" width=\"" +
              px(L.plot_width()) + "\" height=\"" + px(L.plot_height()) + "\" fill=\"none\" stroke=\"#333333\"/>");

        // Gridlines and ticks for every numeric axis.
        w.raw("<g id=\"grid\">");
        for (double t : spec.y_axis.ticks()) {
            const double y = value_to_y(t, spec.y_axis, L);
            w.line("class=\"grid y\"", L.plot_left, y, L.plot_right, y, "#e0e0e0");
        }
        if (spec.x_axis) {
            for (double t : spec.x_axis->ticks()) {
                const double x = value_to_x(t, *spec.x_axis, L);
                w.line("class=\"grid x\"", x, L.plot_top, x, L.plot_bottom, "#e0e0e0");
            }
        }
        w.raw("</g>");
        for (double t : spec.y_axis.ticks()) {
            const double y = value_to_y(t, spec.y_axis, L);
            w.line("class=\"tick-mark\"", L.plot_left - 5.0, y, L.plot_left, y, "#333333");
            w.text("class=\"tick y\"", L.plot_left - 8.0, y + 4.0, detail::tick_label(t), "end", 11);
        }
        if (spec.y_axis_secondary) {
            for (double t : spec.y_axis_secondary->ticks()) {
                const double y = value_to_y(t, *spec.y_axis_secondary, L);
                w.line("class=\"tick-mark\"", L.plot_right, y, L.plot_right + 5.0, y, "#333333");
                w.text("class=\"tick y2\"", L.plot_right + 8.0, y + 4.0, detail::tick_label(t), "start", 11);
            }
            w.text("id=\"y2-label\"", L.plot_right + 62.0, (L.plot_top + L.plot_bottom) / 2.0,
                   spec.y_axis_secondary->label, "middle", 12, 90.0);
        }
        if (spec.x_axis) {
            for (double t : spec.x_axis->ticks()) {
                const double x = value_to_x(t, *spec.x_axis, L);
                w.line("class=\"tick-mark\"", x, L.plot_bottom, x, L.plot_bottom + 5.0, "#333333");
                w.text("class=\"tick x\"", x, L.plot_bottom + 18.0, detail::tick_label(t), "middle", 11);
            }
            w.text("id=\"x-label\"", (L.plot_left + L.plot_right) / 2.0, L.plot_bottom + 40.0, spec.x_axis->label);
        }
        for (std::size_t i = 0; i < ncat; ++i) {
            w.text("class=\"category\"", category_center(i), L.plot_bottom + 18.0, spec.x_categories[i]);
        }
        w.text("id=\"y-label\"", 24.0, (L.plot_top + L.plot_bottom) / 2.0, spec.y_axis.label, "middle", 12, -90.0);

        // Bars (bar charts and the bar part of combos) are grouped per category.
        std::vector<std::size_t> bar_series;
        for (std::size_t si = 0; si < spec.series.size(); ++si) {
            if (spec.series[si].mark == Mark::bar) bar_series.push_back(si);
        }
        const double group = band * 0.8;
        for (std::size_t k = 0; k < bar_series.size(); ++k) {
            const std::size_t si = bar_series[k];
            const auto& s = spec.series[si];
            const AxisSpec& a = value_axis_for(spec, s);
            const double bw = group / static_cast<double>(bar_series.size());
            for (std::size_t j = 0; j < s.points.size(); ++j) {
                const double x = category_center(j) - group / 2.0 + static_cast<double>(k) * bw;
                const double top = value_to_y(s.points[j].y, a, L);
                const double base = value_to_y(a.min, a, L);
                w.raw("<rect id=\"mark-s" + std::to_string(si) + "-p" + std::to_string(j) + "\" class=\"bar\" x=\"" +
                      px(x) + "\" y=\"" + px(top) + "\" width=\"" + px(bw) + "\" height=\"" + px(base - top) +
                      "\" fill=\"" + out.palette[si] + "\"/>");
            }
        }

        for (std::size_t si = 0; si < spec.series.size(); ++si) {
            const auto& s = spec.series[si];
            const std::string color = out.palette[si];
            const std::string sid = std::to_string(si);
            const AxisSpec& a = value_axis_for(spec, s);
            switch (s.mark) {
                case Mark::bar: break;
                case Mark::line: {
                    std::string pts;
                    for (std::size_t j = 0; j < s.points.size(); ++j) {
                        if (!pts.empty()) pts += ' ';
                        pts += px(category_center(j)) + "," + px(value_to_y(s.points[j].y, a, L));
                    }
                    w.raw("<polyline id=\"line-s" + sid + "\" points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
                          "\" stroke-width=\"2\"/>");
                    for (std::size_t j = 0; j < s.points.size(); ++j) {
                        w.raw("<circle id=\"mark-s" + sid + "-p" + std::to_string(j) + "\" cx=\"" +
                              px(category_center(j)) + "\" cy=\"" + px(value_to_y(s.points[j].y, a, L)) +
                              "\" r=\"3\" fill=\"" + color + "\"/>");
                    }
                    break;
                }
                case Mark::area_fill: {
                    std::string edge;
                    for (std::size_t j = 0; j < s.points.size(); ++j) {
                        if (!edge.empty()) edge += ' ';
                        edge += px(category_center(j)) + "," + px(value_to_y(s.points[j].y, a, L));
                    }
                    const double base = value_to_y(a.min, a, L);
                    const std::string poly = edge + " " + px(category_center(s.points.size() - 1)) + "," + px(base) +
                                             " " + px(category_center(0)) + "," + px(base);
                    w.raw("<polygon id=\"area-s" + sid + "\" points=\"" + poly + "\" fill=\"" + color +
                          "\" fill-opacity=\"0.35\" stroke=\"none\"/>");
                    w.raw("<polyline id=\"edge-s" + sid + "\" points=\"" + edge + "\" fill=\"none\" stroke=\"" + color +
                          "\" stroke-width=\"2\"/>");
                    break;
                }
                case Mark::point: {
                    if (spec.chart_type == ChartType::box) {
                        const BoxStats st = box_stats(s);
                        const double cx = category_center(si);
                        const double half = band * 0.25;
                        const double yq1 = value_to_y(st.q1, a, L);
                        const double yq3 = value_to_y(st.q3, a, L);
                        const double ylo = value_to_y(st.lower_whisker, a, L);
                        const double yhi = value_to_y(st.upper_whisker, a, L);
                        w.line("id=\"whisker-lo-s" + sid + "\"", cx, yq1, cx, ylo, "#333333");
                        w.line("id=\"whisker-hi-s" + sid + "\"", cx, yq3, cx, yhi, "#333333");
                        w.line("class=\"cap\"", cx - half / 2.0, ylo, cx + half / 2.0, ylo, "#333333");
                        w.line("class=\"cap\"", cx - half / 2.0, yhi, cx + half / 2.0, yhi, "#333333");
                        w.raw("<rect id=\"box-s" + sid + "\" x=\"" + px(cx - half) + "\" y=\"" + px(yq3) + "\" width=\"" +
                              px(2.0 * half) + "\" height=\"" + px(yq1 - yq3) + "\" fill=\"" + color +
                              "\" fill-opacity=\"0.6\" stroke=\"#333333\"/>");
                        w.line("id=\"median-s" + sid + "\"", cx - half, value_to_y(st.median, a, L), cx + half,
                               value_to_y(st.median, a, L), "#111111", 2.0);
                        for (std::size_t k = 0; k < st.outliers.size(); ++k) {
                            w.raw("<circle id=\"outlier-s" + sid + "-" + std::to_string(k) + "\" cx=\"" + px(cx) +
                                  "\" cy=\"" + px(value_to_y(st.outliers[k], a, L)) +
                                  "\" r=\"3\" fill=\"none\" stroke=\"#333333\"/>");
                        }
                    } else {
                        for (std::size_t j = 0; j < s.points.size(); ++j) {
                            const auto& p = s.points[j];
                            const double x = value_to_x(*p.x, *spec.x_axis, L);
                            const double y = value_to_y(p.y, a, L);
                            w.raw("<circle id=\"mark-s" + sid + "-p" + std::to_string(j) + "\" cx=\"" + px(x) +
                                  "\" cy=\"" + px(y) + "\" r=\"4\" fill=\"" + color + "\"/>");
                            w.text("class=\"point-label\"", x + 6.0, y - 6.0, p.label.value_or(""), "start", 10);
                        }
                    }
                    break;
                }
            }
        }
    }

    // Legend below the plot.
    const double legend_y = L.height - 24.0;
    const double slot = static_cast<double>(L.width - 80) / static_cast<double>(std::max<std::size_t>(spec.series.size(), 1));
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const double x = 40.0 + static_cast<double>(si) * slot;
        w.raw("<rect class=\"swatch\" x=\"" + px(x) + "\" y=\"" + px(legend_y - 10.0) +
              "\" width=\"12\" height=\"12\" fill=\"" + out.palette[si] + "\"/>");
        w.text("class=\"legend\"", x + 18.0, legend_y, spec.series[si].name, "start", 12);
    }

    w.raw("</svg>");
    out.svg_text = std::move(w).str();
    return out;
}

/// Sidecar metadata written next to each SVG.
inline json render_meta(const RenderedChart& r) {
    return json{{"spec_id", r.spec_id},
                {"width", r.width_px},
                {"height", r.height_px},
                {"palette", r.palette},
                {"style_seed", r.style_seed}};
}

/// Optional hook for converting SVG output to a raster image. Raster bytes are
/// outside the determinism guarantee.
using RasterExporter = std::function<void(const RenderedChart&, const std::filesystem::path&)>;

// ---------------------------------------------------------------------------
// Text-node extraction

namespace detail {

inline std::string xml_unescape(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        auto semi = s.find(';', i);
        if (semi == std::string_view::npos) throw ParseError("unterminated entity");
        auto ent = s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else throw ParseError("unknown entity &" + std::string(ent) + ";");
        i = semi;
    }
    return out;
}

}  // namespace detail

/// Every non-blank character-data run in document order.
inline std::vector<std::string> extract_text_nodes(std::string_view svg) {
    std::vector<std::string> out;
    std::vector<std::string> stack;
    bool seen_root = false;
    std::size_t i = 0;
    auto flush_text = [&](std::string_view run) {
        std::string t = trim(detail::xml_unescape(run));
        if (t.empty()) return;
        if (stack.empty()) throw ParseError("text outside the root element");
        out.push_back(std::move(t));
    };
    while (i < svg.size()) {
        auto lt = svg.find('<', i);
        if (lt == std::string_view::npos) {
            flush_text(svg.substr(i));
            break;
        }
        flush_text(svg.substr(i, lt - i));
        if (svg.compare(lt, 4, "<!--") == 0) {
            auto end = svg.find("-->", lt + 4);
            if (end == std::string_view::npos) throw ParseError("unterminated comment");
            i = end + 3;
            continue;
        }
        if (svg.compare(lt, 2, "<?") == 0) {
            auto end = svg.find("?>", lt + 2);
            if (end == std::string_view::npos) throw ParseError("unterminated processing instruction");
            i = end + 2;
            continue;
        }
        if (svg.compare(lt, 2, "<!") == 0) {
            auto end = svg.find('>', lt + 2);
            if (end == std::string_view::npos) throw ParseError("unterminated declaration");
            i = end + 1;
            continue;
        }
        // Element tag; skip quoted attribute values while looking for '>'.
        std::size_t j = lt + 1;
        char quote = 0;
        for (; j < svg.size(); ++j) {
            char c = svg[j];
            if (quote) {
                if (c == quote) quote = 0;
            } else if (c == '"' || c == '\'') {
                quote = c;
            } else if (c == '>') {
                break;
            } else if (c == '<') {
                throw ParseError("'<' inside tag");
            }
        }
        if (j >= svg.size()) throw ParseError("unterminated tag");
        std::string_view tag = svg.substr(lt + 1, j - lt - 1);
        i = j + 1;
        const bool closing = !tag.empty() && tag.front() == '/';
        const bool self_closing = !tag.empty() && tag.back() == '/';
        if (closing) tag.remove_prefix(1);
        if (self_closing) tag.remove_suffix(1);
        auto name_end = tag.find_first_of(" \t\r\n");
        std::string name(tag.substr(0, name_end));
        if (name.empty()) throw ParseError("empty tag name");
        if (closing) {
            if (stack.empty() || stack.back() != name) throw ParseError("mismatched closing tag </" + name + ">");
            stack.pop_back();
        } else if (!self_closing) {
            if (stack.empty() && seen_root) throw ParseError("multiple root elements");
            seen_root = true;
            stack.push_back(std::move(name));
        } else if (stack.empty()) {
            if (seen_root) throw ParseError("multiple root elements");
            seen_root = true;
        }
    }
    if (!stack.empty()) throw ParseError("unclosed element <" + stack.back() + ">");
    if (!seen_root) throw ParseError("no root element");
    return out;
}

// ---------------------------------------------------------------------------
// Annotation audit

/// Renderings of `v` a reader could recognize as the value itself: shortest,
/// thousands-grouped, fixed 1 and 2 decimals when lossless, plus "%" and "$"
/// decorated variants.
inline std::set<std::string> value_formats(double v) {
    std::set<std::string> base;
    const std::string shortest = format_number(v);
    base.insert(shortest);
    for (int d : {0, 1, 2, 3}) {
        std::string f = format_fixed(v, d);
        double back = 0;
        if (parse_double(f, back) && back == v) base.insert(f);
    }
    // Thousands grouping of every base form.
    std::set<std::string> grouped;
    for (const auto& s : base) {
        std::size_t start = (s[0] == '-') ? 1 : 0;
        std::size_t dot = s.find_first_of(".e", start);
        std::size_t int_end = dot == std::string::npos ? s.size() : dot;
        if (int_end - start <= 3) continue;
        std::string g = s.substr(0, start);
        const std::string digits = s.substr(start, int_end - start);
        for (std::size_t k = 0; k < digits.size(); ++k) {
            if (k > 0 && (digits.size() - k) % 3 == 0) g += ',';
            g += digits[k];
        }
        g += s.substr(int_end);
        grouped.insert(g);
    }
    base.insert(grouped.begin(), grouped.end());
    std::set<std::string> out = base;
    for (const auto& s : base) {
        out.insert(s + "%");
        out.insert("$" + s);
    }
    return out;
}

/// Text nodes of `svg` that equal some data value of `spec` in a supported
/// format. Empty for every chart the renderer should emit.
inline std::vector<std::string> annotation_audit(const ChartSpec& spec, std::string_view svg) {
    std::set<std::string> banned;
    for (const auto& s : spec.series) {
        for (const auto& p : s.points) {
            auto f = value_formats(p.y);
            banned.insert(f.begin(), f.end());
            if (p.x) {
                auto fx = value_formats(*p.x);
                banned.insert(fx.begin(), fx.end());
            }
        }
    }
    std::vector<std::string> hits;
    for (auto& t : extract_text_nodes(svg)) {
        if (banned.count(t)) hits.push_back(t);
    }
    return hits;
}

}  // namespace chartforge
