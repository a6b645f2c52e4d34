#pragma once

// Declarative chart specifications: the ground truth every rendered chart and
// every benchmark answer is derived from.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chartforge/common.hpp"
#include "chartforge/random.hpp"

namespace chartforge {

using json = nlohmann::json;

// Table order used by every report: Box Area Radar Scatter Bar Line Combo.
enum class ChartType { box, area, radar, scatter, bar, line, combo };

inline constexpr std::array<ChartType, 7> kAllChartTypes{
    ChartType::box, ChartType::area, ChartType::radar, ChartType::scatter,
    ChartType::bar, ChartType::line, ChartType::combo};

inline std::string_view to_string(ChartType t) {
    switch (t) {
        case ChartType::box: return "box";
        case ChartType::area: return "area";
        case ChartType::radar: return "radar";
        case ChartType::scatter: return "scatter";
        case ChartType::bar: return "bar";
        case ChartType::line: return "line";
        case ChartType::combo: return "combo";
    }
    return "?";
}

inline std::optional<ChartType> parse_chart_type(std::string_view s) {
    for (auto t : kAllChartTypes) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

enum class Mark { bar, line, point, area_fill };

inline std::string_view to_string(Mark m) {
    switch (m) {
        case Mark::bar: return "bar";
        case Mark::line: return "line";
        case Mark::point: return "point";
        case Mark::area_fill: return "area-fill";
    }
    return "?";
}

inline std::optional<Mark> parse_mark(std::string_view s) {
    for (auto m : {Mark::bar, Mark::line, Mark::point, Mark::area_fill}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

enum class Difficulty { easy, hard };

inline std::string_view to_string(Difficulty d) { return d == Difficulty::easy ? "easy" : "hard"; }

/// One data point. Category charts use `label`; scatter uses `label` + `x`;
/// box series carry bare raw observations (`y` only).
struct Point {
    std::optional<std::string> label;
    std::optional<double> x;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

struct SeriesSpec {
    std::string name;
    std::vector<Point> points;
    Mark mark = Mark::bar;

    bool operator==(const SeriesSpec&) const = default;
};

struct AxisSpec {
    std::string label;
    double min = 0.0;
    double max = 1.0;
    double tick_interval = 1.0;
    std::optional<std::string> unit;

    /// Tick positions min, min + k*tick, ..., max.
    std::vector<double> ticks() const {
        std::vector<double> out;
        if (!(tick_interval > 0) || !(max > min)) return out;
        const double span = (max - min) / tick_interval;
        const auto n = static_cast<long>(std::floor(span + 1e-9));
        const double k0 = std::round(min / tick_interval);
        const bool aligned = std::fabs(min / tick_interval - k0) < 1e-9;
        for (long i = 0; i <= n; ++i) {
            const double t = aligned ? (k0 + static_cast<double>(i)) * tick_interval
                                     : min + static_cast<double>(i) * tick_interval;
            out.push_back(clean_decimal(t));
        }
        return out;
    }

    bool operator==(const AxisSpec&) const = default;
};

/// There is deliberately no field for printing values on data marks.
struct ChartSpec {
    std::string id;
    ChartType chart_type = ChartType::bar;
    std::string topic;
    std::string title;
    std::vector<std::string> x_categories;
    std::vector<SeriesSpec> series;
    AxisSpec y_axis;
    std::optional<AxisSpec> y_axis_secondary;  // combo only
    std::optional<AxisSpec> x_axis;            // scatter only
    std::uint32_t style_seed = 0;

    bool operator==(const ChartSpec&) const = default;
};

/// Axis a series is plotted against. Combo line series bind to the
/// secondary axis when one exists.
inline const AxisSpec& value_axis_for(const ChartSpec& spec, const SeriesSpec& s) {
    if (spec.chart_type == ChartType::combo && spec.y_axis_secondary && s.mark == Mark::line) {
        return *spec.y_axis_secondary;
    }
    return spec.y_axis;
}

// ---------------------------------------------------------------------------
// Topics

inline const std::vector<std::string>& default_topics() {
    static const std::vector<std::string> topics{
        "finance", "healthcare", "technology", "education", "energy",
        "environment", "agriculture", "transportation", "retail", "manufacturing",
        "real estate", "tourism", "sports", "entertainment", "media",
        "telecommunications", "automotive", "aviation", "logistics", "insurance",
        "banking", "pharmaceuticals", "biotechnology", "public health", "demographics",
        "employment", "housing", "climate", "water resources", "food and beverage",
        "fashion", "gaming", "e-commerce", "cybersecurity", "social media",
        "government", "social sciences", "construction"};
    return topics;
}

// ---------------------------------------------------------------------------
// Box statistics
//
// Quartiles interpolate linearly between order statistics: with the sorted
// sample x[0..n-1], quantile p sits at h = (n-1)p and equals
// x[floor h] + (h - floor h) * (x[floor h + 1] - x[floor h]).
// Whiskers end at the most extreme observation inside [q1 - 1.5 IQR, q3 + 1.5 IQR].

enum class BoxStatistic { lower_whisker, lower_quartile, median, upper_quartile, upper_whisker };

inline constexpr std::array<BoxStatistic, 5> kAllBoxStatistics{
    BoxStatistic::lower_whisker, BoxStatistic::lower_quartile, BoxStatistic::median,
    BoxStatistic::upper_quartile, BoxStatistic::upper_whisker};

inline std::string_view to_string(BoxStatistic s) {
    switch (s) {
        case BoxStatistic::lower_whisker: return "lower whisker";
        case BoxStatistic::lower_quartile: return "lower quartile";
        case BoxStatistic::median: return "median";
        case BoxStatistic::upper_quartile: return "upper quartile";
        case BoxStatistic::upper_whisker: return "upper whisker";
    }
    return "?";
}

inline std::optional<BoxStatistic> parse_box_statistic(std::string_view s) {
    for (auto b : kAllBoxStatistics) {
        if (to_string(b) == s) return b;
    }
    return std::nullopt;
}

struct BoxStats {
    double lower_whisker = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double upper_whisker = 0.0;
    std::vector<double> outliers;

    double get(BoxStatistic s) const {
        switch (s) {
            case BoxStatistic::lower_whisker: return lower_whisker;
            case BoxStatistic::lower_quartile: return q1;
            case BoxStatistic::median: return median;
            case BoxStatistic::upper_quartile: return q3;
            case BoxStatistic::upper_whisker: return upper_whisker;
        }
        return 0.0;
    }
};

/// Quantile of an already sorted, non-empty sample.
inline double quantile_linear(const std::vector<double>& sorted, double p) {
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size() || frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw DomainError("box_stats: empty sample");
    std::sort(values.begin(), values.end());
    BoxStats st;
    st.q1 = quantile_linear(values, 0.25);
    st.median = quantile_linear(values, 0.5);
    st.q3 = quantile_linear(values, 0.75);
    const double iqr = st.q3 - st.q1;
    const double lo_fence = st.q1 - 1.5 * iqr;
    const double hi_fence = st.q3 + 1.5 * iqr;
    st.lower_whisker = st.q1;
    st.upper_whisker = st.q3;
    bool have_lo = false;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            st.outliers.push_back(v);
            continue;
        }
        if (!have_lo) {
            st.lower_whisker = v;
            have_lo = true;
        }
        st.upper_whisker = v;
    }
    return st;
}

inline BoxStats box_stats(const SeriesSpec& s) {
    std::vector<double> ys;
    ys.reserve(s.points.size());
    for (const auto& p : s.points) ys.push_back(p.y);
    return box_stats(std::move(ys));
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

inline std::string describe(const ValidationReport& report) {
    std::string out;
    for (const auto& v : report) {
        if (!out.empty()) out += "; ";
        out += v.field + ": " + v.rule;
    }
    return out;
}

namespace detail {

inline bool is_category_chart(ChartType t) {
    return t == ChartType::bar || t == ChartType::line || t == ChartType::area ||
           t == ChartType::radar || t == ChartType::combo;
}

inline bool mark_allowed(ChartType t, Mark m) {
    switch (t) {
        case ChartType::bar: return m == Mark::bar;
        case ChartType::line: return m == Mark::line;
        case ChartType::area: return m == Mark::area_fill;
        case ChartType::radar: return m == Mark::line;
        case ChartType::scatter: return m == Mark::point;
        case ChartType::box: return m == Mark::point;
        case ChartType::combo: return m == Mark::bar || m == Mark::line;
    }
    return false;
}

inline void validate_axis(const AxisSpec& a, const std::string& field, ValidationReport& out) {
    if (!std::isfinite(a.min) || !std::isfinite(a.max) || !std::isfinite(a.tick_interval)) {
        out.push_back({field, "axis bounds and tick interval must be finite"});
        return;
    }
    if (!(a.min < a.max)) out.push_back({field, "min must be < max"});
    if (!(a.tick_interval > 0)) {
        out.push_back({field, "tick_interval must be > 0"});
        return;
    }
    const double ticks = (a.max - a.min) / a.tick_interval;
    if (ticks < 2.0 - 1e-9 || ticks > 20.0 + 1e-9) {
        out.push_back({field, "(max - min) / tick_interval must lie in [2, 20], got " + format_number(ticks)});
    }
}

inline bool has_quote(std::string_view s) { return s.find('"') != std::string_view::npos; }

}  // namespace detail

inline ValidationReport validate_spec(const ChartSpec& spec) {
    ValidationReport out;
    const auto type = spec.chart_type;

    if (spec.id.empty()) out.push_back({"id", "must be non-empty"});
    if (detail::has_quote(spec.title)) out.push_back({"title", "must not contain '\"'"});
    if (spec.series.empty()) out.push_back({"series", "at least one series required"});

    detail::validate_axis(spec.y_axis, "y_axis", out);
    if (spec.y_axis_secondary) {
        if (type != ChartType::combo) out.push_back({"y_axis_secondary", "only combo charts may have a secondary axis"});
        detail::validate_axis(*spec.y_axis_secondary, "y_axis_secondary", out);
    }
    if (type == ChartType::scatter) {
        if (!spec.x_axis) out.push_back({"x_axis", "scatter requires a numeric x axis"});
        else detail::validate_axis(*spec.x_axis, "x_axis", out);
        if (!spec.x_categories.empty()) out.push_back({"x_categories", "scatter takes no categories"});
    } else if (spec.x_axis) {
        out.push_back({"x_axis", "only scatter charts have a numeric x axis"});
    }

    // Categories.
    std::set<std::string> cats;
    for (const auto& c : spec.x_categories) {
        if (c.empty()) out.push_back({"x_categories", "labels must be non-empty"});
        if (detail::has_quote(c)) out.push_back({"x_categories", "labels must not contain '\"'"});
        if (!cats.insert(c).second) out.push_back({"x_categories", "duplicate category '" + c + "'"});
    }
    if (detail::is_category_chart(type) && spec.x_categories.empty()) {
        out.push_back({"x_categories", std::string(to_string(type)) + " requires categories"});
    }
    if (type == ChartType::radar && spec.x_categories.size() < 3) {
        out.push_back({"x_categories", "radar requires ≥3 categories"});
    }

    std::set<std::string> names;
    int bar_marks = 0;
    int line_marks = 0;
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const std::string field = "series[" + std::to_string(si) + "]";
        if (s.name.empty()) out.push_back({field + ".name", "must be non-empty"});
        if (detail::has_quote(s.name)) out.push_back({field + ".name", "must not contain '\"'"});
        if (!names.insert(s.name).second) out.push_back({field + ".name", "duplicate series name '" + s.name + "'"});
        if (!detail::mark_allowed(type, s.mark)) {
            out.push_back({field + ".mark", "mark '" + std::string(to_string(s.mark)) + "' not allowed for " +
                                                std::string(to_string(type))});
        }
        if (s.mark == Mark::bar) ++bar_marks;
        if (s.mark == Mark::line) ++line_marks;
        if (s.points.empty()) {
            out.push_back({field + ".points", "at least one point required"});
            continue;
        }

        std::set<std::string> labels;
        const AxisSpec& axis = value_axis_for(spec, s);
        for (std::size_t pi = 0; pi < s.points.size(); ++pi) {
            const auto& p = s.points[pi];
            const std::string pf = field + ".points[" + std::to_string(pi) + "]";
            if (!std::isfinite(p.y)) {
                out.push_back({pf + ".y", "must be finite"});
                continue;
            }
            if (p.label) {
                if (detail::has_quote(*p.label)) out.push_back({pf + ".label", "must not contain '\"'"});
                if (!labels.insert(*p.label).second) {
                    out.push_back({pf + ".label", "duplicate label '" + *p.label + "' within series"});
                }
            }
            if (p.y < axis.min || p.y > axis.max) {
                const bool secondary = spec.y_axis_secondary && &axis == &*spec.y_axis_secondary;
                out.push_back({secondary ? "y_axis_secondary" : "y_axis",
                               "value " + format_number(p.y) + " of series '" + s.name + "' outside [" +
                                   format_number(axis.min) + ", " + format_number(axis.max) + "]"});
            }
            if (type == ChartType::scatter) {
                if (!p.label) out.push_back({pf + ".label", "scatter points must be labeled"});
                if (!p.x || !std::isfinite(*p.x)) {
                    out.push_back({pf + ".x", "scatter points need a finite x"});
                } else if (spec.x_axis && (*p.x < spec.x_axis->min || *p.x > spec.x_axis->max)) {
                    out.push_back({"x_axis", "x value " + format_number(*p.x) + " of series '" + s.name +
                                                 "' outside [" + format_number(spec.x_axis->min) + ", " +
                                                 format_number(spec.x_axis->max) + "]"});
                }
            } else if (p.x) {
                out.push_back({pf + ".x", "only scatter points carry x"});
            }
            if (type == ChartType::box && p.label) out.push_back({pf + ".label", "box observations are unlabeled"});
        }

        if (detail::is_category_chart(type)) {
            std::vector<std::string> got;
            for (const auto& p : s.points) got.push_back(p.label.value_or(""));
            if (got != spec.x_categories) {
                out.push_back({field + ".points", "labels must match x_categories in order"});
            }
        }
        if (type == ChartType::box && s.points.size() < 5) {
            out.push_back({field + ".points", "box requires ≥5 raw values per series"});
        }
    }

    if (type == ChartType::box) {
        std::vector<std::string> series_names;
        for (const auto& s : spec.series) series_names.push_back(s.name);
        if (spec.x_categories != series_names) {
            out.push_back({"x_categories", "box categories must equal the series names"});
        }
    }
    if (type == ChartType::combo && (bar_marks < 1 || line_marks < 1)) {
        out.push_back({"series", "combo requires ≥1 bar series and ≥1 line series"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
//
// Parsing is strict: unknown keys are rejected so a candidate carrying, say,
// a value-annotation flag cannot sneak through.

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    if (!j.is_object()) throw ParseError(std::string(what) + ": expected object");
    for (const auto& [k, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw ParseError(std::string(what) + ": unknown field '" + k + "'");
        }
    }
}

inline double number_at(const json& j, const char* key, std::string_view what) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ParseError(std::string(what) + ": '" + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

inline std::string string_at(const json& j, const char* key, std::string_view what) {
    if (!j.contains(key) || !j.at(key).is_string()) {
        throw ParseError(std::string(what) + ": '" + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
}

}  // namespace detail

inline json to_json(const AxisSpec& a) {
    json j{{"label", a.label}, {"min", a.min}, {"max", a.max}, {"tick_interval", a.tick_interval}};
    if (a.unit) j["unit"] = *a.unit;
    return j;
}

inline AxisSpec axis_from_json(const json& j) {
    detail::reject_unknown(j, {"label", "min", "max", "tick_interval", "unit"}, "axis");
    AxisSpec a;
    a.label = detail::string_at(j, "label", "axis");
    a.min = detail::number_at(j, "min", "axis");
    a.max = detail::number_at(j, "max", "axis");
    a.tick_interval = detail::number_at(j, "tick_interval", "axis");
    if (j.contains("unit")) a.unit = detail::string_at(j, "unit", "axis");
    return a;
}

inline json to_json(const ChartSpec& spec) {
    json series = json::array();
    for (const auto& s : spec.series) {
        json pts = json::array();
        for (const auto& p : s.points) {
            json pj{{"y", p.y}};
            if (p.label) pj["label"] = *p.label;
            if (p.x) pj["x"] = *p.x;
            pts.push_back(std::move(pj));
        }
        series.push_back({{"name", s.name}, {"mark", std::string(to_string(s.mark))}, {"points", std::move(pts)}});
    }
    json j{{"schema_version", kSchemaVersion},
           {"id", spec.id},
           {"chart_type", std::string(to_string(spec.chart_type))},
           {"topic", spec.topic},
           {"title", spec.title},
           {"x_categories", spec.x_categories},
           {"series", std::move(series)},
           {"y_axis", to_json(spec.y_axis)},
           {"style_seed", spec.style_seed}};
    if (spec.y_axis_secondary) j["y_axis_secondary"] = to_json(*spec.y_axis_secondary);
    if (spec.x_axis) j["x_axis"] = to_json(*spec.x_axis);
    return j;
}

inline ChartSpec spec_from_json(const json& j) {
    detail::reject_unknown(j,
                           {"schema_version", "id", "chart_type", "topic", "title", "x_categories", "series",
                            "y_axis", "y_axis_secondary", "x_axis", "style_seed"},
                           "chart spec");
    if (j.contains("schema_version") &&
        (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion)) {
        throw ParseError("chart spec: unsupported schema_version");
    }
    ChartSpec spec;
    spec.id = detail::string_at(j, "id", "chart spec");
    auto type = parse_chart_type(detail::string_at(j, "chart_type", "chart spec"));
    if (!type) throw ParseError("chart spec: unknown chart_type '" + j.at("chart_type").get<std::string>() + "'");
    spec.chart_type = *type;
    spec.topic = j.contains("topic") ? detail::string_at(j, "topic", "chart spec") : "";
    spec.title = j.contains("title") ? detail::string_at(j, "title", "chart spec") : "";
    if (j.contains("x_categories")) {
        if (!j.at("x_categories").is_array()) throw ParseError("chart spec: x_categories must be an array");
        for (const auto& c : j.at("x_categories")) {
            if (!c.is_string()) throw ParseError("chart spec: x_categories entries must be strings");
            spec.x_categories.push_back(c.get<std::string>());
        }
    }
    if (!j.contains("series") || !j.at("series").is_array()) throw ParseError("chart spec: series must be an array");
    for (const auto& sj : j.at("series")) {
        detail::reject_unknown(sj, {"name", "mark", "points"}, "series");
        SeriesSpec s;
        s.name = detail::string_at(sj, "name", "series");
        auto mark = parse_mark(detail::string_at(sj, "mark", "series"));
        if (!mark) throw ParseError("series: unknown mark '" + sj.at("mark").get<std::string>() + "'");
        s.mark = *mark;
        if (!sj.contains("points") || !sj.at("points").is_array()) throw ParseError("series: points must be an array");
        for (const auto& pj : sj.at("points")) {
            detail::reject_unknown(pj, {"label", "x", "y"}, "point");
            Point p;
            p.y = detail::number_at(pj, "y", "point");
            if (pj.contains("x")) p.x = detail::number_at(pj, "x", "point");
            if (pj.contains("label")) p.label = detail::string_at(pj, "label", "point");
            s.points.push_back(std::move(p));
        }
        spec.series.push_back(std::move(s));
    }
    if (!j.contains("y_axis")) throw ParseError("chart spec: y_axis missing");
    spec.y_axis = axis_from_json(j.at("y_axis"));
    if (j.contains("y_axis_secondary")) spec.y_axis_secondary = axis_from_json(j.at("y_axis_secondary"));
    if (j.contains("x_axis")) spec.x_axis = axis_from_json(j.at("x_axis"));
    if (j.contains("style_seed")) {
        if (!j.at("style_seed").is_number_unsigned()) throw ParseError("chart spec: style_seed must be unsigned");
        spec.style_seed = j.at("style_seed").get<std::uint32_t>();
    }
    return spec;
}

/// Canonical text: sorted keys, compact, shortest round-trip floats.
inline std::string serialize(const ChartSpec& spec) { return to_json(spec).dump(); }

inline ChartSpec parse_spec(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("chart spec: ") + e.what());
    }
    return spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

// Integer count of `unit_exp` decimal units -> nearest double.
inline double decimal_value(std::int64_t units, int unit_exp) {
    if (unit_exp >= 0) {
        double scale = 1.0;
        for (int i = 0; i < unit_exp; ++i) scale *= 10.0;
        return static_cast<double>(units) * scale;
    }
    double div = 1.0;
    for (int i = 0; i < -unit_exp; ++i) div *= 10.0;
    return static_cast<double>(units) / div;
}

// An axis laid out on an integer grid of decimal units.
struct UnitAxis {
    int exp = 0;              // one unit = 10^exp
    std::int64_t tick = 10;   // tick interval in units
    std::int64_t lo = 0;      // axis min in units (a multiple of tick)
    std::int64_t hi = 100;    // axis max in units

    AxisSpec to_axis(std::string label, std::optional<std::string> unit) const {
        return AxisSpec{std::move(label), decimal_value(lo, exp), decimal_value(hi, exp), decimal_value(tick, exp),
                        std::move(unit)};
    }
};

inline UnitAxis sample_unit_axis(Rng& rng, Difficulty diff, bool allow_offset, bool allow_negative, int exp) {
    static const std::vector<std::int64_t> easy_ticks{10, 20, 25, 50};
    static const std::vector<std::int64_t> hard_ticks{30, 40, 60, 70, 150, 250};
    UnitAxis a;
    a.exp = exp;
    a.tick = rng.pick(diff == Difficulty::easy ? easy_ticks : hard_ticks);
    const auto nticks = diff == Difficulty::easy ? rng.range(4, 8) : rng.range(5, 10);
    std::int64_t offset = 0;
    if (allow_offset) offset = rng.range(allow_negative ? -2 : 0, 3);
    a.lo = offset * a.tick;
    a.hi = a.lo + nticks * a.tick;
    return a;
}

// A value strictly inside the axis, off every tick in `forbidden`, never zero.
inline std::int64_t sample_units(Rng& rng, const UnitAxis& a, const std::set<double>& forbidden) {
    for (;;) {
        const std::int64_t v = rng.range(a.lo + 1, a.hi - 1);
        if (v == 0) continue;
        if (((v % a.tick) + a.tick) % a.tick == 0) continue;
        if (forbidden.count(decimal_value(v, a.exp))) continue;
        return v;
    }
}

inline void add_ticks(const AxisSpec& axis, std::set<double>& out) {
    for (double t : axis.ticks()) out.insert(t);
}

inline std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

struct CategoryPool {
    const char* kind;
    std::vector<std::string> labels;
};

inline const std::vector<CategoryPool>& category_pools() {
    static const std::vector<CategoryPool> pools{
        {"Month", {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"}},
        {"Region", {"North", "South", "East", "West", "Central", "Coastal", "Inland", "Highland", "Metro", "Rural",
                    "Border", "Island"}},
        {"Segment", {"Retail", "Wholesale", "Online", "Export", "Services", "Licensing", "Consulting", "Hardware",
                     "Software", "Support", "Leasing", "Training"}},
        {"Tier", {"Basic", "Standard", "Plus", "Premium", "Enterprise", "Ultimate", "Starter", "Growth", "Scale",
                  "Elite", "Pro", "Team"}},
        {"Day", {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"}},
    };
    return pools;
}

inline const std::vector<std::string>& measure_names() {
    static const std::vector<std::string> names{
        "Revenue", "Costs", "Profit", "Volume", "Demand", "Supply", "Output", "Capacity",
        "Usage", "Growth", "Share", "Index", "Spending", "Savings", "Visits", "Orders",
        "Returns", "Emissions", "Enrollment", "Throughput"};
    return names;
}

inline const std::vector<std::string>& point_names() {
    static const std::vector<std::string> names{
        "Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel", "India",
        "Juliett", "Kilo", "Lima", "Mike", "November", "Oscar", "Papa", "Quebec", "Romeo",
        "Sierra", "Tango", "Uniform", "Victor", "Whiskey", "Xray", "Yankee", "Zulu"};
    return names;
}

inline const std::vector<std::string>& unit_names() {
    static const std::vector<std::string> units{"", "%", "USD millions", "thousands", "tonnes", "hours", "points"};
    return units;
}

template <typename T>
std::vector<T> take_distinct(Rng& rng, std::vector<T> pool, std::size_t n) {
    rng.shuffle(pool);
    pool.resize(std::min(n, pool.size()));
    return pool;
}

}  // namespace detail

/// Random chart spec, a pure function of its arguments. Data values never sit
/// on a tick line of any axis and are never zero.
inline ChartSpec sample_spec(std::uint64_t rng_seed, ChartType type, const std::string& topic, Difficulty difficulty,
                             const std::vector<std::string>& topics = default_topics()) {
    if (std::find(topics.begin(), topics.end(), topic) == topics.end()) {
        throw ConfigError("unknown topic '" + topic + "'");
    }
    const std::string stream =
        std::string(to_string(type)) + "|" + topic + "|" + std::string(to_string(difficulty));
    const std::uint64_t key = derive_seed(rng_seed, stream, 0);
    Rng rng(key);
    const bool hard = difficulty == Difficulty::hard;

    ChartSpec spec;
    spec.id = std::string(to_string(type)) + "-" + hex64(key).substr(0, 12);
    spec.chart_type = type;
    spec.topic = topic;
    spec.style_seed = static_cast<std::uint32_t>(rng.next() & 0xffffffffULL);

    const std::string unit = rng.pick(detail::unit_names());
    std::optional<std::string> unit_opt;
    if (!unit.empty()) unit_opt = unit;
    const int exp = unit == "%" ? static_cast<int>(rng.range(-1, 0)) : static_cast<int>(rng.range(-1, 2));

    auto series_count = [&](std::int64_t easy_lo, std::int64_t easy_hi) {
        return static_cast<std::size_t>(hard ? rng.range(3, 5) : rng.range(easy_lo, easy_hi));
    };

    const auto& pool = rng.pick(detail::category_pools());
    auto measures = detail::take_distinct(rng, detail::measure_names(), 6);
    const std::string measure = measures[0];
    const std::string value_label = measure + (unit_opt ? " (" + unit + ")" : "");

    const bool offset_ok = type == ChartType::line || type == ChartType::scatter;
    detail::UnitAxis ya = detail::sample_unit_axis(rng, difficulty, offset_ok, type == ChartType::line, exp);
    spec.y_axis = ya.to_axis(value_label, unit_opt);

    std::optional<detail::UnitAxis> y2;
    std::optional<detail::UnitAxis> xa;
    if (type == ChartType::combo && (hard || rng.chance(0.5))) {
        const int exp2 = static_cast<int>(rng.range(-1, 2));
        y2 = detail::sample_unit_axis(rng, difficulty, false, false, exp2);
        spec.y_axis_secondary = y2->to_axis(measures[1], std::nullopt);
    }
    if (type == ChartType::scatter) {
        const int expx = static_cast<int>(rng.range(-1, 2));
        xa = detail::sample_unit_axis(rng, difficulty, true, false, expx);
        spec.x_axis = xa->to_axis(measures[1], std::nullopt);
    }

    std::set<double> forbidden;
    detail::add_ticks(spec.y_axis, forbidden);
    if (spec.y_axis_secondary) detail::add_ticks(*spec.y_axis_secondary, forbidden);
    if (spec.x_axis) detail::add_ticks(*spec.x_axis, forbidden);

    auto value = [&](const detail::UnitAxis& a) { return detail::decimal_value(detail::sample_units(rng, a, forbidden), a.exp); };

    std::size_t ncat = 0;
    switch (type) {
        case ChartType::radar: ncat = static_cast<std::size_t>(hard ? rng.range(5, 8) : rng.range(3, 6)); break;
        case ChartType::bar:
        case ChartType::line:
        case ChartType::area:
        case ChartType::combo: ncat = static_cast<std::size_t>(hard ? rng.range(6, 12) : rng.range(3, 7)); break;
        default: break;
    }
    if (ncat > 0) {
        // Keep the category order of the pool (months stay chronological).
        std::vector<std::size_t> idx(pool.labels.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        idx = detail::take_distinct(rng, idx, ncat);
        std::sort(idx.begin(), idx.end());
        for (auto i : idx) spec.x_categories.push_back(pool.labels[i]);
    }

    const auto& names_pool = detail::measure_names();
    auto series_names = detail::take_distinct(rng, std::vector<std::string>(names_pool.begin(), names_pool.end()), 5);

    switch (type) {
        case ChartType::bar:
        case ChartType::line:
        case ChartType::area:
        case ChartType::radar: {
            const Mark mark = type == ChartType::bar ? Mark::bar : type == ChartType::area ? Mark::area_fill : Mark::line;
            const std::size_t ns = series_count(1, 2);
            for (std::size_t si = 0; si < ns; ++si) {
                SeriesSpec s{series_names[si], {}, mark};
                for (const auto& c : spec.x_categories) s.points.push_back(Point{c, std::nullopt, value(ya)});
                spec.series.push_back(std::move(s));
            }
            break;
        }
        case ChartType::combo: {
            const std::size_t ns = hard ? static_cast<std::size_t>(rng.range(3, 5)) : 2;
            const std::size_t nbar = hard ? static_cast<std::size_t>(rng.range(1, static_cast<std::int64_t>(ns) - 1)) : 1;
            for (std::size_t si = 0; si < ns; ++si) {
                const Mark mark = si < nbar ? Mark::bar : Mark::line;
                const detail::UnitAxis& axis = (mark == Mark::line && y2) ? *y2 : ya;
                SeriesSpec s{series_names[si], {}, mark};
                for (const auto& c : spec.x_categories) s.points.push_back(Point{c, std::nullopt, value(axis)});
                spec.series.push_back(std::move(s));
            }
            break;
        }
        case ChartType::scatter: {
            const std::size_t ns = series_count(1, 2);
            auto labels = detail::point_names();
            for (std::size_t si = 0; si < ns; ++si) {
                const std::size_t np = static_cast<std::size_t>(hard ? rng.range(8, 15) : rng.range(5, 10));
                auto chosen = detail::take_distinct(rng, labels, np);
                SeriesSpec s{series_names[si], {}, Mark::point};
                for (const auto& l : chosen) s.points.push_back(Point{l, value(*xa), value(ya)});
                spec.series.push_back(std::move(s));
            }
            break;
        }
        case ChartType::box: {
            const std::size_t ns = series_count(1, 2);
            for (std::size_t si = 0; si < ns; ++si) {
                const std::size_t nv = static_cast<std::size_t>(hard ? rng.range(8, 15) : rng.range(5, 9));
                SeriesSpec s{series_names[si], {}, Mark::point};
                for (std::size_t k = 0; k < nv; ++k) s.points.push_back(Point{std::nullopt, std::nullopt, value(ya)});
                spec.x_categories.push_back(s.name);
                spec.series.push_back(std::move(s));
            }
            break;
        }
    }

    const std::string kind = type == ChartType::scatter ? measures[1]
                             : type == ChartType::box   ? std::string("Series")
                                                        : std::string(pool.kind);
    spec.title = detail::capitalize(topic) + ": " + measure + " by " + kind;
    return spec;
}

}  // namespace chartforge
