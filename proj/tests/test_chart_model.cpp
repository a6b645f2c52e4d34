#include <catch_amalgamated.hpp>

#include "chartforge/chart_model.hpp"
#include "oracles.hpp"

using namespace chartforge;

namespace {

ChartSpec bar_spec(std::size_t nseries = 3) {
    ChartSpec s;
    s.id = "bar-test";
    s.chart_type = ChartType::bar;
    s.topic = "finance";
    s.title = "Quarterly results";
    s.x_categories = {"Q1", "Q2", "Q3", "Q4"};
    s.y_axis = AxisSpec{"Revenue", 0, 100, 20, std::nullopt};
    const char* names[] = {"Revenue", "Costs", "Profit", "Margin"};
    for (std::size_t i = 0; i < nseries; ++i) {
        SeriesSpec se{names[i], {}, Mark::bar};
        for (std::size_t j = 0; j < s.x_categories.size(); ++j) {
            se.points.push_back(Point{s.x_categories[j], std::nullopt, 11.0 + 7.0 * static_cast<double>(i + j)});
        }
        s.series.push_back(se);
    }
    return s;
}

bool has_violation(const ValidationReport& r, const std::string& field, const std::string& rule_part) {
    for (const auto& v : r) {
        if (v.field == field && v.rule.find(rule_part) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("chart types parse and print exactly seven names", "[chart_model]") {
    std::set<std::string> names;
    for (auto t : kAllChartTypes) {
        names.insert(std::string(to_string(t)));
        CHECK(parse_chart_type(to_string(t)) == t);
    }
    CHECK(names == std::set<std::string>{"box", "area", "radar", "scatter", "bar", "line", "combo"});
    CHECK_FALSE(parse_chart_type("pie"));
    CHECK_FALSE(parse_chart_type("Bar"));
}

TEST_CASE("validate_spec accepts a well-formed three-series bar chart", "[chart_model]") {
    CHECK(validate_spec(bar_spec()).empty());
}

TEST_CASE("validate_spec reports radar with two categories", "[chart_model]") {
    ChartSpec s = bar_spec(1);
    s.chart_type = ChartType::radar;
    s.series[0].mark = Mark::line;
    s.x_categories = {"Q1", "Q2"};
    s.series[0].points.resize(2);
    auto r = validate_spec(s);
    REQUIRE(r.size() == 1);
    CHECK(r[0].field == "x_categories");
    CHECK(r[0].rule == "radar requires ≥3 categories");
}

TEST_CASE("validate_spec reports values outside the axis", "[chart_model]") {
    ChartSpec s = bar_spec(1);
    s.series[0].points[1].y = 120;
    auto r = validate_spec(s);
    REQUIRE(r.size() == 1);
    CHECK(r[0].field == "y_axis");
    CHECK(r[0].rule.find("120") != std::string::npos);
    CHECK(r[0].rule.find("[0, 100]") != std::string::npos);
}

TEST_CASE("validate_spec enforces the remaining invariants", "[chart_model]") {
    SECTION("tick count bounds") {
        ChartSpec s = bar_spec(1);
        s.y_axis.tick_interval = 60;  // 100/60 < 2
        CHECK(has_violation(validate_spec(s), "y_axis", "tick_interval"));
        s.y_axis.tick_interval = 4;  // 25 ticks
        CHECK(has_violation(validate_spec(s), "y_axis", "tick_interval"));
        s.y_axis.tick_interval = 5;  // exactly 20
        CHECK(validate_spec(s).empty());
        s.y_axis.tick_interval = 50;  // exactly 2
        CHECK(validate_spec(s).empty());
    }
    SECTION("min < max") {
        ChartSpec s = bar_spec(1);
        s.y_axis.min = 100;
        CHECK(has_violation(validate_spec(s), "y_axis", "min must be < max"));
    }
    SECTION("duplicate category labels") {
        ChartSpec s = bar_spec(1);
        s.x_categories[1] = "Q1";
        s.series[0].points[1].label = "Q1";
        auto r = validate_spec(s);
        CHECK(has_violation(r, "x_categories", "duplicate"));
        CHECK(has_violation(r, "series[0].points[1].label", "duplicate"));
    }
    SECTION("empty series") {
        ChartSpec s = bar_spec(1);
        s.series[0].points.clear();
        CHECK(has_violation(validate_spec(s), "series[0].points", "at least one point"));
    }
    SECTION("non-finite value") {
        ChartSpec s = bar_spec(1);
        s.series[0].points[0].y = std::nan("");
        CHECK(has_violation(validate_spec(s), "series[0].points[0].y", "finite"));
    }
    SECTION("combo needs both marks") {
        ChartSpec s = bar_spec(2);
        s.chart_type = ChartType::combo;
        CHECK(has_violation(validate_spec(s), "series", "combo requires ≥1 bar series and ≥1 line series"));
        s.series[1].mark = Mark::line;
        CHECK(validate_spec(s).empty());
    }
    SECTION("secondary axis only on combo") {
        ChartSpec s = bar_spec(1);
        s.y_axis_secondary = AxisSpec{"Other", 0, 10, 2, std::nullopt};
        CHECK(has_violation(validate_spec(s), "y_axis_secondary", "only combo"));
    }
    SECTION("box needs five values per series") {
        ChartSpec s;
        s.id = "box-test";
        s.chart_type = ChartType::box;
        s.y_axis = AxisSpec{"v", 0, 10, 2, std::nullopt};
        s.series.push_back(SeriesSpec{"A", {{std::nullopt, std::nullopt, 1}, {std::nullopt, std::nullopt, 2},
                                            {std::nullopt, std::nullopt, 3}, {std::nullopt, std::nullopt, 4}},
                                      Mark::point});
        s.x_categories = {"A"};
        CHECK(has_violation(validate_spec(s), "series[0].points", "box requires ≥5 raw values per series"));
        s.series[0].points.push_back({std::nullopt, std::nullopt, 5});
        CHECK(validate_spec(s).empty());
    }
    SECTION("mark must fit the chart type") {
        ChartSpec s = bar_spec(1);
        s.series[0].mark = Mark::point;
        CHECK(has_violation(validate_spec(s), "series[0].mark", "not allowed"));
    }
    SECTION("quotes are rejected in names") {
        ChartSpec s = bar_spec(1);
        s.series[0].name = "Re\"venue";
        CHECK(has_violation(validate_spec(s), "series[0].name", "'\"'"));
    }
}

TEST_CASE("spec JSON round-trips and rejects unknown keys", "[chart_model]") {
    ChartSpec s = bar_spec();
    const std::string text = serialize(s);
    CHECK(parse_spec(text) == s);
    CHECK(serialize(parse_spec(text)) == text);
    CHECK(text.find("\"schema_version\":1") != std::string::npos);

    json j = json::parse(text);
    j["annotate_values"] = true;
    CHECK_THROWS_AS(parse_spec(j.dump()), ParseError);

    json k = json::parse(text);
    k["series"][0]["points"][0]["text"] = "74";
    CHECK_THROWS_AS(parse_spec(k.dump()), ParseError);

    CHECK_THROWS_AS(parse_spec("{not json"), ParseError);
    json v = json::parse(text);
    v["schema_version"] = 2;
    CHECK_THROWS_AS(parse_spec(v.dump()), ParseError);
}

TEST_CASE("AxisSpec ticks are exact decimals", "[chart_model]") {
    AxisSpec a{"", 0, 0.9, 0.3, std::nullopt};
    CHECK(a.ticks() == std::vector<double>{0, 0.3, 0.6, 0.9});
    AxisSpec b{"", -40, 100, 20, std::nullopt};
    CHECK(b.ticks() == std::vector<double>{-40, -20, 0, 20, 40, 60, 80, 100});
}

TEST_CASE("box statistics follow linear interpolation", "[chart_model]") {
    SECTION("odd count median") {
        auto st = box_stats(std::vector<double>{9, 1, 8, 2, 7, 3, 6, 4, 5});
        CHECK(st.median == 5);
    }
    SECTION("1..8 upper quartile matches the rational oracle") {
        auto st = box_stats(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
        CHECK(st.q3 == oracle::quantile_quarter({1, 2, 3, 4, 5, 6, 7, 8}, 3, 1));
        CHECK(st.q3 == 6.25);
        CHECK(st.q1 == 2.75);
        CHECK(st.median == 4.5);
        CHECK(st.lower_whisker == 1);
        CHECK(st.upper_whisker == 8);
        CHECK(st.outliers.empty());
    }
    SECTION("outliers are cut at 1.5 IQR") {
        auto st = box_stats(std::vector<double>{10, 11, 12, 13, 14, 100});
        // q1 = 11.25, q3 = 13.75, iqr = 2.5, upper fence 17.5
        CHECK(st.upper_whisker == 14);
        CHECK(st.outliers == std::vector<double>{100});
    }
    SECTION("random samples agree with the oracle") {
        Rng rng(99);
        for (int trial = 0; trial < 300; ++trial) {
            const auto n = static_cast<std::size_t>(rng.range(5, 20));
            std::vector<long long> scaled;
            std::vector<double> vals;
            for (std::size_t i = 0; i < n; ++i) {
                const long long u = rng.range(-5000, 5000);
                scaled.push_back(u);
                vals.push_back(static_cast<double>(u) / 10.0);
            }
            auto st = box_stats(vals);
            CHECK(st.q1 == Catch::Approx(oracle::quantile_quarter(scaled, 1, 10)).margin(1e-9));
            CHECK(st.median == Catch::Approx(oracle::quantile_quarter(scaled, 2, 10)).margin(1e-9));
            CHECK(st.q3 == Catch::Approx(oracle::quantile_quarter(scaled, 3, 10)).margin(1e-9));
        }
    }
}

TEST_CASE("sample_spec is deterministic and seed-sensitive", "[chart_model]") {
    auto a = serialize(sample_spec(42, ChartType::bar, "finance", Difficulty::easy));
    auto b = serialize(sample_spec(42, ChartType::bar, "finance", Difficulty::easy));
    auto c = serialize(sample_spec(43, ChartType::bar, "finance", Difficulty::easy));
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("sample_spec combo hard has both marks", "[chart_model]") {
    auto s = sample_spec(7, ChartType::combo, "healthcare", Difficulty::hard);
    int bars = 0, lines = 0;
    for (const auto& se : s.series) (se.mark == Mark::bar ? bars : lines)++;
    CHECK(bars >= 1);
    CHECK(lines >= 1);
    CHECK(validate_spec(s).empty());
}

TEST_CASE("sample_spec rejects unknown topics", "[chart_model]") {
    CHECK_THROWS_AS(sample_spec(1, ChartType::bar, "astrology", Difficulty::easy), ConfigError);
    CHECK_NOTHROW(sample_spec(1, ChartType::bar, "astrology", Difficulty::easy, {"astrology"}));
}

TEST_CASE("sampled specs validate, keep off ticks and scale with difficulty", "[chart_model]") {
    const auto& topics = default_topics();
    CHECK(topics.size() == 38);
    std::size_t values = 0, on_tick = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        for (auto type : kAllChartTypes) {
            const auto diff = seed % 2 ? Difficulty::hard : Difficulty::easy;
            const auto& topic = topics[seed % topics.size()];
            ChartSpec s = sample_spec(seed, type, topic, diff);
            auto report = validate_spec(s);
            INFO(serialize(s) << "\n" << describe(report));
            REQUIRE(report.empty());
            if (type != ChartType::combo) {
                if (diff == Difficulty::hard) {
                    CHECK(s.series.size() >= 3);
                    CHECK(s.series.size() <= 5);
                } else {
                    CHECK(s.series.size() >= 1);
                    CHECK(s.series.size() <= 2);
                }
            }
            for (const auto& se : s.series) {
                const auto ticks = value_axis_for(s, se).ticks();
                for (const auto& p : se.points) {
                    ++values;
                    CHECK(p.y != 0.0);
                    if (std::find(ticks.begin(), ticks.end(), p.y) != ticks.end()) ++on_tick;
                }
            }
        }
    }
    // Far below the 50% ceiling: the sampler never places values on ticks.
    CHECK(on_tick == 0);
    CHECK(values > 10000);
}

TEST_CASE("hard difficulty uses non-round tick intervals", "[chart_model]") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto s = sample_spec(seed, ChartType::line, "energy", Difficulty::hard);
        double t = s.y_axis.tick_interval;
        while (t >= 10) t /= 10;
        while (t < 1) t *= 10;
        t = clean_decimal(t);
        // 25-unit intervals appear in both tiers; 1/2/5 never do for hard charts.
        const std::set<double> round{1, 2, 5};
        CHECK(round.count(t) == 0);
    }
}
