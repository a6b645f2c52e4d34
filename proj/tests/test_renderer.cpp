#include <catch_amalgamated.hpp>

#include "chartforge/chart_model.hpp"
#include "chartforge/renderer.hpp"
#include "svg_probe.hpp"

using namespace chartforge;

namespace {

ChartSpec simple_bar() {
    ChartSpec s;
    s.id = "bar-r";
    s.chart_type = ChartType::bar;
    s.topic = "finance";
    s.title = "Sales by quarter";
    s.x_categories = {"Q", "R", "S"};
    s.y_axis = AxisSpec{"Units", 0, 100, 20, std::nullopt};
    s.series.push_back(SeriesSpec{"North", {{"Q", std::nullopt, 37}, {"R", std::nullopt, 100}, {"S", std::nullopt, 0}},
                                  Mark::bar});
    return s;
}

std::vector<ChartSpec> sampled_specs(int per_type) {
    std::vector<ChartSpec> out;
    const auto& topics = default_topics();
    for (int k = 0; k < per_type; ++k) {
        for (auto t : kAllChartTypes) {
            const auto diff = (k % 2) ? Difficulty::hard : Difficulty::easy;
            out.push_back(sample_spec(1000 + static_cast<std::uint64_t>(k), t, topics[static_cast<std::size_t>(k) % topics.size()], diff));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("bars at the axis extremes land on the plot edges", "[renderer]") {
    const auto r = render(simple_bar());
    const auto els = probe::elements_by_id(r.svg_text);
    const auto& top = els.at("mark-s0-p1");
    CHECK(std::abs(std::stod(top.at("y")) - 70.0) <= 0.5);
    const auto& zero = els.at("mark-s0-p2");
    CHECK(std::stod(zero.at("height")) == 0.0);
    CHECK(value_to_y(0, simple_bar().y_axis) == 500.0);
    CHECK(value_to_y(100, simple_bar().y_axis) == 70.0);
}

TEST_CASE("text nodes carry the title and tick labels only", "[renderer]") {
    const auto r = render(simple_bar());
    const auto texts = extract_text_nodes(r.svg_text);
    std::set<std::string> got(texts.begin(), texts.end());
    CHECK(got.count("Sales by quarter"));
    for (const char* t : {"0", "20", "40", "60", "80", "100"}) CHECK(got.count(t));
    CHECK_FALSE(got.count("37"));

    ChartSpec untitled = simple_bar();
    untitled.title.clear();
    CHECK(render(untitled).svg_text.find("id=\"title\"") == std::string::npos);
}

TEST_CASE("tick labels that equal a data value are caught by the audit", "[renderer]") {
    // 100 is both a tick and a value here; the sampler never produces this.
    const auto spec = simple_bar();
    const auto hits = annotation_audit(spec, render(spec).svg_text);
    CHECK(std::set<std::string>(hits.begin(), hits.end()) == std::set<std::string>{"0", "100"});
}

TEST_CASE("extract_text_nodes rejects malformed markup", "[renderer]") {
    CHECK_THROWS_AS(extract_text_nodes("<svg><text>a</svg>"), ParseError);
    CHECK_THROWS_AS(extract_text_nodes("<svg><text>a</text>"), ParseError);
    CHECK_THROWS_AS(extract_text_nodes("<svg></svg><svg></svg>"), ParseError);
    CHECK_THROWS_AS(extract_text_nodes("<svg><text>&bogus;</text></svg>"), ParseError);
    const auto ok = extract_text_nodes("<svg><text x=\"1\">a &amp; b</text><text>c</text></svg>");
    CHECK(ok == std::vector<std::string>{"a & b", "c"});
}

TEST_CASE("value_formats covers plain, grouped, percent and currency forms", "[renderer]") {
    const auto f = value_formats(1234.5);
    for (const char* s : {"1234.5", "1,234.5", "1234.50", "$1234.5", "1234.5%", "$1,234.5", "1,234.50%"}) {
        INFO(s);
        CHECK(f.count(s));
    }
    CHECK_FALSE(f.count("1234"));
    CHECK(value_formats(-5).count("-5"));
}

TEST_CASE("render is deterministic and rejects invalid specs", "[renderer]") {
    const auto spec = sample_spec(9, ChartType::combo, default_topics()[0], Difficulty::hard);
    CHECK(render(spec).svg_text == render(spec).svg_text);
    ChartSpec bad = simple_bar();
    bad.y_axis.max = bad.y_axis.min;
    CHECK_THROWS_AS(render(bad), InvalidSpecError);
}

TEST_CASE("series colors follow the palette offset by style_seed", "[renderer]") {
    auto spec = sample_spec(3, ChartType::line, default_topics()[1], Difficulty::hard);
    for (std::uint32_t seed : {0u, 3u, 17u}) {
        spec.style_seed = seed;
        const auto r = render(spec);
        REQUIRE(r.palette.size() == spec.series.size());
        for (std::size_t i = 0; i < spec.series.size(); ++i) {
            CHECK(r.palette[i] == palette10()[(i + seed) % 10]);
        }
    }
}

TEST_CASE("render_meta records the chart id and size", "[renderer]") {
    const auto r = render(simple_bar());
    const auto m = render_meta(r);
    CHECK(m.at("spec_id") == "bar-r");
    CHECK(m.at("width") == 800);
    CHECK(m.at("height") == 600);
}

TEST_CASE("inverse pixel mapping recovers every value of sampled charts", "[renderer]") {
    std::size_t checked = 0;
    for (const auto& spec : sampled_specs(30)) {
        const auto r = render(spec);
        for (const auto& rec : probe::recover(spec, r.svg_text)) {
            INFO(spec.id << " " << rec.where);
            CHECK(std::abs(rec.recovered - rec.expected) <= rec.span / 1e4);
            ++checked;
        }
        CHECK(annotation_audit(spec, r.svg_text).empty());
    }
    CHECK(checked > 1000);
}
