#include <catch_amalgamated.hpp>

#include "chartforge/qa_engine.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace chartforge;

namespace {

ChartSpec line_spec() {
    ChartSpec s;
    s.id = "line-t";
    s.chart_type = ChartType::line;
    s.topic = "weather";
    s.title = "Rainfall";
    s.x_categories = {"Jan", "Feb", "Mar"};
    s.y_axis = AxisSpec{"Rain", 0, 100, 20, "mm"};
    s.series.push_back(SeriesSpec{"Oslo", {{"Jan", std::nullopt, 37}, {"Feb", std::nullopt, 40}, {"Mar", std::nullopt, 53}},
                                  Mark::line});
    return s;
}

ChartSpec box_spec() {
    ChartSpec s;
    s.id = "box-t";
    s.chart_type = ChartType::box;
    s.topic = "health";
    s.title = "Ages";
    s.x_categories = {"Ward"};
    s.y_axis = AxisSpec{"Age", 0, 10, 2, std::nullopt};
    SeriesSpec se{"Ward", {}, Mark::point};
    for (double v : {1, 2, 3, 4, 5, 6, 7, 8}) se.points.push_back(Point{std::nullopt, std::nullopt, v});
    s.series.push_back(se);
    return s;
}

TypeCounts uniform_counts(std::size_t n) {
    TypeCounts c;
    for (auto t : kAllChartTypes) c[t] = n;
    return c;
}

}  // namespace

TEST_CASE("line questions name series and category and skip tick values", "[qa_engine]") {
    const auto spec = line_spec();
    std::set<double> answers;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto q = generate_qa(spec, seed);
        answers.insert(q.answer_gt);
        CHECK(q.chart_ref == "line-t");
        CHECK(q.source == Source::synthetic);
        CHECK(q.unit == std::optional<std::string>("mm"));
        CHECK(verify_qa(q, spec).pass);
    }
    // 40 is a tick of the 0..100 step 20 axis and is never asked.
    CHECK(answers == std::set<double>{37, 53});
    const auto q = generate_qa(spec, 1);
    CHECK(q.question.rfind("Estimate the value of \"Oslo\" at \"", 0) == 0);
    CHECK(q.question.find("Answer in mm.") != std::string::npos);
}

TEST_CASE("box questions resolve to quartile statistics", "[qa_engine]") {
    const auto spec = box_spec();
    const auto st = box_stats(spec.series[0]);
    // 1..8 gives quartiles 2.75 and 6.25 by linear interpolation.
    CHECK(st.q1 == oracle::quantile_quarter({1, 2, 3, 4, 5, 6, 7, 8}, 1, 1));
    CHECK(st.q3 == oracle::quantile_quarter({1, 2, 3, 4, 5, 6, 7, 8}, 3, 1));
    auto t = resolve_target(spec, "Estimate the upper quartile of \"Ward\".");
    REQUIRE(t);
    CHECK(*target_value(spec, *t) == 6.25);
    CHECK_FALSE(resolve_target(spec, "Estimate the mode of \"Ward\"."));
    CHECK_FALSE(resolve_target(spec, "Estimate the median of \"Nobody\"."));
}

TEST_CASE("verify_qa reports mismatches, unresolvable targets and dangling refs", "[qa_engine]") {
    const auto spec = line_spec();
    auto q = generate_qa(spec, 3);
    const double v = q.answer_gt;
    q.answer_gt = v + 1;
    auto r = verify_qa(q, spec);
    CHECK_FALSE(r.pass);
    CHECK(r.reason == "mismatch: expected " + format_number(v) + ", found " + format_number(v + 1));

    auto q2 = generate_qa(spec, 3);
    q2.question = "Estimate the value of \"Oslo\" at \"Dec\".";
    CHECK(verify_qa(q2, spec).reason == "unresolvable target");

    auto q3 = generate_qa(spec, 3);
    q3.chart_ref = "gone";
    CHECK_THROWS_AS(verify_qa(q3, std::map<std::string, ChartSpec>{{spec.id, spec}}), ReferenceError);
}

TEST_CASE("combo questions name the axis to read", "[qa_engine]") {
    // Easy combos carry a right axis only some of the time; take the first that does.
    std::optional<ChartSpec> found;
    for (std::uint64_t s = 0; s < 50 && !found; ++s) {
        auto c = sample_spec(s, ChartType::combo, default_topics()[2], Difficulty::easy);
        if (c.y_axis_secondary) found = std::move(c);
    }
    REQUIRE(found);
    const ChartSpec& spec = *found;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto q = generate_qa(spec, seed);
        const bool right = q.question.find("read on the right axis.") != std::string::npos;
        const bool left = q.question.find("read on the left axis.") != std::string::npos;
        CHECK(right != left);
        CHECK(verify_qa(q, spec).pass);
    }
}

TEST_CASE("a spec with no usable target cannot produce a question", "[qa_engine]") {
    auto spec = line_spec();
    for (auto& p : spec.series[0].points) p.y = 40;  // every value on a tick
    CHECK_THROWS_AS(generate_qa(spec, 1), GenerationError);
}

TEST_CASE("real import accepts vetted records and rejects bad ones", "[qa_engine]") {
    TempDir dir("real");
    const auto img = dir.write("src/chart7.png", "PNGDATA");
    const std::vector<RealRecord> recs{
        {"What is the peak?", 42.5, "bar", "finance"},
        {"What is the low?", 0.0, "bar", "finance"},
        {"Radar value?", 3.0, "radar", "finance"},
        {"Line value?", -7.0, "line", "energy"},
    };
    const auto res = import_real_chart(img, recs, dir / "store");
    REQUIRE(res.items.size() == 2);
    CHECK(res.items[0].answer_gt == 42.5);
    CHECK(res.items[0].chart_ref == "images/chart7.png");
    CHECK(res.items[0].source == Source::real);
    CHECK(res.items[1].chart_type == ChartType::line);
    REQUIRE(res.rejections.size() == 2);
    CHECK(res.rejections[0].record_index == 1);
    CHECK(res.rejections[1].reason.find("unsupported chart type 'radar'") != std::string::npos);
    CHECK(slurp(dir / "store/images/chart7.png") == "PNGDATA");

    CHECK_THROWS_AS(import_real_chart(dir / "missing.png", recs), InputError);
}

TEST_CASE("real import lines resolve images relative to the file", "[qa_engine]") {
    TempDir dir("reallines");
    dir.write("a.png", "A");
    dir.write("b.png", "B");
    const auto f = dir.write("imports.jsonl",
                             "{\"image\":\"a.png\",\"question\":\"q1\",\"answer\":1.5,\"chart_type\":\"bar\"}\n"
                             "{\"image\":\"b.png\",\"question\":\"q2\",\"answer\":0,\"chart_type\":\"line\"}\n"
                             "{\"image\":\"a.png\",\"question\":\"q3\",\"answer\":2,\"chart_type\":\"combo\"}\n");
    const auto res = import_real_lines(load_real_imports(f));
    REQUIRE(res.items.size() == 2);
    CHECK(res.items[1].question == "q3");
    REQUIRE(res.rejections.size() == 1);
    CHECK(res.rejections[0].record_index == 1);

    const auto bad = dir.write("bad.jsonl", "{\"image\":\"a.png\",\"question\":\"q\",\"answer\":1,\"chart_type\":\"bar\",\"x\":1}\n");
    CHECK_THROWS_AS(load_real_imports(bad), InputError);
}

TEST_CASE("build_dataset is deterministic and independent of job count", "[qa_engine]") {
    DatasetConfig cfg;
    cfg.synthetic_counts = uniform_counts(6);
    const auto a = build_dataset(cfg);
    cfg.jobs = 4;
    const auto b = build_dataset(cfg);
    CHECK(a.items == b.items);
    CHECK(a.specs == b.specs);
    CHECK(a.manifest.total() == 42);
    CHECK(a.manifest.count(Source::synthetic) == 42);
    cfg.seed = 43;
    CHECK(build_dataset(cfg).items != a.items);
}

TEST_CASE("requesting more real items than imported is a shortfall", "[qa_engine]") {
    DatasetConfig cfg;
    cfg.real_counts = {{ChartType::bar, 1}};
    CHECK_THROWS_AS(build_dataset(cfg), ShortfallError);
}

TEST_CASE("datasets survive a write and load round trip", "[qa_engine]") {
    TempDir dir("ds");
    const auto img = dir.write("src/r0.png", "IMG");
    auto imported = import_real_chart(img, {{"How many?", 12.0, "bar", "finance"}});

    DatasetConfig cfg;
    cfg.synthetic_counts = {{ChartType::scatter, 2}, {ChartType::box, 2}};
    cfg.real_counts = {{ChartType::bar, 1}};
    cfg.real_pool = imported.items;
    cfg.real_image_sources = {{"images/r0.png", img}};
    const auto ds = build_dataset(cfg);
    write_dataset(ds, dir / "out");

    const auto back = load_dataset(dir / "out");
    CHECK(back.items == ds.items);
    CHECK(back.specs == ds.specs);
    CHECK(back.manifest.items == ds.manifest.items);
    CHECK(back.manifest.count(Source::real) == 1);
    CHECK(std::filesystem::exists(dir / "out/images/r0.png"));
    CHECK(std::filesystem::exists(dir / "out/images/syn-box-00001.svg"));
    CHECK(std::filesystem::exists(dir / "out/images/syn-box-00001.meta.json"));
    CHECK_THROWS_AS(load_dataset(dir / "nowhere"), InputError);
}

TEST_CASE("no generated answer leaks into its question or its chart text", "[qa_engine]") {
    DatasetConfig cfg;
    cfg.seed = 7;
    cfg.synthetic_counts = uniform_counts(143);
    cfg.jobs = 2;
    const auto ds = build_dataset(cfg);
    REQUIRE(ds.items.size() == 1001);
    for (const auto& q : ds.items) {
        INFO(q.item_id);
        CHECK(q.answer_gt != 0.0);
        CHECK(q.question.find(format_number(q.answer_gt)) == std::string::npos);
        const auto& spec = ds.specs.at(q.chart_ref);
        const auto texts = extract_text_nodes(render(spec).svg_text);
        const auto forms = value_formats(q.answer_gt);
        for (const auto& t : texts) CHECK_FALSE(forms.count(t));
    }
}
