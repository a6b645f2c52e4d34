#pragma once

// Numerical-estimation question generation, ground-truth verification, real
// chart import and benchmark assembly.
//
// Question templates (see docs/templates.md):
//   bar / line / area / radar : Estimate the value of "<series>" at "<category>".
//   combo                     : Estimate the value of "<series>" at "<category>", read on the <left|right> axis.
//   scatter                   : Estimate the y-value of the point labeled "<label>" in series "<series>".
//   box                       : Estimate the <statistic> of "<series>".
// An optional " Answer in <unit>." suffix follows when the value axis has a unit.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chartforge/chart_model.hpp"
#include "chartforge/common.hpp"
#include "chartforge/random.hpp"
#include "chartforge/renderer.hpp"

namespace chartforge {

enum class Source { synthetic, real };

inline std::string_view to_string(Source s) { return s == Source::synthetic ? "synthetic" : "real"; }

inline std::optional<Source> parse_source(std::string_view s) {
    if (s == "synthetic") return Source::synthetic;
    if (s == "real") return Source::real;
    return std::nullopt;
}

struct QaItem {
    std::string item_id;
    std::string chart_ref;  // spec id (synthetic) or store-relative image path (real)
    std::string question;
    double answer_gt = 0.0;
    ChartType chart_type = ChartType::bar;
    Source source = Source::synthetic;
    std::string topic;
    std::optional<std::string> unit;

    bool operator==(const QaItem&) const = default;
};

/// Thrown when a spec offers no usable question target.
struct GenerationError : Error {
    using Error::Error;
};

inline json to_json(const QaItem& q) {
    json j{{"item_id", q.item_id},
           {"chart_ref", q.chart_ref},
           {"question", q.question},
           {"answer_gt", q.answer_gt},
           {"chart_type", std::string(to_string(q.chart_type))},
           {"source", std::string(to_string(q.source))},
           {"topic", q.topic}};
    if (q.unit) j["unit"] = *q.unit;
    return j;
}

inline QaItem qa_item_from_json(const json& j) {
    detail::reject_unknown(j, {"item_id", "chart_ref", "question", "answer_gt", "chart_type", "source", "topic", "unit"},
                           "qa item");
    QaItem q;
    q.item_id = detail::string_at(j, "item_id", "qa item");
    q.chart_ref = detail::string_at(j, "chart_ref", "qa item");
    q.question = detail::string_at(j, "question", "qa item");
    q.answer_gt = detail::number_at(j, "answer_gt", "qa item");
    auto t = parse_chart_type(detail::string_at(j, "chart_type", "qa item"));
    if (!t) throw ParseError("qa item: unknown chart_type");
    q.chart_type = *t;
    auto s = parse_source(detail::string_at(j, "source", "qa item"));
    if (!s) throw ParseError("qa item: unknown source");
    q.source = *s;
    q.topic = j.contains("topic") ? detail::string_at(j, "topic", "qa item") : "";
    if (j.contains("unit")) q.unit = detail::string_at(j, "unit", "qa item");
    return q;
}

// ---------------------------------------------------------------------------
// Targets and templates

struct QaTarget {
    std::string series;
    std::optional<std::string> label;       // category or scatter point label
    std::optional<BoxStatistic> statistic;  // box charts
};

namespace detail {

inline std::string unit_phrase(const std::optional<std::string>& unit) {
    if (!unit || unit->empty()) return "";
    return " Answer in " + (*unit == "%" ? std::string("percent") : *unit) + ".";
}

inline const SeriesSpec* find_series(const ChartSpec& spec, const std::string& name) {
    for (const auto& s : spec.series) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

}  // namespace detail

inline std::string question_text(const ChartSpec& spec, const QaTarget& t) {
    const SeriesSpec* s = detail::find_series(spec, t.series);
    std::optional<std::string> unit;
    if (s) unit = value_axis_for(spec, *s).unit;
    std::string q;
    switch (spec.chart_type) {
        case ChartType::box:
            q = "Estimate the " + std::string(to_string(*t.statistic)) + " of \"" + t.series + "\".";
            break;
        case ChartType::scatter:
            q = "Estimate the y-value of the point labeled \"" + *t.label + "\" in series \"" + t.series + "\".";
            break;
        case ChartType::combo: {
            const bool right = s && spec.y_axis_secondary && s->mark == Mark::line;
            q = "Estimate the value of \"" + t.series + "\" at \"" + *t.label + "\", read on the " +
                (right ? "right" : "left") + " axis.";
            break;
        }
        default:
            q = "Estimate the value of \"" + t.series + "\" at \"" + *t.label + "\".";
            break;
    }
    return q + detail::unit_phrase(unit);
}

/// Exact value a target refers to, or nullopt when it does not resolve.
inline std::optional<double> target_value(const ChartSpec& spec, const QaTarget& t) {
    const SeriesSpec* s = detail::find_series(spec, t.series);
    if (!s) return std::nullopt;
    if (spec.chart_type == ChartType::box) {
        if (!t.statistic || s->points.empty()) return std::nullopt;
        return box_stats(*s).get(*t.statistic);
    }
    if (!t.label) return std::nullopt;
    for (const auto& p : s->points) {
        if (p.label && *p.label == *t.label) return p.y;
    }
    return std::nullopt;
}

/// Parse a generated question back into its target.
inline std::optional<QaTarget> resolve_target(const ChartSpec& spec, const std::string& question) {
    static const std::regex box_re(R"re(^Estimate the (lower whisker|lower quartile|median|upper quartile|upper whisker) of "([^"]*)"\.)re");
    static const std::regex scatter_re(R"re(^Estimate the y-value of the point labeled "([^"]*)" in series "([^"]*)"\.)re");
    static const std::regex combo_re(R"re(^Estimate the value of "([^"]*)" at "([^"]*)", read on the (left|right) axis\.)re");
    static const std::regex value_re(R"re(^Estimate the value of "([^"]*)" at "([^"]*)"\.)re");
    std::smatch m;
    QaTarget t;
    switch (spec.chart_type) {
        case ChartType::box:
            if (!std::regex_search(question, m, box_re)) return std::nullopt;
            t.statistic = parse_box_statistic(m[1].str());
            t.series = m[2].str();
            break;
        case ChartType::scatter:
            if (!std::regex_search(question, m, scatter_re)) return std::nullopt;
            t.label = m[1].str();
            t.series = m[2].str();
            break;
        case ChartType::combo: {
            if (!std::regex_search(question, m, combo_re)) return std::nullopt;
            t.series = m[1].str();
            t.label = m[2].str();
            const SeriesSpec* s = detail::find_series(spec, t.series);
            if (!s) return std::nullopt;
            const bool right = spec.y_axis_secondary && s->mark == Mark::line;
            if ((m[3].str() == "right") != right) return std::nullopt;
            break;
        }
        default:
            if (!std::regex_search(question, m, value_re)) return std::nullopt;
            t.series = m[1].str();
            t.label = m[2].str();
            break;
    }
    if (!target_value(spec, t)) return std::nullopt;
    return t;
}

/// Every question target a spec offers, in a fixed order.
inline std::vector<QaTarget> candidate_targets(const ChartSpec& spec) {
    std::vector<QaTarget> out;
    for (const auto& s : spec.series) {
        if (spec.chart_type == ChartType::box) {
            for (auto st : kAllBoxStatistics) out.push_back(QaTarget{s.name, std::nullopt, st});
            continue;
        }
        for (const auto& p : s.points) {
            if (p.label) out.push_back(QaTarget{s.name, *p.label, std::nullopt});
        }
    }
    return out;
}

/// One question about `spec`. The target is chosen deterministically from
/// `rng_seed` among targets whose answer is nonzero, does not sit exactly on a
/// tick of its axis (the tick label would print it), and does not appear in
/// the question text.
inline QaItem generate_qa(const ChartSpec& spec, std::uint64_t rng_seed) {
    if (auto report = validate_spec(spec); !report.empty()) throw InvalidSpecError(std::move(report));
    struct Candidate {
        QaTarget target;
        std::string question;
        double value;
    };
    std::vector<Candidate> usable;
    for (auto& t : candidate_targets(spec)) {
        auto v = target_value(spec, t);
        if (!v || *v == 0.0) continue;
        const SeriesSpec* series = detail::find_series(spec, t.series);
        const auto ticks = value_axis_for(spec, *series).ticks();
        if (std::find(ticks.begin(), ticks.end(), *v) != ticks.end()) continue;
        std::string q = question_text(spec, t);
        if (q.find(format_number(*v)) != std::string::npos) continue;
        usable.push_back({std::move(t), std::move(q), *v});
    }
    if (usable.empty()) throw GenerationError("spec '" + spec.id + "' has no nonzero, non-leaking question target");
    Rng rng(derive_seed(rng_seed, "qa:" + spec.id, 0));
    auto& pick = usable[static_cast<std::size_t>(rng.below(usable.size()))];

    QaItem item;
    item.item_id = spec.id + "-q";
    item.chart_ref = spec.id;
    item.question = std::move(pick.question);
    item.answer_gt = pick.value;
    item.chart_type = spec.chart_type;
    item.source = Source::synthetic;
    item.topic = spec.topic;
    if (const SeriesSpec* s = detail::find_series(spec, pick.target.series)) item.unit = value_axis_for(spec, *s).unit;
    return item;
}

struct VerifyResult {
    bool pass = false;
    std::string reason;
};

/// Recomputes the answer from the chart spec. Requires a synthetic item whose
/// chart_ref names `spec`.
inline VerifyResult verify_qa(const QaItem& item, const ChartSpec& spec) {
    if (item.source != Source::synthetic) throw InputError("verify_qa: item '" + item.item_id + "' is not synthetic");
    if (item.chart_ref != spec.id) {
        throw ReferenceError("verify_qa: item '" + item.item_id + "' references '" + item.chart_ref +
                             "', not '" + spec.id + "'");
    }
    auto target = resolve_target(spec, item.question);
    if (!target) return {false, "unresolvable target"};
    const double expected = *target_value(spec, *target);
    if (expected != item.answer_gt) {
        return {false, "mismatch: expected " + format_number(expected) + ", found " + format_number(item.answer_gt)};
    }
    return {true, ""};
}

/// Looks the item's chart up in `specs` first; a dangling chart_ref is a
/// ReferenceError.
inline VerifyResult verify_qa(const QaItem& item, const std::map<std::string, ChartSpec>& specs) {
    auto it = specs.find(item.chart_ref);
    if (it == specs.end()) throw ReferenceError("dangling chart_ref '" + item.chart_ref + "' in item '" + item.item_id + "'");
    return verify_qa(item, it->second);
}

// ---------------------------------------------------------------------------
// Real charts

struct RealRecord {
    std::string question;
    double answer = 0.0;
    std::string chart_type;
    std::string topic;
};

struct ImportRejection {
    std::size_t record_index = 0;
    std::string reason;
};

struct ImportResult {
    std::vector<QaItem> items;
    std::vector<ImportRejection> rejections;
};

inline bool real_type_supported(ChartType t) {
    return t == ChartType::bar || t == ChartType::line || t == ChartType::combo;
}

/// Ingests human-vetted records for one chart image. When `store_dir` is set
/// the image is copied to <store_dir>/images/. No ground truth is recomputed.
inline ImportResult import_real_chart(const std::filesystem::path& image_path, const std::vector<RealRecord>& records,
                                      const std::optional<std::filesystem::path>& store_dir = std::nullopt) {
    namespace fs = std::filesystem;
    if (!fs::exists(image_path)) throw InputError("image not found: " + image_path.string());
    const std::string ref = "images/" + image_path.filename().string();
    ImportResult out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto type = parse_chart_type(r.chart_type);
        if (!type || !real_type_supported(*type)) {
            out.rejections.push_back({i, "record " + std::to_string(i) + ": unsupported chart type '" + r.chart_type + "'"});
            continue;
        }
        if (!std::isfinite(r.answer) || r.answer == 0.0) {
            out.rejections.push_back({i, "record " + std::to_string(i) + ": answer must be a nonzero finite number"});
            continue;
        }
        if (trim(r.question).empty()) {
            out.rejections.push_back({i, "record " + std::to_string(i) + ": empty question"});
            continue;
        }
        QaItem q;
        q.item_id = "real-" + image_path.stem().string() + "-" + std::to_string(i);
        q.chart_ref = ref;
        q.question = r.question;
        q.answer_gt = r.answer;
        q.chart_type = *type;
        q.source = Source::real;
        q.topic = r.topic;
        out.items.push_back(std::move(q));
    }
    if (store_dir && !out.items.empty()) {
        fs::create_directories(*store_dir / "images");
        const fs::path dest = *store_dir / ref;
        if (fs::exists(dest) && fs::file_size(dest) != fs::file_size(image_path)) {
            throw InputError("image name collision in store: " + ref);
        }
        fs::copy_file(image_path, dest, fs::copy_options::overwrite_existing);
    }
    return out;
}

/// One line of real_imports.jsonl, with `image` resolved against the file's
/// directory.
struct RealImportLine {
    std::filesystem::path image;
    RealRecord record;
};

inline std::vector<RealImportLine> load_real_imports(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<RealImportLine> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            detail::reject_unknown(j, {"image", "question", "answer", "chart_type", "topic"}, "real import");
            RealImportLine r;
            std::filesystem::path img = detail::string_at(j, "image", "real import");
            r.image = img.is_absolute() ? img : path.parent_path() / img;
            r.record.question = detail::string_at(j, "question", "real import");
            r.record.answer = detail::number_at(j, "answer", "real import");
            r.record.chart_type = detail::string_at(j, "chart_type", "real import");
            r.record.topic = j.contains("topic") ? detail::string_at(j, "topic", "real import") : "";
            out.push_back(std::move(r));
        } catch (const ParseError& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

/// Imports every line, grouped by image in first-appearance order. Rejections
/// carry the line index within the file.
inline ImportResult import_real_lines(const std::vector<RealImportLine>& lines,
                                      const std::optional<std::filesystem::path>& store_dir = std::nullopt) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string key = lines[i].image.string();
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(i);
    }
    ImportResult out;
    for (const auto& key : order) {
        std::vector<RealRecord> recs;
        for (auto i : groups[key]) recs.push_back(lines[i].record);
        auto r = import_real_chart(key, recs, store_dir);
        for (auto& item : r.items) out.items.push_back(std::move(item));
        for (auto& rej : r.rejections) {
            const std::size_t line_index = groups[key][rej.record_index];
            out.rejections.push_back({line_index, "line " + std::to_string(line_index) + ": " + rej.reason});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset assembly

using TypeCounts = std::map<ChartType, std::size_t>;

/// Per-type synthetic counts of the full benchmark (2,101 items).
inline TypeCounts benchmark_synthetic_counts() {
    return {{ChartType::box, 91},  {ChartType::area, 164}, {ChartType::radar, 156}, {ChartType::scatter, 457},
            {ChartType::bar, 358}, {ChartType::line, 302}, {ChartType::combo, 573}};
}

/// Per-type real counts of the full benchmark (352 items).
inline TypeCounts benchmark_real_counts() {
    return {{ChartType::bar, 112}, {ChartType::line, 115}, {ChartType::combo, 125}};
}

struct DatasetConfig {
    std::string dataset_id = "crbench";
    std::uint64_t seed = 42;
    TypeCounts synthetic_counts;
    TypeCounts real_counts;
    std::vector<std::string> topics = default_topics();
    double hard_fraction = 0.5;
    std::vector<QaItem> real_pool;          // already imported real items
    std::map<std::string, std::filesystem::path> real_image_sources;  // chart_ref -> original image file
    std::vector<ChartSpec> extra_specs;     // accepted candidates from the self-repair pipeline
    std::size_t jobs = 1;
};

struct DatasetManifest {
    std::string dataset_id;
    std::vector<std::string> items;  // sorted item ids
    std::map<Source, TypeCounts> counts;
    std::uint64_t seed = 42;
    int schema_version = kSchemaVersion;

    std::size_t total() const { return items.size(); }

    std::size_t count(Source s) const {
        std::size_t n = 0;
        if (auto it = counts.find(s); it != counts.end()) {
            for (const auto& [_, c] : it->second) n += c;
        }
        return n;
    }
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<QaItem> items;                       // sorted by item_id
    std::map<std::string, ChartSpec> specs;          // by spec id
    std::map<std::string, std::filesystem::path> real_images;  // chart_ref -> source file

    const QaItem* find(const std::string& item_id) const {
        auto it = std::lower_bound(items.begin(), items.end(), item_id,
                                   [](const QaItem& q, const std::string& id) { return q.item_id < id; });
        return it != items.end() && it->item_id == item_id ? &*it : nullptr;
    }
};

inline json to_json(const DatasetManifest& m) {
    json counts = json::object();
    json totals = json::object();
    for (Source s : {Source::synthetic, Source::real}) {
        json per = json::object();
        if (auto it = m.counts.find(s); it != m.counts.end()) {
            for (const auto& [t, c] : it->second) per[std::string(to_string(t))] = c;
        }
        counts[std::string(to_string(s))] = per;
        totals[std::string(to_string(s))] = m.count(s);
    }
    totals["all"] = m.total();
    return json{{"schema_version", m.schema_version}, {"dataset_id", m.dataset_id}, {"seed", m.seed},
                {"items", m.items},                   {"counts", counts},           {"totals", totals}};
}

inline DatasetManifest manifest_from_json(const json& j) {
    DatasetManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.items = j.at("items").get<std::vector<std::string>>();
    for (const auto& [src, per] : j.at("counts").items()) {
        auto s = parse_source(src);
        if (!s) throw ParseError("manifest: unknown source '" + src + "'");
        for (const auto& [t, c] : per.items()) {
            auto type = parse_chart_type(t);
            if (!type) throw ParseError("manifest: unknown chart type '" + t + "'");
            m.counts[*s][*type] = c.get<std::size_t>();
        }
    }
    return m;
}

namespace detail {

inline std::string padded(std::size_t i, int width = 5) {
    std::string s = std::to_string(i);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return s;
}

}  // namespace detail

/// Deterministic benchmark assembly. Synthetic item i of type T depends only on
/// (seed, T, i); topics cycle round-robin so every topic gets an equal share.
/// Every synthetic item passes verify_qa before the dataset is returned.
inline Dataset build_dataset(const DatasetConfig& cfg) {
    if (cfg.topics.empty()) throw ConfigError("topic list is empty");
    if (cfg.hard_fraction < 0.0 || cfg.hard_fraction > 1.0) throw ConfigError("hard_fraction must lie in [0, 1]");

    // Real items: first N of each type from the pool, in pool order.
    std::vector<QaItem> real_items;
    for (const auto& [type, want] : cfg.real_counts) {
        if (want == 0) continue;
        std::vector<const QaItem*> avail;
        for (const auto& q : cfg.real_pool) {
            if (q.chart_type == type && q.source == Source::real) avail.push_back(&q);
        }
        if (avail.size() < want) {
            throw ShortfallError("insufficient real imports for " + std::string(to_string(type)) + ": requested " +
                                 std::to_string(want) + ", available " + std::to_string(avail.size()));
        }
        for (std::size_t i = 0; i < want; ++i) {
            QaItem q = *avail[i];
            q.item_id = "real-" + std::string(to_string(type)) + "-" + detail::padded(i);
            real_items.push_back(std::move(q));
        }
    }

    struct Job {
        ChartType type;
        std::size_t index;
        const ChartSpec* extra;
    };
    std::vector<Job> jobs;
    for (const auto& [type, n] : cfg.synthetic_counts) {
        for (std::size_t i = 0; i < n; ++i) jobs.push_back({type, i, nullptr});
    }
    std::map<ChartType, std::size_t> extra_index;
    for (const auto& s : cfg.extra_specs) jobs.push_back({s.chart_type, extra_index[s.chart_type]++, &s});

    std::vector<ChartSpec> specs(jobs.size());
    std::vector<QaItem> synth(jobs.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t k) {
        const Job& job = jobs[k];
        const std::string tname(to_string(job.type));
        ChartSpec spec;
        std::string id;
        if (job.extra) {
            spec = *job.extra;
            id = "syn-" + tname + "-x" + detail::padded(job.index);
        } else {
            const std::size_t type_offset = static_cast<std::size_t>(job.type) * 5;
            const std::string& topic = cfg.topics[(job.index + type_offset) % cfg.topics.size()];
            Rng diff_rng(derive_seed(cfg.seed, "difficulty:" + tname, job.index));
            const Difficulty diff = diff_rng.chance(cfg.hard_fraction) ? Difficulty::hard : Difficulty::easy;
            spec = sample_spec(derive_seed(cfg.seed, "spec:" + tname, job.index), job.type, topic, diff, cfg.topics);
            id = "syn-" + tname + "-" + detail::padded(job.index);
        }
        spec.id = id;
        if (auto report = validate_spec(spec); !report.empty()) throw InvalidSpecError(std::move(report));
        QaItem item = generate_qa(spec, derive_seed(cfg.seed, "qa:" + tname, job.index));
        item.item_id = id + "-q";
        auto v = verify_qa(item, spec);
        if (!v.pass) throw Error("generated item '" + item.item_id + "' failed verification: " + v.reason);
        specs[k] = std::move(spec);
        synth[k] = std::move(item);
    });

    Dataset ds;
    ds.manifest.dataset_id = cfg.dataset_id;
    ds.manifest.seed = cfg.seed;
    for (auto& s : specs) {
        std::string id = s.id;
        ds.specs.emplace(std::move(id), std::move(s));
    }
    for (const auto& q : real_items) {
        if (auto it = cfg.real_image_sources.find(q.chart_ref); it != cfg.real_image_sources.end()) {
            ds.real_images[q.chart_ref] = it->second;
        }
    }
    for (auto& q : synth) ds.items.push_back(std::move(q));
    for (auto& q : real_items) ds.items.push_back(std::move(q));
    std::sort(ds.items.begin(), ds.items.end(), [](const QaItem& a, const QaItem& b) { return a.item_id < b.item_id; });
    for (std::size_t i = 1; i < ds.items.size(); ++i) {
        if (ds.items[i].item_id == ds.items[i - 1].item_id) throw Error("duplicate item id " + ds.items[i].item_id);
    }
    for (const auto& q : ds.items) {
        ds.manifest.items.push_back(q.item_id);
        ds.manifest.counts[q.source][q.chart_type] += 1;
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset store: charts/, images/, items.jsonl, manifest.json

namespace detail {

inline void write_text(const std::filesystem::path& p, std::string_view text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Writes the store. Synthetic charts are rendered to images/<id>.svg with a
/// .meta.json sidecar; real images are copied from `real_images`.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                          const RasterExporter& raster = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "charts");
    fs::create_directories(dir / "images");
    for (const auto& [id, spec] : ds.specs) {
        detail::write_text(dir / "charts" / (id + ".json"), serialize(spec) + "\n");
        RenderedChart r = render(spec);
        detail::write_text(dir / "images" / (id + ".svg"), r.svg_text);
        detail::write_text(dir / "images" / (id + ".meta.json"), render_meta(r).dump() + "\n");
        if (raster) raster(r, dir / "images" / (id + ".png"));
    }
    for (const auto& q : ds.items) {
        if (q.source != Source::real) continue;
        auto it = ds.real_images.find(q.chart_ref);
        if (it == ds.real_images.end()) continue;
        const fs::path dest = dir / q.chart_ref;
        if (!fs::exists(dest)) fs::copy_file(it->second, dest);
    }
    std::string lines;
    for (const auto& q : ds.items) lines += to_json(q).dump() + "\n";
    detail::write_text(dir / "items.jsonl", lines);
    detail::write_text(dir / "manifest.json", to_json(ds.manifest).dump(2) + "\n");
}

inline std::vector<QaItem> load_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<QaItem> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(qa_item_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

/// Loads items and manifest (and chart specs when present).
inline Dataset load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    Dataset ds;
    const fs::path manifest = dir / "manifest.json";
    if (!fs::exists(manifest)) throw InputError("missing " + manifest.string());
    try {
        ds.manifest = manifest_from_json(json::parse(detail::read_text(manifest)));
    } catch (const json::exception& e) {
        throw InputError(manifest.string() + ": " + e.what());
    }
    ds.items = load_items(dir / "items.jsonl");
    std::sort(ds.items.begin(), ds.items.end(), [](const QaItem& a, const QaItem& b) { return a.item_id < b.item_id; });
    if (fs::exists(dir / "charts")) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir / "charts")) {
            if (e.path().extension() == ".json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            ChartSpec s = parse_spec(detail::read_text(f));
            std::string id = s.id;
            ds.specs.emplace(std::move(id), std::move(s));
        }
    }
    return ds;
}

}  // namespace chartforge
