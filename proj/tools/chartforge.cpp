// chartforge command-line tool.
//
// Exit codes: 0 success, 1 validation or input error, 2 transport error,
// 3 partial completion.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chartforge/chartforge.hpp"
#include "chartforge/http_client.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chartforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitTransport = 2;
constexpr int kExitPartial = 3;

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    out << text;
}

// "bar=3,radar=2" -> counts
TypeCounts parse_counts(const std::string& text) {
    TypeCounts out;
    std::stringstream ss(text);
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        entry = trim(entry);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw ConfigError("count entry '" + entry + "' must be type=N");
        auto type = parse_chart_type(trim(entry.substr(0, eq)));
        if (!type) throw ConfigError("unknown chart type in '" + entry + "'");
        const std::string num = trim(entry.substr(eq + 1));
        if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("count in '" + entry + "' must be a non-negative integer");
        }
        out[*type] = std::stoul(num);
    }
    return out;
}

struct ClientOptions {
    ClientConfig cfg;
    std::string mock_script;

    void add_to(CLI::App* app) {
        app->add_option("--endpoint", cfg.endpoint_url, "Chat-completions endpoint base URL")->capture_default_str();
        app->add_option("--model", cfg.model_name, "Model name sent to the endpoint")->capture_default_str();
        app->add_option("--api-key-env", cfg.api_key_env, "Environment variable holding the API key")
            ->capture_default_str();
        app->add_option("--max-retries", cfg.max_retries, "Retries on transient failures")->capture_default_str();
        app->add_option("--timeout", cfg.timeout_s, "Request timeout in seconds")->capture_default_str();
        app->add_option("--max-tokens", cfg.max_tokens, "Completion token limit")->capture_default_str();
        app->add_option("--mock-script", mock_script, "Use a scripted mock client instead of the endpoint");
    }

    std::unique_ptr<ChatClient> make() const {
        cfg.validate();
        if (!mock_script.empty()) {
            auto m = std::make_unique<MockClient>();
            try {
                m->load_script(json::parse(read_file(mock_script)));
            } catch (const json::exception& e) {
                throw InputError(mock_script + ": " + e.what());
            }
            return m;
        }
        return std::make_unique<HttpChatClient>(cfg);
    }
};

/// Chart images for model prompts: a PNG next to the SVG wins when present.
ImageResolver dataset_images(const fs::path& dir) {
    return [dir](const QaItem& item) -> std::optional<ImagePart> {
        std::vector<std::pair<fs::path, std::string>> candidates;
        if (item.source == Source::synthetic) {
            candidates.emplace_back(dir / "images" / (item.chart_ref + ".png"), "image/png");
            candidates.emplace_back(dir / "images" / (item.chart_ref + ".svg"), "image/svg+xml");
        } else {
            const fs::path p = dir / item.chart_ref;
            std::string ext = to_lower(p.extension().string());
            std::string mime = ext == ".png" ? "image/png" : (ext == ".svg" ? "image/svg+xml" : "image/jpeg");
            candidates.emplace_back(p, mime);
        }
        for (const auto& [path, mime] : candidates) {
            if (fs::exists(path)) return ImagePart{mime, read_file(path)};
        }
        return std::nullopt;
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chart benchmark generation, evaluation, reward and curation toolkit", "chartforge"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.set_config("--config", "", "TOML-style configuration file; flags override it");
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    app.add_option("--seed", seed, "Random seed")->envname("CHARTFORGE_SEED")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker thread bound")->check(CLI::PositiveNumber)->capture_default_str();

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "Build a benchmark dataset directory");
    std::string gen_out, gen_counts, gen_real_counts, gen_real_imports, gen_dataset_id = "crbench";
    double gen_hard = 0.5;
    bool gen_force = false;
    std::size_t gen_expand = 0, gen_max_repair = 3;
    std::string gen_expand_mode = "self";
    ClientOptions gen_client;
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--count", gen_counts, "Synthetic counts, e.g. bar=3,radar=2 (default: full benchmark)");
    gen->add_option("--real-imports", gen_real_imports, "real_imports.jsonl with vetted real-chart records");
    gen->add_option("--real-count", gen_real_counts, "Real counts, e.g. bar=10 (default with imports: full benchmark)");
    gen->add_option("--hard-fraction", gen_hard, "Share of hard-difficulty specs")->capture_default_str();
    gen->add_option("--dataset-id", gen_dataset_id)->capture_default_str();
    gen->add_flag("--force", gen_force, "Replace prior output in --out");
    gen->add_option("--expand", gen_expand, "Extra model-proposed specs to request (needs a client)");
    gen->add_option("--expand-mode", gen_expand_mode, "self or evol")->check(CLI::IsMember({"self", "evol"}));
    gen->add_option("--max-repair", gen_max_repair, "Validation attempts per proposed spec")->capture_default_str();
    gen_client.add_to(gen);

    // render -----------------------------------------------------------------
    auto* ren = app.add_subcommand("render", "Render one chart spec to SVG");
    std::string ren_spec, ren_out;
    ren->add_option("--spec", ren_spec, "Chart spec JSON")->required();
    ren->add_option("--out", ren_out, "Output SVG path (a .meta.json sidecar is written next to it)")->required();

    // import-real ------------------------------------------------------------
    auto* imp = app.add_subcommand("import-real", "Ingest vetted real-chart records into a store");
    std::string imp_input, imp_store;
    imp->add_option("--input", imp_input, "real_imports.jsonl")->required();
    imp->add_option("--store", imp_store, "Store directory")->required();

    // evaluate ---------------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "Score model responses against a dataset");
    std::string ev_dataset, ev_responses, ev_out, ev_mode = "optional_cot", ev_label = "model";
    double ev_tau = kDefaultTau;
    ev->add_option("--dataset", ev_dataset, "Dataset directory")->required();
    ev->add_option("--responses", ev_responses, "responses.jsonl")->required();
    ev->add_option("--out", ev_out, "Report directory")->required();
    ev->add_option("--tau", ev_tau, "Relative tolerance")->capture_default_str();
    ev->add_option("--mode", ev_mode, "Prompt mode used for the responses")
        ->check(CLI::IsMember({"direct", "optional_cot", "forced_cot"}))
        ->capture_default_str();
    ev->add_option("--label", ev_label, "Row label in report.txt")->capture_default_str();

    // reward -----------------------------------------------------------------
    auto* rw = app.add_subcommand("reward", "Compute per-response rewards");
    std::string rw_input, rw_out, rw_dataset;
    double rw_eps = kDefaultEpsilon;
    rw->add_option("--input", rw_input, "JSONL of {item_id, raw_text[, answer_gt]}")->required();
    rw->add_option("--dataset", rw_dataset, "Dataset directory supplying answer_gt by item_id");
    rw->add_option("--epsilon", rw_eps, "Accuracy-reward tolerance")->capture_default_str();
    rw->add_option("--out", rw_out, "Output JSONL (default stdout)");

    // advantages -------------------------------------------------------------
    auto* adv = app.add_subcommand("advantages", "Group-normalized advantages");
    std::string adv_input, adv_out;
    double adv_guard = kDefaultStdGuard;
    adv->add_option("--input", adv_input, "JSONL of {prompt_id, rewards:[...]} or {prompt_id, reward}")->required();
    adv->add_option("--std-guard", adv_guard, "Groups with std below this get zero advantages")->capture_default_str();
    adv->add_option("--out", adv_out, "Output JSONL (default stdout)");

    // curate -----------------------------------------------------------------
    auto* cur = app.add_subcommand("curate", "Multi-round inference logs and boundary selection");
    cur->require_subcommand(1);
    auto* rounds = cur->add_subcommand("rounds", "Run the round plan over a dataset");
    std::string rounds_dataset, rounds_out, rounds_plan = "direct:0,direct:0.9,forced_cot:0.9,optional_cot:0.9";
    bool rounds_resume = false;
    ClientOptions rounds_client;
    rounds->add_option("--dataset", rounds_dataset, "Dataset directory")->required();
    rounds->add_option("--out", rounds_out, "Output directory (log.jsonl, cursor.json)")->required();
    rounds->add_option("--plan", rounds_plan, "mode:temperature list")->capture_default_str();
    rounds->add_flag("--resume", rounds_resume, "Continue from <out>/cursor.json");
    rounds_client.add_to(rounds);
    auto* bnd = cur->add_subcommand("boundary", "Print items with mixed correctness across rounds");
    std::string bnd_log, bnd_out;
    bnd->add_option("--log", bnd_log, "Inference log JSONL")->required();
    bnd->add_option("--out", bnd_out, "Also write the ids to this file");

    // distill ----------------------------------------------------------------
    auto* dst = app.add_subcommand("distill", "Collect validated reasoning chains from a teacher");
    std::string dst_dataset, dst_out;
    std::size_t dst_target = kDefaultSftTarget, dst_attempts = 1;
    std::vector<std::string> dst_leaks;
    ClientOptions dst_client;
    dst->add_option("--dataset", dst_dataset, "Dataset directory")->required();
    dst->add_option("--out", dst_out, "Output directory (cot.jsonl, stats.json)")->required();
    dst->add_option("--target", dst_target, "Samples wanted")->capture_default_str();
    dst->add_option("--max-attempts", dst_attempts, "Teacher calls per item")->capture_default_str();
    dst->add_option("--leak-phrase", dst_leaks, "Leakage phrase (repeatable; replaces the defaults)");
    dst_client.add_to(dst);

    // Lets a replayed manifest config select its subcommand.
    for (auto* sc : app.get_subcommands({})) {
        sc->configurable();
        for (auto* nested : sc->get_subcommands({})) nested->configurable();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    // Recorded in every run manifest: the effective configuration as TOML.
    const std::string config_text = app.config_to_str(false, false);
    auto run_manifest = [&](const std::string& subcommand) {
        return json{{"tool_version", kToolVersion},
                    {"subcommand", subcommand},
                    {"seed", seed},
                    {"config_hash", hex64(fnv1a64(config_text))},
                    {"config", config_text}};
    };

    try {
        if (*gen) {
            const fs::path out = gen_out;
            static const std::vector<std::string> ours{"charts", "images", "items.jsonl", "manifest.json",
                                                       "run_manifest.json", "import_rejections.jsonl",
                                                       "repair_log.jsonl"};
            if (fs::exists(out) && !fs::is_empty(out)) {
                if (!gen_force) {
                    std::cerr << "error: " << out.string()
                              << " already holds output; pass --force to replace it\n";
                    return kExitInput;
                }
                for (const auto& name : ours) fs::remove_all(out / name);
            }
            DatasetConfig cfg;
            cfg.dataset_id = gen_dataset_id;
            cfg.seed = seed;
            cfg.jobs = jobs;
            cfg.hard_fraction = gen_hard;
            cfg.synthetic_counts = gen_counts.empty() ? benchmark_synthetic_counts() : parse_counts(gen_counts);
            std::vector<ImportRejection> rejections;
            if (!gen_real_imports.empty()) {
                auto lines = load_real_imports(gen_real_imports);
                auto imported = import_real_lines(lines);
                cfg.real_pool = std::move(imported.items);
                rejections = std::move(imported.rejections);
                for (const auto& l : lines) cfg.real_image_sources["images/" + l.image.filename().string()] = l.image;
                cfg.real_counts = gen_real_counts.empty() ? benchmark_real_counts() : parse_counts(gen_real_counts);
            } else if (!gen_real_counts.empty()) {
                throw ConfigError("--real-count needs --real-imports");
            }

            std::string repair_log;
            int code = kExitOk;
            if (gen_expand > 0) {
                auto client = gen_client.make();
                std::vector<ChartSpec> seeds;
                for (ChartType t : kAllChartTypes) {
                    const std::string tname(to_string(t));
                    seeds.push_back(sample_spec(derive_seed(seed, "seed-pool:" + tname, 0), t, cfg.topics[0],
                                                Difficulty::easy, cfg.topics));
                }
                ExpansionOptions eo;
                eo.seed = seed;
                eo.topics = cfg.topics;
                std::vector<std::string> candidates;
                try {
                    candidates = gen_expand_mode == "evol"
                                     ? evol_instruct_expand(seeds, *client, gen_client.cfg, gen_expand, eo)
                                     : self_instruct_expand(seeds, *client, gen_client.cfg, gen_expand, eo);
                } catch (const ExpansionError& e) {
                    std::cerr << "warning: " << e.what() << "; keeping " << e.partial.size() << " candidates\n";
                    candidates = e.partial;
                    code = kExitTransport;
                }
                for (std::size_t i = 0; i < candidates.size(); ++i) {
                    RepairResult r = repair_loop(candidates[i], *client, gen_client.cfg, gen_max_repair);
                    json hist = json::array();
                    for (const auto& a : r.history) {
                        json viol = json::array();
                        for (const auto& v : a.validation_report) viol.push_back({{"field", v.field}, {"rule", v.rule}});
                        hist.push_back({{"attempt_index", a.attempt_index},
                                        {"outcome", std::string(to_string(a.outcome))},
                                        {"candidate_spec_text", a.candidate_spec_text},
                                        {"validation_report", viol}});
                    }
                    json entry{{"candidate", i}, {"history", hist}};
                    if (r.transport_error) {
                        entry["transport_error"] = *r.transport_error;
                        code = kExitTransport;
                    }
                    repair_log += entry.dump() + "\n";
                    if (r.spec) cfg.extra_specs.push_back(std::move(*r.spec));
                }
            }

            Dataset ds = build_dataset(cfg);
            write_dataset(ds, out);
            if (!gen_real_imports.empty()) {
                std::string rej;
                for (const auto& r : rejections) rej += json{{"line", r.record_index}, {"reason", r.reason}}.dump() + "\n";
                write_file(out / "import_rejections.jsonl", rej);
            }
            if (gen_expand > 0) write_file(out / "repair_log.jsonl", repair_log);
            json rm = run_manifest("generate");
            rm["dataset_manifest_hash"] = hex64(fnv1a64(read_file(out / "manifest.json")));
            write_file(out / "run_manifest.json", rm.dump(2) + "\n");
            std::cout << "wrote " << ds.manifest.total() << " items (" << ds.manifest.count(Source::synthetic)
                      << " synthetic, " << ds.manifest.count(Source::real) << " real) to " << out.string() << "\n";
            return code;
        }

        if (*ren) {
            ChartSpec spec = parse_spec(read_file(ren_spec));
            RenderedChart r = render(spec);
            write_file(ren_out, r.svg_text);
            fs::path meta = ren_out;
            meta.replace_extension(".meta.json");
            write_file(meta, render_meta(r).dump() + "\n");
            write_file(ren_out + ".run.json", run_manifest("render").dump(2) + "\n");
            return kExitOk;
        }

        if (*imp) {
            auto lines = load_real_imports(imp_input);
            auto res = import_real_lines(lines, fs::path(imp_store));
            std::string items, rej;
            for (const auto& q : res.items) items += to_json(q).dump() + "\n";
            for (const auto& r : res.rejections) {
                rej += json{{"line", r.record_index}, {"reason", r.reason}}.dump() + "\n";
                std::cerr << "rejected: " << r.reason << "\n";
            }
            write_file(fs::path(imp_store) / "real_items.jsonl", items);
            write_file(fs::path(imp_store) / "import_rejections.jsonl", rej);
            write_file(fs::path(imp_store) / "run_manifest.json", run_manifest("import-real").dump(2) + "\n");
            std::cout << "imported " << res.items.size() << " records, rejected " << res.rejections.size() << "\n";
            return kExitOk;
        }

        if (*ev) {
            if (!fs::exists(ev_responses)) throw InputError("responses file not found: " + ev_responses);
            Dataset ds = load_dataset(ev_dataset);
            const PromptMode mode = *parse_prompt_mode(ev_mode);
            std::vector<std::pair<std::string, ModelResponse>> parsed;
            for (auto& [id, raw] : load_responses(ev_responses)) parsed.emplace_back(id, parse_response(raw, mode));
            EvalReport rep = evaluate_run(parsed, ds.items, ev_tau);
            const fs::path out = ev_out;
            write_file(out / "report.json", to_json(rep).dump(2) + "\n");
            const std::string table = format_report_table(rep, ev_label);
            write_file(out / "report.txt", table);
            write_file(out / "run_manifest.json", run_manifest("evaluate").dump(2) + "\n");
            std::cout << table;
            return kExitOk;
        }

        if (*rw) {
            std::map<std::string, double> gts;
            if (!rw_dataset.empty()) {
                for (const auto& q : load_dataset(rw_dataset).items) gts[q.item_id] = q.answer_gt;
            }
            std::ifstream in(rw_input);
            if (!in) throw InputError("cannot open " + rw_input);
            std::string line, out;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (trim(line).empty()) continue;
                json j;
                try {
                    j = json::parse(line);
                } catch (const json::exception& e) {
                    throw InputError(rw_input + ":" + std::to_string(lineno) + ": " + e.what());
                }
                const std::string id = j.value("item_id", "");
                double gt = 0.0;
                if (j.contains("answer_gt")) {
                    gt = j.at("answer_gt").get<double>();
                } else if (auto it = gts.find(id); it != gts.end()) {
                    gt = it->second;
                } else {
                    throw InputError(rw_input + ":" + std::to_string(lineno) + ": no answer_gt for item '" + id + "'");
                }
                json r = to_json(total_reward(j.at("raw_text").get<std::string>(), gt, rw_eps));
                r["item_id"] = id;
                out += r.dump() + "\n";
            }
            if (rw_out.empty()) {
                std::cout << out;
            } else {
                write_file(rw_out, out);
                write_file(rw_out + ".run.json", run_manifest("reward").dump(2) + "\n");
            }
            return kExitOk;
        }

        if (*adv) {
            std::ifstream in(adv_input);
            if (!in) throw InputError("cannot open " + adv_input);
            std::vector<std::string> order;
            std::map<std::string, std::vector<double>> groups;
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (trim(line).empty()) continue;
                try {
                    json j = json::parse(line);
                    const std::string id = j.at("prompt_id").get<std::string>();
                    if (!groups.count(id)) order.push_back(id);
                    auto& g = groups[id];
                    if (j.contains("rewards")) {
                        for (double r : j.at("rewards").get<std::vector<double>>()) g.push_back(r);
                    } else {
                        g.push_back(j.at("reward").get<double>());
                    }
                } catch (const json::exception& e) {
                    throw InputError(adv_input + ":" + std::to_string(lineno) + ": " + e.what());
                }
            }
            std::string out;
            for (const auto& id : order) {
                out += json{{"prompt_id", id}, {"advantages", group_advantages(groups[id], adv_guard)}}.dump() + "\n";
            }
            if (adv_out.empty()) {
                std::cout << out;
            } else {
                write_file(adv_out, out);
                write_file(adv_out + ".run.json", run_manifest("advantages").dump(2) + "\n");
            }
            return kExitOk;
        }

        if (*rounds) {
            Dataset ds = load_dataset(rounds_dataset);
            auto client = rounds_client.make();
            RunOptions opt;
            opt.plan = parse_round_plan(rounds_plan);
            opt.concurrency = jobs;
            opt.images = dataset_images(rounds_dataset);
            const fs::path out = rounds_out;
            InferenceLog prior;
            std::optional<ResumeCursor> cursor;
            if (rounds_resume) {
                prior = load_log(out / "log.jsonl");
                cursor = cursor_from_json(json::parse(read_file(out / "cursor.json")));
            }
            RunOutcome res = run_rounds(ds.items, *client, rounds_client.cfg, opt, std::move(prior), cursor);
            write_file(out / "log.jsonl", log_to_jsonl(res.log));
            write_file(out / "run_manifest.json", run_manifest("curate rounds").dump(2) + "\n");
            if (res.cursor) {
                write_file(out / "cursor.json", to_json(*res.cursor).dump() + "\n");
                std::cerr << "error: run aborted: " << *res.abort_reason << "; resume with --resume\n";
                return kExitTransport;
            }
            fs::remove(out / "cursor.json");
            std::cout << "logged " << res.log.rows.size() << " items x " << opt.plan.size() << " rounds\n";
            return kExitOk;
        }

        if (*bnd) {
            InferenceLog log = load_log(bnd_log);
            std::string ids;
            for (const auto& id : boundary_filter(log)) ids += id + "\n";
            std::cout << ids;
            if (!bnd_out.empty()) {
                write_file(bnd_out, ids);
                write_file(bnd_out + ".run.json", run_manifest("curate boundary").dump(2) + "\n");
            }
            return kExitOk;
        }

        if (*dst) {
            Dataset ds = load_dataset(dst_dataset);
            auto client = dst_client.make();
            DistillOptions opt;
            opt.target_count = dst_target;
            opt.max_attempts_per_item = dst_attempts;
            opt.concurrency = jobs;
            opt.images = dataset_images(dst_dataset);
            if (!dst_leaks.empty()) opt.leak_phrases = dst_leaks;
            DistillResult res = distill_cot(ds.items, *client, dst_client.cfg, opt);
            const fs::path out = dst_out;
            std::string lines;
            for (const auto& s : res.samples) lines += to_json(s).dump() + "\n";
            write_file(out / "cot.jsonl", lines);
            json stats = to_json(res.stats);
            stats["target"] = dst_target;
            stats["shortfall"] = res.shortfall;
            if (res.abort_reason) stats["abort_reason"] = *res.abort_reason;
            write_file(out / "stats.json", stats.dump(2) + "\n");
            write_file(out / "run_manifest.json", run_manifest("distill").dump(2) + "\n");
            std::cout << "accepted " << res.stats.accepted << " of " << dst_target << " (missing_tags "
                      << res.stats.missing_tags << ", wrong_answer " << res.stats.wrong_answer << ", leakage "
                      << res.stats.leakage << ")\n";
            if (res.abort_reason) {
                std::cerr << "error: " << *res.abort_reason << "\n";
                return kExitTransport;
            }
            if (res.shortfall > 0) {
                std::cerr << "warning: shortfall of " << res.shortfall << " samples\n";
                return kExitPartial;
            }
            return kExitOk;
        }
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const InvalidSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
