#pragma once

// Training-data curation: multi-round inference logs, the stochastic-
// correctness (boundary) filter for RL data, and CoT distillation with
// structure / answer / leakage checks.

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartforge/answer_parsing.hpp"
#include "chartforge/gen_client.hpp"
#include "chartforge/prompts.hpp"
#include "chartforge/qa_engine.hpp"
#include "chartforge/response_eval.hpp"

namespace chartforge {

inline constexpr std::size_t kDefaultSftTarget = 68500;
inline constexpr std::size_t kDefaultRlTarget = 3400;

struct RoundSpec {
    PromptMode mode = PromptMode::direct;
    double temperature = 0.0;
};

inline std::vector<RoundSpec> default_round_plan() {
    return {{PromptMode::direct, 0.0}, {PromptMode::direct, 0.9}, {PromptMode::forced_cot, 0.9},
            {PromptMode::optional_cot, 0.9}};
}

/// Parses "direct:0,forced_cot:0.9,...".
inline std::vector<RoundSpec> parse_round_plan(std::string_view text) {
    std::vector<RoundSpec> plan;
    std::size_t p = 0;
    while (p <= text.size()) {
        auto comma = text.find(',', p);
        if (comma == std::string_view::npos) comma = text.size();
        const std::string entry = trim(text.substr(p, comma - p));
        p = comma + 1;
        if (entry.empty()) continue;
        const auto colon = entry.find(':');
        if (colon == std::string::npos) throw ConfigError("round plan entry '" + entry + "' must be mode:temperature");
        auto mode = parse_prompt_mode(trim(entry.substr(0, colon)));
        if (!mode) throw ConfigError("round plan: unknown prompt mode in '" + entry + "'");
        double t = 0.0;
        if (!parse_double(trim(entry.substr(colon + 1)), t) || t < 0.0) {
            throw ConfigError("round plan: bad temperature in '" + entry + "'");
        }
        plan.push_back({*mode, t});
    }
    if (plan.empty()) throw ConfigError("round plan is empty");
    return plan;
}

struct RoundResult {
    std::size_t round_index = 0;
    PromptMode prompt_mode = PromptMode::direct;
    double temperature = 0.0;
    std::string raw_text;
    bool correct = false;
    std::optional<std::string> error;
};

struct InferenceLog {
    std::map<std::string, std::vector<RoundResult>> rows;  // rounds kept sorted by round_index

    void add(const std::string& item_id, RoundResult r) {
        auto& row = rows[item_id];
        auto pos = std::lower_bound(row.begin(), row.end(), r.round_index,
                                    [](const RoundResult& a, std::size_t idx) { return a.round_index < idx; });
        if (pos != row.end() && pos->round_index == r.round_index) {
            throw InputError("inference log: duplicate round " + std::to_string(r.round_index) + " for '" + item_id + "'");
        }
        row.insert(pos, std::move(r));
    }
};

/// Where an aborted run stopped: the first (round, item position) with no result.
struct ResumeCursor {
    std::size_t round_index = 0;
    std::size_t item_position = 0;
};

struct RunOutcome {
    InferenceLog log;
    std::optional<ResumeCursor> cursor;  // set when the run aborted
    std::optional<std::string> abort_reason;
};

/// Supplies the chart image for an item, if any.
using ImageResolver = std::function<std::optional<ImagePart>(const QaItem&)>;

struct RunOptions {
    std::vector<RoundSpec> plan = default_round_plan();
    std::size_t concurrency = 1;
    double tau = kDefaultTau;
    std::filesystem::path prompt_dir;
    ImageResolver images;
    Sleeper sleep = real_sleep;
};

inline std::pair<std::string, std::string> question_prompt(PromptMode mode, const QaItem& item,
                                                           const std::filesystem::path& prompt_dir = {}) {
    const PromptTemplate t = load_prompt(std::string(to_string(mode)), prompt_dir);
    return {t.system, fill_prompt(t.user, {{"question", item.question}})};
}

/// Runs every plan entry over every item, round by round. Items within a round
/// run with bounded parallelism; results merge by (item_id, round_index).
/// A transport failure on one item is logged as an incorrect result with the
/// error note. An authentication failure aborts: results before the failing
/// position are kept and the cursor points at it. Pass `resume` (with the log
/// it came from) to continue an aborted run.
inline RunOutcome run_rounds(const std::vector<QaItem>& items, ChatClient& client, const ClientConfig& cfg,
                             const RunOptions& opt, InferenceLog prior = {},
                             std::optional<ResumeCursor> resume = std::nullopt) {
    if (opt.plan.empty()) throw ConfigError("run_rounds: plan is empty");
    cfg.validate();
    RunOutcome out;
    out.log = std::move(prior);
    const std::size_t start_round = resume ? resume->round_index : 0;
    for (std::size_t r = start_round; r < opt.plan.size(); ++r) {
        const RoundSpec& round = opt.plan[r];
        const std::size_t first = (resume && r == resume->round_index) ? resume->item_position : 0;
        const std::size_t count = first < items.size() ? items.size() - first : 0;
        std::vector<std::optional<RoundResult>> results(count);
        std::vector<std::optional<std::string>> auth_failures(count);
        parallel_for(count, opt.concurrency, [&](std::size_t k) {
            const QaItem& item = items[first + k];
            RoundResult res;
            res.round_index = r;
            res.prompt_mode = round.mode;
            res.temperature = round.temperature;
            auto [system, user] = question_prompt(round.mode, item, opt.prompt_dir);
            std::optional<ImagePart> image = opt.images ? opt.images(item) : std::nullopt;
            try {
                res.raw_text = complete(client, cfg, system, user, std::move(image), round.temperature, opt.sleep);
                const ModelResponse parsed = parse_response(res.raw_text, round.mode);
                res.correct = parsed.answer_value && relaxed_match(*parsed.answer_value, item.answer_gt, opt.tau);
            } catch (const AuthError& e) {
                auth_failures[k] = e.what();
                return;
            } catch (const TransportError& e) {
                res.correct = false;
                res.error = e.what();
            }
            results[k] = std::move(res);
        });
        for (std::size_t k = 0; k < count; ++k) {
            if (auth_failures[k]) {
                out.cursor = ResumeCursor{r, first + k};
                out.abort_reason = *auth_failures[k];
                return out;
            }
            out.log.add(items[first + k].item_id, std::move(*results[k]));
        }
    }
    return out;
}

/// Items answered correctly in at least one round and incorrectly in at least one other.
inline std::set<std::string> boundary_filter(const InferenceLog& log) {
    std::set<std::string> out;
    for (const auto& [id, rounds] : log.rows) {
        bool any_true = false;
        bool any_false = false;
        for (const auto& r : rounds) (r.correct ? any_true : any_false) = true;
        if (any_true && any_false) out.insert(id);
    }
    return out;
}

// Persistence: one JSON object per (item, round), sorted by item then round.

inline nlohmann::json to_json(const std::string& item_id, const RoundResult& r) {
    nlohmann::json j{{"item_id", item_id},
                     {"round_index", r.round_index},
                     {"prompt_mode", std::string(to_string(r.prompt_mode))},
                     {"temperature", r.temperature},
                     {"raw_text", r.raw_text},
                     {"correct", r.correct}};
    if (r.error) j["error"] = *r.error;
    return j;
}

inline std::string log_to_jsonl(const InferenceLog& log) {
    std::string out;
    for (const auto& [id, rounds] : log.rows) {
        for (const auto& r : rounds) out += to_json(id, r).dump() + "\n";
    }
    return out;
}

inline InferenceLog log_from_jsonl(std::istream& in, const std::string& source = "inference log") {
    InferenceLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            RoundResult r;
            r.round_index = j.at("round_index").get<std::size_t>();
            auto mode = parse_prompt_mode(j.value("prompt_mode", "direct"));
            if (!mode) throw InputError("unknown prompt_mode");
            r.prompt_mode = *mode;
            r.temperature = j.value("temperature", 0.0);
            r.raw_text = j.value("raw_text", "");
            r.correct = j.at("correct").get<bool>();
            if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
            log.add(j.at("item_id").get<std::string>(), std::move(r));
        } catch (const std::exception& e) {
            throw InputError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return log;
}

inline InferenceLog load_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open inference log " + path.string());
    return log_from_jsonl(in, path.string());
}

inline nlohmann::json to_json(const ResumeCursor& c) {
    return {{"round_index", c.round_index}, {"item_position", c.item_position}};
}

inline ResumeCursor cursor_from_json(const nlohmann::json& j) {
    return {j.at("round_index").get<std::size_t>(), j.at("item_position").get<std::size_t>()};
}

// ---------------------------------------------------------------------------
// CoT validation and distillation

inline const std::vector<std::string>& default_leak_phrases() {
    static const std::vector<std::string> phrases{"original answer", "given answer", "ground truth", "provided answer"};
    return phrases;
}

enum class CotRejection { missing_tags, wrong_answer, leakage };

inline std::string_view to_string(CotRejection r) {
    switch (r) {
        case CotRejection::missing_tags: return "missing_tags";
        case CotRejection::wrong_answer: return "wrong_answer";
        case CotRejection::leakage: return "leakage";
    }
    return "?";
}

struct CotSample {
    std::string item_id;
    std::string chart_ref;
    std::string question;
    std::string think_text;
    std::string answer_text;
    std::string source_model;
};

inline nlohmann::json to_json(const CotSample& s) {
    return {{"item_id", s.item_id},         {"chart_ref", s.chart_ref},     {"question", s.question},
            {"think_text", s.think_text},   {"answer_text", s.answer_text}, {"source_model", s.source_model}};
}

struct CotVerdict {
    std::optional<CotRejection> rejection;  // empty when accepted
    std::string think_text;
    std::string answer_text;

    bool accepted() const { return !rejection; }
};

/// Checks run in order: structure, answer, leakage; the first failure is the
/// verdict. Structure means exactly one <think> block followed by exactly one
/// <answer> block, both non-empty and neither holding the other's tags. The
/// answer passes on an exact string match with the ground truth's canonical
/// text or a relaxed numeric match.
inline CotVerdict validate_cot(std::string_view raw, double a_gt,
                               const std::vector<std::string>& leak_phrases = default_leak_phrases(),
                               double tau = kDefaultTau) {
    if (a_gt == 0.0) throw ProtocolError("validate_cot: ground truth is zero");
    CotVerdict v;
    auto think = find_tag_block(raw, "think");
    auto answer = think ? find_tag_block(raw, "answer", think->close) : std::nullopt;
    const bool single = count_occurrences(raw, "<think>") == 1 && count_occurrences(raw, "</think>") == 1 &&
                        count_occurrences(raw, "<answer>") == 1 && count_occurrences(raw, "</answer>") == 1;
    if (!think || !answer || !single || trim(think->content).empty() || trim(answer->content).empty()) {
        v.rejection = CotRejection::missing_tags;
        return v;
    }
    v.think_text = trim(think->content);
    v.answer_text = trim(answer->content);

    bool answer_ok = v.answer_text == format_number(a_gt);
    if (!answer_ok) {
        auto value = parse_last_number(v.answer_text);
        answer_ok = value && relaxed_match(*value, a_gt, tau);
    }
    if (!answer_ok) {
        v.rejection = CotRejection::wrong_answer;
        return v;
    }
    const std::string lowered = to_lower(v.think_text);
    for (const auto& phrase : leak_phrases) {
        if (!phrase.empty() && lowered.find(to_lower(phrase)) != std::string::npos) {
            v.rejection = CotRejection::leakage;
            return v;
        }
    }
    return v;
}

struct DistillStats {
    std::size_t attempts = 0;
    std::size_t accepted = 0;
    std::size_t missing_tags = 0;
    std::size_t wrong_answer = 0;
    std::size_t leakage = 0;
    std::size_t transport_errors = 0;
    std::size_t items_tried = 0;
};

inline nlohmann::json to_json(const DistillStats& s) {
    return {{"attempts", s.attempts},         {"accepted", s.accepted}, {"missing_tags", s.missing_tags},
            {"wrong_answer", s.wrong_answer}, {"leakage", s.leakage},   {"transport_errors", s.transport_errors},
            {"items_tried", s.items_tried}};
}

struct DistillResult {
    std::vector<CotSample> samples;
    DistillStats stats;
    std::size_t shortfall = 0;  // target minus accepted, when the items ran out
    std::optional<std::string> abort_reason;
};

struct DistillOptions {
    std::size_t target_count = kDefaultSftTarget;
    std::size_t max_attempts_per_item = 1;
    std::size_t concurrency = 1;
    std::vector<std::string> leak_phrases = default_leak_phrases();
    double tau = kDefaultTau;
    double temperature = 0.9;
    std::filesystem::path prompt_dir;
    ImageResolver images;
    Sleeper sleep = real_sleep;
};

/// Asks the teacher for a tagged chain per item until target_count samples pass
/// validate_cot. Items are consumed in order and statistics count only the
/// items consumed, so the result does not depend on concurrency.
inline DistillResult distill_cot(const std::vector<QaItem>& items, ChatClient& teacher, const ClientConfig& cfg,
                                 const DistillOptions& opt = {}) {
    if (opt.max_attempts_per_item < 1) throw ConfigError("distill_cot: max_attempts_per_item must be >= 1");
    cfg.validate();
    const PromptTemplate tmpl = load_prompt("distill", opt.prompt_dir);

    struct ItemOutcome {
        std::vector<CotRejection> rejections;
        std::size_t attempts = 0;
        std::size_t transport_errors = 0;
        std::optional<CotSample> sample;
        std::optional<std::string> auth_error;
    };
    auto run_item = [&](const QaItem& item) {
        ItemOutcome o;
        const std::string user =
            fill_prompt(tmpl.user, {{"question", item.question}, {"answer", format_number(item.answer_gt)}});
        for (std::size_t a = 0; a < opt.max_attempts_per_item; ++a) {
            ++o.attempts;
            std::string raw;
            try {
                raw = complete(teacher, cfg, tmpl.system, user, opt.images ? opt.images(item) : std::nullopt,
                               opt.temperature, opt.sleep);
            } catch (const AuthError& e) {
                o.auth_error = e.what();
                return o;
            } catch (const TransportError&) {
                ++o.transport_errors;
                continue;
            }
            CotVerdict v = validate_cot(raw, item.answer_gt, opt.leak_phrases, opt.tau);
            if (v.accepted()) {
                o.sample = CotSample{item.item_id, item.chart_ref, item.question, v.think_text, v.answer_text,
                                     cfg.model_name};
                return o;
            }
            o.rejections.push_back(*v.rejection);
        }
        return o;
    };

    DistillResult res;
    const std::size_t batch = std::max<std::size_t>(opt.concurrency, 1);
    std::size_t next = 0;
    while (res.samples.size() < opt.target_count && next < items.size()) {
        const std::size_t n = std::min(batch, items.size() - next);
        // Never ask for more items than could still be needed.
        const std::size_t want = std::min(n, opt.target_count - res.samples.size());
        std::vector<ItemOutcome> outcomes(want);
        parallel_for(want, opt.concurrency, [&](std::size_t k) { outcomes[k] = run_item(items[next + k]); });
        for (std::size_t k = 0; k < want; ++k) {
            ItemOutcome& o = outcomes[k];
            if (o.auth_error) {
                res.abort_reason = *o.auth_error;
                res.shortfall = opt.target_count - res.samples.size();
                return res;
            }
            ++res.stats.items_tried;
            res.stats.attempts += o.attempts;
            res.stats.transport_errors += o.transport_errors;
            for (auto r : o.rejections) {
                switch (r) {
                    case CotRejection::missing_tags: ++res.stats.missing_tags; break;
                    case CotRejection::wrong_answer: ++res.stats.wrong_answer; break;
                    case CotRejection::leakage: ++res.stats.leakage; break;
                }
            }
            if (o.sample) {
                ++res.stats.accepted;
                res.samples.push_back(std::move(*o.sample));
            }
        }
        next += want;
    }
    if (res.samples.size() < opt.target_count) res.shortfall = opt.target_count - res.samples.size();
    return res;
}

}  // namespace chartforge
