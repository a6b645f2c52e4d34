#pragma once

// Model-output parsing, the relaxed-accuracy protocol and per-column reports.

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chartforge/answer_parsing.hpp"
#include "chartforge/qa_engine.hpp"
#include "chartforge/reward_engine.hpp"

namespace chartforge {

inline constexpr double kDefaultTau = 0.02;

enum class PromptMode { direct, optional_cot, forced_cot };

inline std::string_view to_string(PromptMode m) {
    switch (m) {
        case PromptMode::direct: return "direct";
        case PromptMode::optional_cot: return "optional_cot";
        case PromptMode::forced_cot: return "forced_cot";
    }
    return "?";
}

inline std::optional<PromptMode> parse_prompt_mode(std::string_view s) {
    for (auto m : {PromptMode::direct, PromptMode::optional_cot, PromptMode::forced_cot}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

enum class ParseStatus { ok, missing_tags, unparseable_number };

inline std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::ok: return "ok";
        case ParseStatus::missing_tags: return "missing_tags";
        case ParseStatus::unparseable_number: return "unparseable_number";
    }
    return "?";
}

struct ModelResponse {
    std::string raw_text;
    std::optional<std::string> think_text;
    std::optional<std::string> answer_text;
    std::optional<double> answer_value;
    ParseStatus parse_status = ParseStatus::unparseable_number;
};

/// Reads reasoning and answer out of a raw completion.
///
/// forced_cot requires both tags. The other modes take the <answer> block when
/// present and otherwise the last number outside the <think> block. Within
/// whatever text is chosen the last number wins.
inline ModelResponse parse_response(std::string raw_text, PromptMode mode) {
    ModelResponse r;
    r.raw_text = std::move(raw_text);
    const std::string_view raw = r.raw_text;
    auto think = find_tag_block(raw, "think");
    auto answer = find_tag_block(raw, "answer", think ? think->close : 0);
    if (!answer) answer = find_tag_block(raw, "answer");
    if (think) r.think_text = think->content;
    if (answer) r.answer_text = answer->content;

    if (mode == PromptMode::forced_cot && (!think || !answer)) {
        r.parse_status = ParseStatus::missing_tags;
        return r;
    }
    std::optional<double> value;
    if (answer) {
        value = parse_last_number(answer->content);
    } else {
        std::string outside(raw);
        if (think) outside.erase(think->open, think->close - think->open);
        value = parse_last_number(outside);
    }
    if (value) {
        r.answer_value = value;
        r.parse_status = ParseStatus::ok;
    } else {
        r.parse_status = ParseStatus::unparseable_number;
    }
    return r;
}

/// Closed interval: |pred - gt| <= tau * |gt|, evaluated as d_rel <= tau so it
/// agrees exactly with the reward's relative error.
inline bool relaxed_match(double a_pred, double a_gt, double tau = kDefaultTau) {
    if (a_gt == 0.0) throw ProtocolError("relaxed_match: ground truth is zero; filter such items upstream");
    if (!std::isfinite(a_pred)) return false;
    return relative_error(a_pred, a_gt) <= tau;
}

// ---------------------------------------------------------------------------
// Reports

struct Cell {
    std::size_t n = 0;
    std::size_t correct = 0;

    double accuracy() const { return n == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(n); }

    Cell& operator+=(const Cell& o) {
        n += o.n;
        correct += o.correct;
        return *this;
    }
};

inline constexpr std::array<ChartType, 3> kRealChartTypes{ChartType::bar, ChartType::line, ChartType::combo};

struct EvalReport {
    double tau = kDefaultTau;
    std::array<Cell, 7> synthetic{};  // kAllChartTypes order
    std::array<Cell, 3> real{};       // kRealChartTypes order
    Cell overall;
    std::size_t missing = 0;
    std::size_t unparseable = 0;

    Cell* cell(Source s, ChartType t) {
        if (s == Source::synthetic) {
            for (std::size_t i = 0; i < kAllChartTypes.size(); ++i) {
                if (kAllChartTypes[i] == t) return &synthetic[i];
            }
        } else {
            for (std::size_t i = 0; i < kRealChartTypes.size(); ++i) {
                if (kRealChartTypes[i] == t) return &real[i];
            }
        }
        return nullptr;
    }
};

/// Scores responses against the dataset. Missing or unparseable responses
/// count as incorrect; an id outside the dataset is an InputError.
inline EvalReport evaluate_run(const std::vector<std::pair<std::string, ModelResponse>>& responses,
                               const std::vector<QaItem>& items, double tau = kDefaultTau) {
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    std::map<std::string, const QaItem*> by_id;
    for (const auto& q : items) by_id[q.item_id] = &q;

    std::map<std::string, const ModelResponse*> answered;
    std::vector<std::string> unknown;
    for (const auto& [id, resp] : responses) {
        if (!by_id.count(id)) {
            unknown.push_back(id);
            continue;
        }
        if (!answered.emplace(id, &resp).second) throw InputError("duplicate response for item '" + id + "'");
    }
    if (!unknown.empty()) {
        std::string msg = "responses reference unknown item ids:";
        for (const auto& id : unknown) msg += " " + id;
        throw InputError(msg);
    }

    EvalReport rep;
    rep.tau = tau;
    for (const auto& [id, q] : by_id) {
        Cell* c = rep.cell(q->source, q->chart_type);
        if (!c) {
            throw InputError("item '" + id + "' (" + std::string(to_string(q->source)) + " " +
                             std::string(to_string(q->chart_type)) + ") has no report column");
        }
        c->n += 1;
        auto it = answered.find(id);
        if (it == answered.end()) {
            ++rep.missing;
            continue;
        }
        const ModelResponse& r = *it->second;
        if (!r.answer_value) {
            ++rep.unparseable;
            continue;
        }
        if (relaxed_match(*r.answer_value, q->answer_gt, tau)) c->correct += 1;
    }
    for (const auto& c : rep.synthetic) rep.overall += c;
    for (const auto& c : rep.real) rep.overall += c;
    return rep;
}

inline json to_json(const EvalReport& r) {
    auto cell_json = [](const Cell& c) {
        return json{{"n", c.n}, {"correct", c.correct}, {"accuracy", c.accuracy()}};
    };
    json synth = json::object();
    for (std::size_t i = 0; i < kAllChartTypes.size(); ++i) synth[std::string(to_string(kAllChartTypes[i]))] = cell_json(r.synthetic[i]);
    json real = json::object();
    for (std::size_t i = 0; i < kRealChartTypes.size(); ++i) real[std::string(to_string(kRealChartTypes[i]))] = cell_json(r.real[i]);
    return json{{"tau", r.tau},
                {"synthetic", synth},
                {"real", real},
                {"overall", cell_json(r.overall)},
                {"missing", r.missing},
                {"unparseable", r.unparseable}};
}

/// Aligned text table, columns in benchmark order:
/// Box Area Radar Scatter Bar Line Combo | Bar Line Combo | Overall.
inline std::string format_report_table(const EvalReport& r, const std::string& row_label = "model") {
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.insert(0, w - s.size(), ' ');
        return s;
    };
    auto padr = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    const std::size_t lw = std::max<std::size_t>(row_label.size(), 8) + 2;
    const std::size_t cw = 9;
    std::string out;
    out += padr("", lw) + padr("Synthetic Charts", cw * 7) + " | " + padr("Real Charts", cw * 3) + " |\n";
    std::string head = padr("Method", lw);
    for (const char* h : {"Box", "Area", "Radar", "Scatter", "Bar", "Line", "Combo"}) head += pad(h, cw);
    head += " | ";
    for (const char* h : {"Bar", "Line", "Combo"}) head += pad(h, cw);
    head += " | " + pad("Overall", cw) + "\n";
    out += head;
    auto cell = [&](const Cell& c) { return pad(c.n == 0 ? "-" : format_fixed(c.accuracy(), 2), cw); };
    std::string row = padr(row_label, lw);
    for (const auto& c : r.synthetic) row += cell(c);
    row += " | ";
    for (const auto& c : r.real) row += cell(c);
    row += " | " + cell(r.overall) + "\n";
    out += row;
    std::string counts = padr("n", lw);
    for (const auto& c : r.synthetic) counts += pad(std::to_string(c.n), cw);
    counts += " | ";
    for (const auto& c : r.real) counts += pad(std::to_string(c.n), cw);
    counts += " | " + pad(std::to_string(r.overall.n), cw) + "\n";
    out += counts;
    out += "tau=" + format_number(r.tau) + " missing=" + std::to_string(r.missing) +
           " unparseable=" + std::to_string(r.unparseable) + "\n";
    return out;
}

/// responses.jsonl: one {"item_id", "raw_text"} object per line.
inline std::vector<std::pair<std::string, std::string>> load_responses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open responses file " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            out.emplace_back(j.at("item_id").get<std::string>(), j.at("raw_text").get<std::string>());
        } catch (const json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace chartforge
