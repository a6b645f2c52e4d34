#pragma once

// Versioned prompt templates. The files under prompts/ are the editable copies;
// the built-ins below must stay byte-identical to them (checked by a test).
//
// Layout: a "# chartforge-prompt <name> v<N>" header line, then a [system]
// section and a [user] section. Placeholders are written {{key}}.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "chartforge/common.hpp"

namespace chartforge {

struct PromptTemplate {
    std::string name;
    int version = 0;
    std::string system;
    std::string user;
};

inline const std::map<std::string, std::string>& builtin_prompt_texts() {
    static const std::map<std::string, std::string> texts{
        {"direct", R"txt(# chartforge-prompt direct v1
[system]
You are a careful reader of charts. The chart has no value labels, so estimate values from the axes and gridlines.
[user]
{{question}}
Reply with the number only.
)txt"},
        {"optional_cot", R"txt(# chartforge-prompt optional_cot v1
[system]
You are a careful reader of charts. The chart has no value labels, so estimate values from the axes and gridlines.
[user]
{{question}}
You may reason step by step inside <think></think> tags before answering. Put the final number inside <answer></answer> tags.
)txt"},
        {"forced_cot", R"txt(# chartforge-prompt forced_cot v1
[system]
You are a careful reader of charts. The chart has no value labels, so estimate values from the axes and gridlines.
[user]
{{question}}
First reason step by step inside <think></think> tags: locate the relevant mark, find the neighbouring axis ticks and interpolate between them. Then give the final number inside <answer></answer> tags.
)txt"},
        {"distill", R"txt(# chartforge-prompt distill v1
[system]
You write worked solutions for chart-reading exercises. Reason only from what is visible in the chart.
[user]
Question: {{question}}
The correct value is {{answer}}.
Explain how to read this value from the chart: identify the mark, the nearest gridlines or ticks, and the interpolation between them. Do not refer to the value having been supplied to you; the explanation must stand on its own.
Format: <think>your reasoning</think><answer>the number</answer>
)txt"},
        {"self_instruct", R"txt(# chartforge-prompt self_instruct v1
[system]
You design chart specifications as JSON documents. Output one JSON object and nothing else.
[user]
Here are example chart specifications:
{{demonstrations}}
Write one new specification of a {{chart_type}} chart about "{{topic}}". Use the same fields as the examples. Keep every value inside its axis range and do not place values exactly on tick marks.
)txt"},
        {"evol_instruct", R"txt(# chartforge-prompt evol_instruct v1
[system]
You design chart specifications as JSON documents. Output one JSON object and nothing else.
[user]
Here is a chart specification:
{{spec}}
Rewrite it into a harder variant: {{operation}}. Keep the same chart type and fields, keep every value inside its axis range and do not place values exactly on tick marks.
)txt"},
        {"repair", R"txt(# chartforge-prompt repair v1
[system]
You fix chart specifications. Output one corrected JSON object and nothing else.
[user]
This chart specification failed validation:
{{candidate}}
Problems found:
{{violations}}
Return a corrected specification that fixes every problem.
)txt"},
    };
    return texts;
}

inline PromptTemplate parse_prompt(std::string_view text) {
    auto line_end = text.find('\n');
    if (line_end == std::string_view::npos) throw ParseError("prompt template: missing header line");
    const std::string header(text.substr(0, line_end));
    static constexpr std::string_view magic = "# chartforge-prompt ";
    if (header.rfind(magic, 0) != 0) throw ParseError("prompt template: bad header '" + header + "'");
    PromptTemplate t;
    const std::string rest = header.substr(magic.size());
    const auto sp = rest.find(' ');
    if (sp == std::string::npos || sp + 2 > rest.size() || rest[sp + 1] != 'v') {
        throw ParseError("prompt template: bad header '" + header + "'");
    }
    t.name = rest.substr(0, sp);
    try {
        t.version = std::stoi(rest.substr(sp + 2));
    } catch (const std::exception&) {
        throw ParseError("prompt template: bad version in '" + header + "'");
    }
    const std::string_view body = text.substr(line_end + 1);
    const auto s = body.find("[system]\n");
    const auto u = body.find("[user]\n");
    if (s != 0 || u == std::string_view::npos) throw ParseError("prompt template '" + t.name + "': expected [system] then [user]");
    t.system = trim(body.substr(9, u - 9));
    t.user = trim(body.substr(u + 7));
    return t;
}

/// Loads `name` from `dir` when given, else the built-in copy.
inline PromptTemplate load_prompt(const std::string& name, const std::filesystem::path& dir = {}) {
    if (!dir.empty()) {
        const auto path = dir / (name + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open prompt template " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_prompt(ss.str());
    }
    const auto& texts = builtin_prompt_texts();
    auto it = texts.find(name);
    if (it == texts.end()) throw ConfigError("unknown prompt template '" + name + "'");
    return parse_prompt(it->second);
}

/// Substitutes every {{key}}. Unknown or unfilled placeholders are errors.
inline std::string fill_prompt(std::string_view text, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t p = 0;
    while (true) {
        auto a = text.find("{{", p);
        if (a == std::string_view::npos) break;
        auto b = text.find("}}", a + 2);
        if (b == std::string_view::npos) throw ConfigError("prompt: unterminated placeholder");
        const std::string key(text.substr(a + 2, b - a - 2));
        auto it = vars.find(key);
        if (it == vars.end()) throw ConfigError("prompt: no value for placeholder '" + key + "'");
        out.append(text.substr(p, a - p));
        out += it->second;
        p = b + 2;
    }
    out.append(text.substr(p));
    return out;
}

}  // namespace chartforge
