#pragma once

// Scripted teacher replies keyed by the question each prompt carries.

#include <map>
#include <string>
#include <vector>

#include "chartforge/curation.hpp"

namespace mock_teacher {

enum class Kind { clean, missing_tags, wrong, leak };

inline std::string reply_for(Kind k, double gt) {
    const std::string v = chartforge::format_number(gt);
    switch (k) {
        case Kind::clean: return "<think>The mark sits just above the nearest gridline.</think><answer>" + v + "</answer>";
        case Kind::missing_tags: return "It is about " + v + ".";
        case Kind::wrong: return "<think>Reading the wrong series.</think><answer>" + chartforge::format_number(gt * 1.5) + "</answer>";
        case Kind::leak: return "<think>The original answer says " + v + ", so that is it.</think><answer>" + v + "</answer>";
    }
    return "";
}

/// Items with questions "Estimate value #i." and answers 10 + i.
inline std::vector<chartforge::QaItem> items(std::size_t n) {
    std::vector<chartforge::QaItem> out;
    for (std::size_t i = 0; i < n; ++i) {
        chartforge::QaItem q;
        q.item_id = "item-" + std::to_string(1000 + i);
        q.chart_ref = "chart-" + std::to_string(i);
        q.question = "Estimate value #" + std::to_string(i) + ".";
        q.answer_gt = 10.0 + static_cast<double>(i);
        out.push_back(q);
    }
    return out;
}

/// Responder answering each item's prompt with the reply of its kind.
inline chartforge::MockClient::Responder responder(const std::vector<chartforge::QaItem>& its,
                                                   const std::vector<Kind>& kinds) {
    std::map<std::string, std::string> by_question;
    for (std::size_t i = 0; i < its.size(); ++i) by_question[its[i].question] = reply_for(kinds[i], its[i].answer_gt);
    return [by_question](const chartforge::ChatRequest& req, std::size_t) -> chartforge::MockReply {
        for (const auto& [q, reply] : by_question) {
            if (req.user_prompt.find(q) != std::string::npos) return reply;
        }
        return std::string("no idea");
    };
}

}  // namespace mock_teacher
