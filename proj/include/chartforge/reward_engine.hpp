#pragma once

// GRPO reward components and group-relative advantages.
//
//   d_rel   = |pred - gt| / |gt|
//   R_acc   = (1 - d_rel / eps)^2  if d_rel < eps, else 0
//   R       = R_format + R_acc
//   A_i     = (r_i - mean r) / std r      (population std; zero when std < guard)

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chartforge/answer_parsing.hpp"
#include "chartforge/common.hpp"

namespace chartforge {

inline constexpr double kDefaultEpsilon = 0.02;
inline constexpr double kDefaultStdGuard = 1e-8;

struct RewardBreakdown {
    int format_reward = 0;
    double accuracy_reward = 0.0;
    double total = 0.0;
    std::optional<double> d_rel;
};

/// 1 iff the text is exactly: optional whitespace, one non-empty
/// <think>..</think> block, optional whitespace, one non-empty
/// <answer>..</answer> block, optional trailing whitespace.
inline int format_reward(std::string_view raw) {
    static constexpr std::string_view ws = " \t\r\n";
    static constexpr std::string_view tags[] = {"<think>", "</think>", "<answer>", "</answer>"};
    auto skip_ws = [&](std::size_t p) {
        while (p < raw.size() && ws.find(raw[p]) != std::string_view::npos) ++p;
        return p;
    };
    auto clean_body = [&](std::string_view body) {
        if (trim(body).empty()) return false;
        for (auto t : tags) {
            if (body.find(t) != std::string_view::npos) return false;
        }
        return true;
    };

    std::size_t p = skip_ws(0);
    if (raw.substr(p, 7) != "<think>") return 0;
    p += 7;
    auto think_end = raw.find("</think>", p);
    if (think_end == std::string_view::npos || !clean_body(raw.substr(p, think_end - p))) return 0;
    p = skip_ws(think_end + 8);
    if (raw.substr(p, 8) != "<answer>") return 0;
    p += 8;
    auto answer_end = raw.find("</answer>", p);
    if (answer_end == std::string_view::npos || !clean_body(raw.substr(p, answer_end - p))) return 0;
    p = skip_ws(answer_end + 9);
    return p == raw.size() ? 1 : 0;
}

inline double relative_error(double a_pred, double a_gt) {
    if (a_gt == 0.0) throw DomainError("relative_error: ground truth must be nonzero");
    return std::fabs(a_pred - a_gt) / std::fabs(a_gt);
}

inline double accuracy_reward(double d_rel, double epsilon = kDefaultEpsilon) {
    if (!(d_rel >= 0.0)) throw DomainError("accuracy_reward: d_rel must be >= 0");
    if (!(epsilon > 0.0)) throw DomainError("accuracy_reward: epsilon must be > 0");
    if (d_rel >= epsilon) return 0.0;
    const double x = 1.0 - d_rel / epsilon;
    return x * x;
}

/// Format and accuracy are scored independently: a response with broken
/// format still earns accuracy when an <answer> block holds a number.
inline RewardBreakdown total_reward(std::string_view raw, double a_gt, double epsilon = kDefaultEpsilon) {
    if (a_gt == 0.0) throw DomainError("total_reward: ground truth must be nonzero");
    RewardBreakdown r;
    r.format_reward = format_reward(raw);
    if (auto block = find_tag_block(raw, "answer")) {
        if (auto v = parse_last_number(block->content)) {
            r.d_rel = relative_error(*v, a_gt);
            r.accuracy_reward = accuracy_reward(*r.d_rel, epsilon);
        }
    }
    r.total = r.format_reward + r.accuracy_reward;
    return r;
}

/// Welford mean/variance, then normalization by the population std.
inline std::vector<double> group_advantages(const std::vector<double>& rewards, double std_guard = kDefaultStdGuard) {
    if (rewards.size() < 2) throw DomainError("group_advantages: need at least 2 rewards");
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (double r : rewards) {
        if (!std::isfinite(r)) throw DomainError("group_advantages: non-finite reward");
        ++k;
        const double delta = r - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (r - mean);
    }
    const double sd = std::sqrt(m2 / static_cast<double>(k));
    std::vector<double> out(rewards.size(), 0.0);
    if (sd < std_guard) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
    return out;
}

inline nlohmann::json to_json(const RewardBreakdown& r) {
    nlohmann::json j{{"format_reward", r.format_reward}, {"accuracy_reward", r.accuracy_reward}, {"total", r.total}};
    j["d_rel"] = r.d_rel ? nlohmann::json(*r.d_rel) : nlohmann::json(nullptr);
    return j;
}

}  // namespace chartforge
