#pragma once

// Tag extraction and number parsing for model outputs. Shared by response
// evaluation, reward computation and CoT validation.

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chartforge/common.hpp"

namespace chartforge {

struct TagBlock {
    std::size_t open = 0;   // offset of "<tag>"
    std::size_t close = 0;  // offset one past "</tag>"
    std::string content;
};

/// First <tag>...</tag> block, if both delimiters are present in order.
inline std::optional<TagBlock> find_tag_block(std::string_view text, std::string_view tag, std::size_t from = 0) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    auto a = text.find(open, from);
    if (a == std::string_view::npos) return std::nullopt;
    auto b = text.find(close, a + open.size());
    if (b == std::string_view::npos) return std::nullopt;
    return TagBlock{a, b + close.size(), std::string(text.substr(a + open.size(), b - a - open.size()))};
}

inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string_view::npos; p = text.find(needle, p + needle.size())) ++n;
    return n;
}

/// A number found in free text.
struct NumberMatch {
    double value = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_word(char c) { return is_alpha(c) || is_digit(c) || c == '_'; }

inline bool ends_with_at(std::string_view text, std::size_t end, std::string_view s) {
    return end >= s.size() && text.substr(end - s.size(), s.size()) == s;
}

// Consumes a currency symbol ending at `end`; returns its length or 0.
inline std::size_t currency_before(std::string_view text, std::size_t end) {
    for (std::string_view sym : {"$", "\xE2\x82\xAC" /* € */, "\xC2\xA3" /* £ */, "\xC2\xA5" /* ¥ */}) {
        if (ends_with_at(text, end, sym)) return sym.size();
    }
    return 0;
}

// Sign ending at `end`: '-', '+', or U+2212. Returns {length, negative}.
inline std::pair<std::size_t, bool> sign_before(std::string_view text, std::size_t end) {
    if (ends_with_at(text, end, "\xE2\x88\x92")) return {3, true};
    if (end >= 1 && text[end - 1] == '-') return {1, true};
    if (end >= 1 && text[end - 1] == '+') return {1, false};
    return {0, false};
}

inline std::size_t skip_spaces_back(std::string_view text, std::size_t pos) {
    while (pos > 0 && text[pos - 1] == ' ') --pos;
    return pos;
}

inline bool prefix_boundary_ok(std::string_view text, std::size_t pos) {
    if (pos == 0) return true;
    const char c = text[pos - 1];
    return !is_word(c) && c != '.';
}

}  // namespace detail

/// Every number in `text`, left to right.
///
/// Grammar: [sign][currency][sign] digits-with-optional-thousands-groups
/// [.digits] [e[+-]digits] [ %| thousand| million| billion]. A leading sign
/// only counts when it is not glued to a preceding word or number, so
/// "2019-2020" reads as 2019 and 2020. "%" strips to the bare number.
inline std::vector<NumberMatch> find_numbers(std::string_view text) {
    using namespace detail;
    std::vector<NumberMatch> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const bool starts_digit = is_digit(text[i]);
        const bool starts_dot = text[i] == '.' && i + 1 < n && is_digit(text[i + 1]);
        if (!(starts_digit || starts_dot) || !prefix_boundary_ok(text, i)) {
            // Skip the rest of a word-attached digit run so "Q34" yields nothing.
            if (is_word(text[i]) || text[i] == '.') {
                while (i < n && (is_word(text[i]) || text[i] == '.')) ++i;
            } else {
                ++i;
            }
            continue;
        }
        std::size_t j = i;
        std::string digits;
        if (starts_digit) {
            std::size_t k = j;
            while (k < n && is_digit(text[k])) ++k;
            digits.assign(text.substr(j, k - j));
            const bool groupable = k - j <= 3;
            j = k;
            if (groupable) {
                // ",ddd" groups, each exactly three digits.
                while (j + 3 < n && text[j] == ',' && is_digit(text[j + 1]) && is_digit(text[j + 2]) &&
                       is_digit(text[j + 3]) && (j + 4 >= n || !is_digit(text[j + 4]))) {
                    digits.append(text.substr(j + 1, 3));
                    j += 4;
                }
            }
        }
        if (j + 1 < n && text[j] == '.' && is_digit(text[j + 1])) {
            digits += '.';
            ++j;
            while (j < n && is_digit(text[j])) digits += text[j++];
        }
        if (j + 1 < n && (text[j] == 'e' || text[j] == 'E')) {
            std::size_t k = j + 1;
            if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
            if (k < n && is_digit(text[k])) {
                std::size_t m = k;
                while (m < n && is_digit(text[m])) ++m;
                if (m >= n || !is_alpha(text[m])) {
                    digits += 'e';
                    digits.append(text.substr(j + 1, m - j - 1));
                    j = m;
                }
            }
        }
        double value = 0.0;
        if (!parse_double(digits, value)) {
            i = j > i ? j : i + 1;
            continue;
        }

        // Prefix: sign and currency in either order ("-$5", "$-5", "$ 5").
        std::size_t begin = i;
        bool negative = false;
        auto [s1, neg1] = sign_before(text, begin);
        if (s1 && (prefix_boundary_ok(text, begin - s1) || currency_before(text, begin - s1))) {
            begin -= s1;
            negative = neg1;
        } else {
            s1 = 0;
        }
        const std::size_t cpos = skip_spaces_back(text, begin);
        if (std::size_t clen = currency_before(text, cpos)) {
            begin = cpos - clen;
            auto [s2, neg2] = sign_before(text, begin);
            if (!s1 && s2 && prefix_boundary_ok(text, begin - s2)) {
                begin -= s2;
                negative = neg2;
            }
        }

        // Suffix: percent or a word multiplier.
        std::size_t end = j;
        std::size_t k = j;
        while (k < n && text[k] == ' ') ++k;
        if (k < n && text[k] == '%') {
            end = k + 1;
        } else {
            for (auto [word, exp10] : {std::pair<std::string_view, int>{"thousand", 3}, {"million", 6}, {"billion", 9}}) {
                if (k + word.size() <= n && to_lower(text.substr(k, word.size())) == word) {
                    std::size_t e = k + word.size();
                    if (e < n && (text[e] == 's' || text[e] == 'S')) ++e;
                    if (e >= n || !is_alpha(text[e])) {
                        // Re-read as a decimal with exponent so 1.2 million is exactly 1200000.
                        if (digits.find('e') == std::string::npos) {
                            parse_double(digits + "e" + std::to_string(exp10), value);
                        } else {
                            for (int r = 0; r < exp10; ++r) value *= 10.0;
                        }
                        end = e;
                    }
                    break;
                }
            }
        }
        out.push_back({negative ? -value : value, begin, end});
        i = end > j ? end : j;
    }
    return out;
}

/// Last complete number in `text`; later numbers override earlier ones.
inline std::optional<double> parse_last_number(std::string_view text) {
    auto all = find_numbers(text);
    if (all.empty()) return std::nullopt;
    return all.back().value;
}

}  // namespace chartforge
