#pragma once

// Shared error types, number formatting and hashing used across chartforge.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace chartforge {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration (unknown topic, invalid counts, bad flags).
struct ConfigError : Error {
    using Error::Error;
};

// Malformed user input (bad JSONL, unknown ids, missing files).
struct InputError : Error {
    using Error::Error;
};

// A reference (chart_ref, item id) that does not resolve.
struct ReferenceError : Error {
    using Error::Error;
};

// Numeric precondition violated (a_gt == 0, negative d_rel, short groups).
struct DomainError : Error {
    using Error::Error;
};

// Evaluation protocol misuse (zero ground truth reaching relaxed_match).
struct ProtocolError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

// Requested more items than the available pool can supply.
struct ShortfallError : Error {
    using Error::Error;
};

/// Shortest decimal string that round-trips to `value` ("74", "0.3", "1e+21").
inline std::string format_number(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::logic_error("to_chars failed");
    return std::string(buf, end);
}

/// Fixed-point rendering with `decimals` digits after the point.
inline std::string format_fixed(double value, int decimals) {
    char buf[128];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
    if (ec != std::errc{}) throw std::logic_error("to_chars failed");
    return std::string(buf, end);
}

/// Snap a computed decimal (e.g. 3 * 0.1) to the double nearest its
/// 12-significant-digit rendering, so 0.30000000000000004 becomes 0.3.
inline double clean_decimal(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 12);
    if (ec != std::errc{}) return value;
    double out = value;
    std::from_chars(buf, end, out);
    return out;
}

/// Strict full-string parse of a plain decimal number.
inline bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

/// 64-bit FNV-1a. Used for prompt keys in mock scripts and config digests.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

/// Runs fn(0..n-1) on up to `jobs` threads. Each index runs exactly once; the
/// exception from the lowest failing index is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t nthreads = jobs < n ? jobs : n;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace chartforge
