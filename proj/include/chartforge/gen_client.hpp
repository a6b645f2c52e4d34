#pragma once

// Chat-completion clients (scripted mock, retry policy) and the candidate-spec
// loops built on them: Self-Instruct / Evol-Instruct expansion and self-repair.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chartforge/chart_model.hpp"
#include "chartforge/common.hpp"
#include "chartforge/prompts.hpp"
#include "chartforge/random.hpp"

namespace chartforge {

struct ClientConfig {
    std::string endpoint_url = "http://localhost:8000/v1";
    std::string model_name = "Qwen2.5-VL-32B-Instruct";
    std::string api_key_env = "CHARTFORGE_API_KEY";
    int max_retries = 3;
    double timeout_s = 120.0;
    double temperature = 0.0;
    int max_tokens = 1024;

    void validate() const {
        if (max_retries < 0) throw ConfigError("client: max_retries must be >= 0");
        if (!(timeout_s > 0.0)) throw ConfigError("client: timeout must be > 0");
        if (max_tokens <= 0) throw ConfigError("client: max_tokens must be > 0");
        if (endpoint_url.empty()) throw ConfigError("client: endpoint_url is empty");
    }
};

struct ImagePart {
    std::string mime_type;  // e.g. image/png
    std::string bytes;
};

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    std::optional<ImagePart> image;
    double temperature = 0.0;
    int max_tokens = 1024;
};

/// Failure talking to an endpoint. `status` is the HTTP status, or 0 when no
/// response arrived.
struct TransportError : Error {
    int status = 0;
    bool retryable = true;

    TransportError(const std::string& what, int status_code, bool can_retry)
        : Error(what), status(status_code), retryable(can_retry) {}
};

struct AuthError : TransportError {
    explicit AuthError(const std::string& what, int status_code = 401) : TransportError(what, status_code, false) {}
};

/// One attempt against an endpoint. Implementations must be safe to call from
/// several threads at once.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string send(const ChatRequest& request, double timeout_s) = 0;
};

inline std::string prompt_hash(std::string_view system_prompt, std::string_view user_prompt) {
    std::string key(system_prompt);
    key += '\n';
    key.append(user_prompt);
    return hex64(fnv1a64(key));
}

// ---------------------------------------------------------------------------
// Retry policy

struct Backoff {
    double base_s = 0.5;
    double factor = 2.0;
    double jitter = 0.2;

    /// Delay before retry number `retry` (0-based), jittered by ±jitter.
    double delay(int retry, Rng& rng) const {
        double d = base_s;
        for (int i = 0; i < retry; ++i) d *= factor;
        return d * rng.uniform(1.0 - jitter, 1.0 + jitter);
    }
};

using Sleeper = std::function<void(double seconds)>;

inline void real_sleep(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

/// Sends with up to max_retries retries on retryable failures. Auth failures
/// are rethrown at once. Jitter is seeded from the prompt so delays are
/// reproducible.
inline std::string complete(ChatClient& client, const ClientConfig& cfg, const std::string& system_prompt,
                            const std::string& user_prompt, std::optional<ImagePart> image = std::nullopt,
                            std::optional<double> temperature = std::nullopt, const Sleeper& sleep = real_sleep,
                            const Backoff& backoff = {}) {
    cfg.validate();
    ChatRequest req{system_prompt, user_prompt, std::move(image), temperature.value_or(cfg.temperature),
                    cfg.max_tokens};
    Rng jitter_rng(fnv1a64(prompt_hash(system_prompt, user_prompt)));
    for (int attempt = 0;; ++attempt) {
        try {
            return client.send(req, cfg.timeout_s);
        } catch (const TransportError& e) {
            if (!e.retryable || attempt >= cfg.max_retries) throw;
            if (sleep) sleep(backoff.delay(attempt, jitter_rng));
        }
    }
}

// ---------------------------------------------------------------------------
// Mock

/// A scripted reply: text, or a simulated failure.
struct MockFailure {
    bool auth = false;
    int status = 503;
};
using MockReply = std::variant<std::string, MockFailure>;

/// Deterministic scripted client. Each prompt hash owns a reply sequence; the
/// n-th call with that hash gets entry n and the last entry repeats. Prompts
/// not in the script use the default sequence, and failing that the responder
/// callback.
///
/// Script file shape:
///   {"responses": {"<hash>": ["text", {"fail": "transient"}, ...]},
///    "default": ["text", ...]}
class MockClient : public ChatClient {
public:
    using Responder = std::function<MockReply(const ChatRequest&, std::size_t call_index)>;

    MockClient() = default;
    explicit MockClient(Responder responder) : responder_(std::move(responder)) {}

    /// Adds the entries of a script document (see class comment).
    void load_script(const nlohmann::json& script) {
        auto parse_seq = [](const nlohmann::json& arr, const std::string& where) {
            if (!arr.is_array() || arr.empty()) throw ConfigError("mock script: " + where + " must be a non-empty array");
            std::vector<MockReply> seq;
            for (const auto& e : arr) {
                if (e.is_string()) {
                    seq.emplace_back(e.get<std::string>());
                } else if (e.is_object() && e.contains("fail")) {
                    const std::string kind = e.at("fail").get<std::string>();
                    if (kind == "transient") {
                        seq.emplace_back(MockFailure{false, e.value("status", 503)});
                    } else if (kind == "auth") {
                        seq.emplace_back(MockFailure{true, e.value("status", 401)});
                    } else {
                        throw ConfigError("mock script: unknown failure kind '" + kind + "'");
                    }
                } else {
                    throw ConfigError("mock script: entries of " + where + " must be strings or {\"fail\": ...}");
                }
            }
            return seq;
        };
        std::lock_guard lock(mu_);
        if (script.contains("responses")) {
            for (const auto& [hash, seq] : script.at("responses").items()) script_[hash] = parse_seq(seq, hash);
        }
        if (script.contains("default")) default_ = parse_seq(script.at("default"), "default");
    }

    void script(const std::string& hash, std::vector<MockReply> replies) {
        std::lock_guard lock(mu_);
        script_[hash] = std::move(replies);
    }

    std::string send(const ChatRequest& req, double /*timeout_s*/) override {
        const std::string hash = prompt_hash(req.system_prompt, req.user_prompt);
        MockReply reply;
        std::optional<std::size_t> responder_call;
        {
            std::lock_guard lock(mu_);
            ++total_calls_;
            const std::size_t n = per_hash_calls_[hash]++;
            if (auto it = script_.find(hash); it != script_.end()) {
                reply = it->second[std::min(n, it->second.size() - 1)];
            } else if (!default_.empty()) {
                reply = default_[std::min(n, default_.size() - 1)];
            } else if (responder_) {
                responder_call = n;
            } else {
                throw TransportError("mock: no scripted reply for prompt " + hash, 404, false);
            }
        }
        if (responder_call) reply = responder_(req, *responder_call);
        if (auto* f = std::get_if<MockFailure>(&reply)) {
            if (f->auth) throw AuthError("mock: authentication failed", f->status);
            throw TransportError("mock: transient failure (status " + std::to_string(f->status) + ")", f->status, true);
        }
        return std::get<std::string>(reply);
    }

    std::size_t total_calls() const {
        std::lock_guard lock(mu_);
        return total_calls_;
    }

    std::size_t calls_for(const std::string& hash) const {
        std::lock_guard lock(mu_);
        auto it = per_hash_calls_.find(hash);
        return it == per_hash_calls_.end() ? 0 : it->second;
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::vector<MockReply>> script_;
    std::vector<MockReply> default_;
    Responder responder_;
    std::map<std::string, std::size_t> per_hash_calls_;
    std::size_t total_calls_ = 0;
};

// ---------------------------------------------------------------------------
// Candidate specs

/// The JSON object embedded in a model reply: the span from the first '{' to
/// its matching '}', so code fences and chatter around it are ignored.
inline std::optional<std::string> extract_json_object(std::string_view text) {
    const auto start = text.find('{');
    if (start == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}' && --depth == 0) {
            return std::string(text.substr(start, i - start + 1));
        }
    }
    return std::nullopt;
}

/// Parses and validates candidate text. Parse failures come back as a
/// single violation on field "$".
inline std::pair<std::optional<ChartSpec>, ValidationReport> check_candidate(std::string_view text) {
    auto obj = extract_json_object(text);
    if (!obj) return {std::nullopt, {{"$", "no JSON object found"}}};
    ChartSpec spec;
    try {
        spec = parse_spec(*obj);
    } catch (const std::exception& e) {
        return {std::nullopt, {{"$", std::string("unparseable: ") + e.what()}}};
    }
    auto report = validate_spec(spec);
    if (!report.empty()) return {std::nullopt, std::move(report)};
    return {std::move(spec), {}};
}

/// Raised when expansion stops on a client failure; holds what was produced.
struct ExpansionError : Error {
    std::vector<std::string> partial;
    ExpansionError(const std::string& what, std::vector<std::string> done) : Error(what), partial(std::move(done)) {}
};

struct ExpansionOptions {
    std::size_t demonstrations = 3;  // k seeds per prompt
    std::uint64_t seed = 42;
    std::vector<std::string> topics = default_topics();
    std::filesystem::path prompt_dir;  // empty: built-in templates
};

inline const std::vector<std::string>& evol_operations() {
    static const std::vector<std::string> ops{
        "add one more data series",
        "add more categories or points",
        "use values with one more significant digit",
        "use a tick interval that is not a round number",
        "narrow the gap between neighbouring values",
    };
    return ops;
}

namespace detail {

inline std::vector<std::string> run_expansion(std::size_t n, const std::function<std::string(std::size_t)>& one) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            out.push_back(one(i));
        } catch (const TransportError& e) {
            throw ExpansionError("expansion stopped at candidate " + std::to_string(i) + ": " + e.what(), out);
        }
    }
    return out;
}

}  // namespace detail

/// Self-Instruct: n candidate spec texts, each prompted with k seeds drawn
/// from the pool as demonstrations.
inline std::vector<std::string> self_instruct_expand(const std::vector<ChartSpec>& seeds, ChatClient& client,
                                                     const ClientConfig& cfg, std::size_t n,
                                                     const ExpansionOptions& opt = {},
                                                     const Sleeper& sleep = real_sleep) {
    if (seeds.empty()) throw ConfigError("self_instruct_expand: seed pool is empty");
    if (opt.topics.empty()) throw ConfigError("self_instruct_expand: topic list is empty");
    const PromptTemplate tmpl = load_prompt("self_instruct", opt.prompt_dir);
    return detail::run_expansion(n, [&](std::size_t i) {
        Rng rng(derive_seed(opt.seed, "self-instruct", i));
        std::vector<std::size_t> idx(seeds.size());
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
        rng.shuffle(idx);
        const std::size_t k = std::min(opt.demonstrations, seeds.size());
        std::string demos;
        for (std::size_t j = 0; j < k; ++j) demos += serialize(seeds[idx[j]]) + "\n";
        const ChartType type = kAllChartTypes[rng.below(kAllChartTypes.size())];
        const std::string& topic = rng.pick(opt.topics);
        const std::string user = fill_prompt(
            tmpl.user, {{"demonstrations", trim(demos)}, {"chart_type", std::string(to_string(type))}, {"topic", topic}});
        return complete(client, cfg, tmpl.system, user, std::nullopt, std::nullopt, sleep);
    });
}

/// Evol-Instruct: n candidates, each a harder rewrite of one seed.
inline std::vector<std::string> evol_instruct_expand(const std::vector<ChartSpec>& seeds, ChatClient& client,
                                                     const ClientConfig& cfg, std::size_t n,
                                                     const ExpansionOptions& opt = {},
                                                     const Sleeper& sleep = real_sleep) {
    if (seeds.empty()) throw ConfigError("evol_instruct_expand: seed pool is empty");
    const PromptTemplate tmpl = load_prompt("evol_instruct", opt.prompt_dir);
    return detail::run_expansion(n, [&](std::size_t i) {
        Rng rng(derive_seed(opt.seed, "evol-instruct", i));
        const ChartSpec& base = rng.pick(seeds);
        const std::string& op = rng.pick(evol_operations());
        const std::string user = fill_prompt(tmpl.user, {{"spec", serialize(base)}, {"operation", op}});
        return complete(client, cfg, tmpl.system, user, std::nullopt, std::nullopt, sleep);
    });
}

// ---------------------------------------------------------------------------
// Self-repair

enum class RepairOutcome { accepted, repaired, abandoned };

inline std::string_view to_string(RepairOutcome o) {
    switch (o) {
        case RepairOutcome::accepted: return "accepted";
        case RepairOutcome::repaired: return "repaired";
        case RepairOutcome::abandoned: return "abandoned";
    }
    return "?";
}

struct RepairAttempt {
    std::string candidate_spec_text;
    ValidationReport validation_report;
    std::size_t attempt_index = 0;  // 1-based
    RepairOutcome outcome = RepairOutcome::abandoned;
};

struct RepairResult {
    std::vector<RepairAttempt> history;
    std::optional<ChartSpec> spec;           // set only when accepted or repaired
    std::optional<std::string> transport_error;  // loop aborted by the client

    bool ok() const { return spec.has_value(); }
};

/// Validates the candidate; on failure sends it back with the violations and
/// tries again, up to max_attempts validations in total. A passing attempt is
/// "accepted" at attempt 1 and "repaired" later; failing attempts are
/// "abandoned".
inline RepairResult repair_loop(std::string candidate_text, ChatClient& client, const ClientConfig& cfg,
                                std::size_t max_attempts = 3, const std::filesystem::path& prompt_dir = {},
                                const Sleeper& sleep = real_sleep) {
    if (max_attempts < 1) throw ConfigError("repair_loop: max_attempts must be >= 1");
    const PromptTemplate tmpl = load_prompt("repair", prompt_dir);
    RepairResult res;
    for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
        auto [spec, report] = check_candidate(candidate_text);
        RepairAttempt a{candidate_text, report, attempt, RepairOutcome::abandoned};
        if (spec) {
            a.outcome = attempt == 1 ? RepairOutcome::accepted : RepairOutcome::repaired;
            res.history.push_back(std::move(a));
            res.spec = std::move(spec);
            return res;
        }
        res.history.push_back(std::move(a));
        if (attempt == max_attempts) break;
        std::string violations;
        for (const auto& v : report) violations += "- " + v.field + ": " + v.rule + "\n";
        const std::string user = fill_prompt(tmpl.user, {{"candidate", candidate_text}, {"violations", trim(violations)}});
        try {
            candidate_text = complete(client, cfg, tmpl.system, user, std::nullopt, std::nullopt, sleep);
        } catch (const TransportError& e) {
            res.transport_error = e.what();
            return res;
        }
    }
    return res;
}

}  // namespace chartforge
