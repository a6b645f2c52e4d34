#pragma once

// OpenAI-compatible chat-completions client over cpp-httplib. Define
// CPPHTTPLIB_OPENSSL_SUPPORT (and link OpenSSL) before including to reach
// https endpoints.

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "chartforge/gen_client.hpp"

namespace chartforge {

struct EndpointUrl {
    std::string scheme_host_port;  // e.g. http://localhost:8000
    std::string path;              // e.g. /v1/chat/completions
};

/// Splits an endpoint into host part and request path. A base URL gets
/// "/chat/completions" appended; a URL already ending in it is kept.
inline EndpointUrl split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must start with http:// or https://: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    EndpointUrl e;
    e.scheme_host_port = url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    static constexpr std::string_view suffix = "/chat/completions";
    if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0) {
        path += suffix;
    }
    e.path = path;
    return e;
}

inline nlohmann::json chat_request_body(const ClientConfig& cfg, const ChatRequest& req) {
    using nlohmann::json;
    json user_content;
    if (req.image) {
        const std::string data_url =
            "data:" + req.image->mime_type + ";base64," + httplib::detail::base64_encode(req.image->bytes);
        user_content = json::array({json{{"type", "image_url"}, {"image_url", {{"url", data_url}}}},
                                    json{{"type", "text"}, {"text", req.user_prompt}}});
    } else {
        user_content = req.user_prompt;
    }
    json messages = json::array();
    if (!req.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", user_content}});
    return json{{"model", cfg.model_name},
                {"messages", messages},
                {"temperature", req.temperature},
                {"max_tokens", req.max_tokens}};
}

class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(ClientConfig cfg) : cfg_(std::move(cfg)), url_(split_endpoint(cfg_.endpoint_url)) {
        cfg_.validate();
    }

    std::string send(const ChatRequest& req, double timeout_s) override {
        httplib::Client cli(url_.scheme_host_port);
        const auto secs = static_cast<time_t>(timeout_s);
        const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!cfg_.api_key_env.empty()) {
            if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
                headers.emplace("Authorization", std::string("Bearer ") + key);
            }
        }
        const std::string body = chat_request_body(cfg_, req).dump();
        auto res = cli.Post(url_.path, headers, body, "application/json");
        if (!res) {
            throw TransportError("request to " + cfg_.endpoint_url + " failed: " + httplib::to_string(res.error()), 0,
                                 true);
        }
        if (res->status == 401 || res->status == 403) {
            throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")", res->status);
        }
        if (res->status == 429 || res->status >= 500) {
            throw TransportError("endpoint returned HTTP " + std::to_string(res->status), res->status, true);
        }
        if (res->status != 200) {
            throw TransportError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body, res->status,
                                 false);
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed completion response: ") + e.what(), res->status, false);
        }
    }

private:
    ClientConfig cfg_;
    EndpointUrl url_;
};

}  // namespace chartforge
