#include "smtl/model.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "smtl/util.hpp"

namespace smtl {

using nlohmann::json;

const char* EnvFailure::kind_name() const {
    switch (kind_) {
        case Kind::Timeout: return "Timeout";
        case Kind::ServerError: return "ServerError";
        case Kind::ContextOverflowAtServer: return "ContextOverflowAtServer";
    }
    return "ServerError";
}

std::string fingerprint(const std::vector<ChatMessage>& messages) {
    uint64_t h = fnv1a64("chat/v1");
    for (const ChatMessage& m : messages) {
        h = fnv1a64(m.role, h);
        h = fnv1a64("\x1f", h);  // separators keep (role, content) boundaries unambiguous
        h = fnv1a64(m.content, h);
        h = fnv1a64("\x1e", h);
    }
    return hex64(h);
}

void ScriptedBackend::add_response(const std::string& fingerprint_key, const std::string& text) {
    std::lock_guard<std::mutex> lock(mutex_);
    by_fingerprint_[fingerprint_key] = text;
}

void ScriptedBackend::add_sequence(std::vector<std::string> responses) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto& r : responses) sequence_.push_back({false, EnvFailure::Kind::ServerError, std::move(r)});
}

void ScriptedBackend::add_failure(EnvFailure::Kind kind, const std::string& detail) {
    std::lock_guard<std::mutex> lock(mutex_);
    sequence_.push_back({true, kind, detail});
}

ChatResponse ScriptedBackend::complete(const ChatRequest& req) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_made_;
    std::string key = fingerprint(req.messages);
    auto it = by_fingerprint_.find(key);
    std::string text;
    if (it != by_fingerprint_.end()) {
        text = it->second;
    } else if (next_ < sequence_.size()) {
        const Scripted& s = sequence_[next_++];
        if (s.fail) throw EnvFailure(s.fail_kind, s.text);
        text = s.text;
    } else {
        throw std::runtime_error("scripted backend has no response for fingerprint " + key +
                                 " and the sequence is exhausted");
    }
    ChatResponse resp;
    resp.text = text;
    resp.finish_reason = "stop";
    resp.prompt_tokens = 0;
    resp.completion_tokens = static_cast<long>(text.size() / 4);
    return resp;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {}

std::string HttpChatBackend::last_raw_response() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_raw_;
}

ChatResponse HttpChatBackend::complete(const ChatRequest& req) {
    if (req.messages.empty()) {
        throw std::invalid_argument("chat request has no messages");
    }
    json body;
    body["model"] = req.model_id;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    json msgs = json::array();
    for (const ChatMessage& m : req.messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = std::move(msgs);
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    EnvFailure::Kind last_kind = EnvFailure::Kind::ServerError;
    int backoff_ms = config_.retry_backoff_ms;

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        auto res = client.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_kind = EnvFailure::Kind::Timeout;
            last_error = "no response from " + config_.base_url + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 400 || res->status == 413) {
            // Oversized prompts are not retryable.
            if (res->body.find("context") != std::string::npos ||
                res->body.find("length") != std::string::npos || res->status == 413) {
                throw EnvFailure(EnvFailure::Kind::ContextOverflowAtServer,
                                 "server rejected request: " + res->body.substr(0, 256));
            }
        }
        if (res->status >= 500 || res->status == 429) {
            last_kind = EnvFailure::Kind::ServerError;
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw EnvFailure(EnvFailure::Kind::ServerError,
                             "status " + std::to_string(res->status) + ": " +
                                 res->body.substr(0, 256));
        }
        try {
            json parsed = json::parse(res->body);
            ChatResponse out;
            const json& choice = parsed.at("choices").at(0);
            out.text = choice.at("message").at("content").get<std::string>();
            out.finish_reason = choice.value("finish_reason", "stop");
            if (parsed.contains("usage")) {
                out.prompt_tokens = parsed["usage"].value("prompt_tokens", 0L);
                out.completion_tokens = parsed["usage"].value("completion_tokens", 0L);
            }
            {
                std::lock_guard<std::mutex> lock(mutex_);
                last_raw_ = res->body;
            }
            return out;
        } catch (const json::exception& e) {
            last_kind = EnvFailure::Kind::ServerError;
            last_error = std::string("undecodable response: ") + e.what();
            continue;
        }
    }
    throw EnvFailure(last_kind, "chat backend failed after " +
                                    std::to_string(config_.max_retries + 1) + " attempts: " +
                                    last_error);
}

}  // namespace smtl
