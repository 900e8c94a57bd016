#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smtl {

struct ChatMessage {
    std::string role;  // system | user | assistant | tool
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 8192;
};

struct ChatResponse {
    std::string text;
    std::string finish_reason = "stop";
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

class EnvFailure : public std::runtime_error {
public:
    enum class Kind { Timeout, ServerError, ContextOverflowAtServer };

    EnvFailure(Kind kind, const std::string& reason)
        : std::runtime_error(reason), kind_(kind) {}

    Kind kind() const { return kind_; }
    const char* kind_name() const;

private:
    Kind kind_;
};

/// Stable key over a message list; used by the scripted backend and the
/// determinism suite. Pure; order- and content-sensitive.
std::string fingerprint(const std::vector<ChatMessage>& messages);

class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    /// Exactly one response per call. Transient failures are retried by the
    /// concrete backend; irrecoverable ones surface as EnvFailure.
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

/// Deterministic test backend. Responses come from either a per-key script
/// (fingerprint -> response) or an ordered sequence consumed one per call.
/// Unknown fingerprints and exhausted sequences throw: fixtures must be
/// total, never improvised.
class ScriptedBackend : public ModelBackend {
public:
    ScriptedBackend() = default;

    void add_response(const std::string& fingerprint_key, const std::string& text);
    void add_sequence(std::vector<std::string> responses);

    /// Queues an EnvFailure to be thrown instead of the next sequence item.
    void add_failure(EnvFailure::Kind kind, const std::string& detail);

    ChatResponse complete(const ChatRequest& req) override;

    int calls_made() const { return calls_made_; }

private:
    struct Scripted {
        bool fail = false;
        EnvFailure::Kind fail_kind = EnvFailure::Kind::ServerError;
        std::string text;
    };

    std::map<std::string, std::string> by_fingerprint_;
    std::vector<Scripted> sequence_;
    size_t next_ = 0;
    int calls_made_ = 0;
    std::mutex mutex_;
};

struct HttpBackendConfig {
    std::string base_url;           // e.g. http://127.0.0.1:8080
    std::string path = "/v1/chat/completions";
    std::string api_key;            // sent as a bearer token when nonempty
    int timeout_seconds = 120;
    int max_retries = 3;            // bounded retries before EnvFailure
    int retry_backoff_ms = 250;     // doubles per attempt
};

/// Chat-completions client speaking the standard HTTP JSON schema, so any
/// compatible server works. Thread safe; each call opens its own connection.
class HttpChatBackend : public ModelBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);

    ChatResponse complete(const ChatRequest& req) override;

    /// Raw body of the most recent successful response (record/replay hook).
    std::string last_raw_response() const;

private:
    HttpBackendConfig config_;
    mutable std::mutex mutex_;
    std::string last_raw_;
};

}  // namespace smtl
