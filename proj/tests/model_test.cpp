#include "smtl/model.hpp"

#include <gtest/gtest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "replay_server.hpp"
#include "smtl/util.hpp"

namespace smtl {
namespace {

using testing::ReplayServer;

std::string fixture(const std::string& name) {
    return std::string(SMTL_FIXTURES_DIR) + "/" + name;
}

TEST(Fingerprint, StableAndSensitive) {
    std::vector<ChatMessage> a = {{"system", "s"}, {"user", "hello"}};
    std::vector<ChatMessage> b = {{"system", "s"}, {"user", "hellp"}};
    EXPECT_EQ(fingerprint(a), fingerprint(a));
    EXPECT_NE(fingerprint(a), fingerprint(b));
    // Role/content boundary must matter.
    std::vector<ChatMessage> c = {{"system", "sh"}, {"user", "ello"}};
    EXPECT_NE(fingerprint(a), fingerprint(c));
}

TEST(Fingerprint, ThousandFixtureCollisionScan) {
    std::set<std::string> keys;
    for (int i = 0; i < 1000; ++i) {
        std::vector<ChatMessage> msgs = {
            {"system", "prompt variant " + std::to_string(i % 7)},
            {"user", "task " + std::to_string(i)},
            {"assistant", "turn " + std::to_string(i * 31)},
        };
        keys.insert(fingerprint(msgs));
    }
    EXPECT_EQ(keys.size(), 1000u);
}

TEST(ScriptedBackend, FingerprintKeyedVerbatim) {
    ScriptedBackend backend;
    std::vector<ChatMessage> msgs = {{"user", "ping"}};
    backend.add_response(fingerprint(msgs), "pong verbatim");
    ChatRequest req;
    req.messages = msgs;
    EXPECT_EQ(backend.complete(req).text, "pong verbatim");
    EXPECT_EQ(backend.complete(req).text, "pong verbatim");
}

TEST(ScriptedBackend, UnknownFingerprintRejectsLoudly) {
    ScriptedBackend backend;
    ChatRequest req;
    req.messages = {{"user", "never scripted"}};
    EXPECT_THROW(backend.complete(req), std::runtime_error);
}

TEST(ScriptedBackend, SequenceAndInjectedFailure) {
    ScriptedBackend backend;
    backend.add_sequence({"first", "second"});
    backend.add_failure(EnvFailure::Kind::Timeout, "injected");
    ChatRequest req;
    req.messages = {{"user", "x"}};
    EXPECT_EQ(backend.complete(req).text, "first");
    EXPECT_EQ(backend.complete(req).text, "second");
    try {
        backend.complete(req);
        FAIL() << "expected EnvFailure";
    } catch (const EnvFailure& e) {
        EXPECT_EQ(e.kind(), EnvFailure::Kind::Timeout);
    }
}

TEST(HttpChatBackend, RecordedFixtureReplaysByteIdentical) {
    const std::string recorded = read_file(fixture("http/chat_response.json"));

    // The recording pins the exact request the live client emits.
    ChatRequest req;
    req.model_id = "test-model";
    req.temperature = 0.0;
    req.max_tokens = 64;
    req.messages = {{"user", "ping"}};
    nlohmann::json expected_request;
    expected_request["model"] = req.model_id;
    expected_request["temperature"] = req.temperature;
    expected_request["max_tokens"] = req.max_tokens;
    expected_request["messages"] = {{{"role", "user"}, {"content", "ping"}}};

    ReplayServer server({{"POST", "/v1/chat/completions", expected_request.dump(), 200,
                          "application/json", recorded}});
    HttpBackendConfig cfg;
    cfg.base_url = server.base_url();
    cfg.max_retries = 0;
    HttpChatBackend backend(cfg);

    ChatResponse resp = backend.complete(req);
    EXPECT_EQ(backend.last_raw_response(), recorded);
    EXPECT_EQ(resp.text, "<answer>Queen Marie of Romania</answer>");
    EXPECT_EQ(resp.finish_reason, "stop");
    EXPECT_EQ(resp.prompt_tokens, 212);
    EXPECT_EQ(resp.completion_tokens, 14);
    EXPECT_EQ(server.requests_served(), 1);
}

TEST(HttpChatBackend, RetriesThenEnvFailure) {
    ReplayServer server({{"POST", "/v1/chat/completions", "", 503, "text/plain", "overloaded"}});
    HttpBackendConfig cfg;
    cfg.base_url = server.base_url();
    cfg.max_retries = 2;
    cfg.retry_backoff_ms = 1;
    HttpChatBackend backend(cfg);
    ChatRequest req;
    req.messages = {{"user", "x"}};
    try {
        backend.complete(req);
        FAIL() << "expected EnvFailure";
    } catch (const EnvFailure& e) {
        EXPECT_EQ(e.kind(), EnvFailure::Kind::ServerError);
    }
    EXPECT_EQ(server.requests_served(), 3);  // initial try + 2 retries
}

TEST(HttpChatBackend, ContextOverflowAtServerIsNotRetried) {
    ReplayServer server({{"POST", "/v1/chat/completions", "", 400, "application/json",
                          "{\"error\": \"maximum context length exceeded\"}"}});
    HttpBackendConfig cfg;
    cfg.base_url = server.base_url();
    cfg.max_retries = 3;
    cfg.retry_backoff_ms = 1;
    HttpChatBackend backend(cfg);
    ChatRequest req;
    req.messages = {{"user", "x"}};
    try {
        backend.complete(req);
        FAIL() << "expected EnvFailure";
    } catch (const EnvFailure& e) {
        EXPECT_EQ(e.kind(), EnvFailure::Kind::ContextOverflowAtServer);
    }
    EXPECT_EQ(server.requests_served(), 1);
}

TEST(HttpChatBackend, UnreachableHostTimesOut) {
    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";
    cfg.max_retries = 0;
    cfg.retry_backoff_ms = 1;
    cfg.timeout_seconds = 1;
    HttpChatBackend backend(cfg);
    ChatRequest req;
    req.messages = {{"user", "x"}};
    try {
        backend.complete(req);
        FAIL() << "expected EnvFailure";
    } catch (const EnvFailure& e) {
        EXPECT_EQ(e.kind(), EnvFailure::Kind::Timeout);
    }
}

}  // namespace
}  // namespace smtl
