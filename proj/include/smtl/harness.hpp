#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "smtl/config.hpp"
#include "smtl/engine.hpp"
#include "smtl/eval.hpp"

namespace smtl {

/// One benchmark task: JSON Lines of {id, question, answer, mode}.
struct BenchTask {
    std::string id;
    std::string question;
    std::string answer;
    TaskMode mode = TaskMode::Search;
};

std::vector<BenchTask> load_tasks_jsonl(const std::string& path);

/// Scripted-model fixture file:
///   {"tasks": {"<id>": [<turn>, ...]}, "fingerprints": {"<fp>": "<response>"}}
/// A turn is either a response string or {"env_failure": "<kind>",
/// "detail": "..."} to inject a backend failure at that point.
struct ModelScript {
    struct Entry {
        bool fail = false;
        EnvFailure::Kind fail_kind = EnvFailure::Kind::ServerError;
        std::string text;
    };

    std::map<std::string, std::vector<Entry>> by_task;
    std::map<std::string, std::string> by_fingerprint;

    static ModelScript load(const std::string& path);
    static ModelScript parse(const std::string& json_text);

    /// Fresh backend preloaded with the task's sequence plus all
    /// fingerprint-keyed responses.
    std::shared_ptr<ScriptedBackend> backend_for_task(const std::string& task_id) const;
};

/// Assembles the tool router a profile asks for. Mock profiles need
/// tools.corpus; the summarizer option picks template (offline) or model.
std::shared_ptr<ToolRouter> build_tool_router(const RunProfile& profile,
                                              std::shared_ptr<ModelBackend> summarizer_model);

/// Agent-model backend for a profile; scripted profiles take the per-task
/// script, live ones read MODEL_BASE_URL / MODEL_API_KEY.
std::shared_ptr<ModelBackend> build_agent_backend(const RunProfile& profile,
                                                  const ModelScript* script,
                                                  const std::string& task_id);

struct SuiteResult {
    struct Item {
        std::string task_id;
        std::string file;
        Termination termination = Termination::EnvFailure;
        int steps = 0;
    };
    std::vector<Item> items;
    bool any_env_failure = false;
};

/// Runs every task through its own engine instance, at most `jobs` episodes
/// in flight, writing <out_dir>/<sanitized id>.jsonl. Offline profiles use
/// the zero clock so outputs are byte-reproducible.
SuiteResult run_suite(const std::vector<BenchTask>& tasks, const RunProfile& profile,
                      const ModelScript* script, const std::string& out_dir, int jobs);

/// Offline stand-in judge: normalized string equality between labeled and
/// predicted answers.
Verdict exact_match_verdict(const std::string& labeled, const std::string& predicted);

std::string sanitize_file_stem(const std::string& id);

}  // namespace smtl
