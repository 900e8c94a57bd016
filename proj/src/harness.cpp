#include "smtl/harness.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "smtl/util.hpp"

namespace smtl {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<BenchTask> load_tasks_jsonl(const std::string& path) {
    std::vector<BenchTask> tasks;
    std::vector<std::string> lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw std::runtime_error(path + " line " + std::to_string(i + 1) + ": " + e.what());
        }
        BenchTask task;
        task.id = j.value("id", "");
        task.question = j.value("question", "");
        task.answer = j.value("answer", "");
        auto mode = task_mode_from_name(j.value("mode", "search"));
        if (!mode) {
            throw std::runtime_error(path + " line " + std::to_string(i + 1) +
                                     ": unknown mode \"" + j.value("mode", "") + "\"");
        }
        task.mode = *mode;
        if (task.id.empty() || task.question.empty()) {
            throw std::runtime_error(path + " line " + std::to_string(i + 1) +
                                     ": task needs nonempty id and question");
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

ModelScript ModelScript::parse(const std::string& json_text) {
    json j = json::parse(json_text);
    ModelScript script;
    if (j.contains("tasks")) {
        for (const auto& [task_id, turns] : j["tasks"].items()) {
            std::vector<Entry> entries;
            for (const json& turn : turns) {
                Entry entry;
                if (turn.is_string()) {
                    entry.text = turn.get<std::string>();
                } else if (turn.is_object() && turn.contains("env_failure")) {
                    entry.fail = true;
                    std::string kind = turn["env_failure"].get<std::string>();
                    if (kind == "Timeout") entry.fail_kind = EnvFailure::Kind::Timeout;
                    else if (kind == "ContextOverflowAtServer") entry.fail_kind = EnvFailure::Kind::ContextOverflowAtServer;
                    else entry.fail_kind = EnvFailure::Kind::ServerError;
                    entry.text = turn.value("detail", "scripted environment failure");
                } else {
                    throw std::runtime_error("script entry for task " + task_id +
                                             " must be a string or an env_failure object");
                }
                entries.push_back(std::move(entry));
            }
            script.by_task[task_id] = std::move(entries);
        }
    }
    if (j.contains("fingerprints")) {
        for (const auto& [fp, text] : j["fingerprints"].items()) {
            script.by_fingerprint[fp] = text.get<std::string>();
        }
    }
    return script;
}

ModelScript ModelScript::load(const std::string& path) {
    try {
        return parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::shared_ptr<ScriptedBackend> ModelScript::backend_for_task(const std::string& task_id) const {
    auto backend = std::make_shared<ScriptedBackend>();
    auto it = by_task.find(task_id);
    if (it != by_task.end()) {
        for (const Entry& entry : it->second) {
            if (entry.fail) {
                backend->add_failure(entry.fail_kind, entry.text);
            } else {
                backend->add_sequence({entry.text});
            }
        }
    }
    for (const auto& [fp, text] : by_fingerprint) backend->add_response(fp, text);
    return backend;
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v == nullptr ? fallback : std::string(v);
}

}  // namespace

std::shared_ptr<ToolRouter> build_tool_router(const RunProfile& profile,
                                              std::shared_ptr<ModelBackend> summarizer_model) {
    std::string backend = profile.option("tools.backend", "mock");
    int top_k = profile.engine.top_k;
    if (backend == "mock") {
        std::string corpus_dir = profile.option("tools.corpus");
        if (corpus_dir.empty()) {
            throw std::invalid_argument("mock tools need tools.corpus (or --corpus)");
        }
        auto corpus = std::make_shared<MockCorpus>(MockCorpus::load(corpus_dir));
        auto search = std::make_shared<MockSearchBackend>(corpus);
        auto pages = std::make_shared<MockPageSource>(corpus);
        std::shared_ptr<Summarizer> summarizer;
        if (profile.option("tools.summarizer", "template") == "model" && summarizer_model) {
            summarizer = std::make_shared<ModelSummarizer>(
                summarizer_model, profile.option("tools.summarizer_model_id", "summarizer"));
        } else {
            summarizer = std::make_shared<TemplateSummarizer>();
        }
        return std::make_shared<ToolRouter>(search, pages, summarizer, top_k);
    }
    if (backend == "live") {
        HttpToolConfig search_cfg;
        search_cfg.base_url = profile.option("tools.search_base_url", "https://google.serper.dev");
        search_cfg.path = profile.option("tools.search_path", "/search");
        search_cfg.api_key = env_or("SEARCH_API_KEY", "");
        search_cfg.timeout_seconds = static_cast<int>(
            std::stol(profile.option("tools.timeout_seconds", "30")));
        HttpToolConfig reader_cfg;
        reader_cfg.base_url = profile.option("tools.reader_base_url", "https://r.jina.ai");
        reader_cfg.path = profile.option("tools.reader_path", "/");
        reader_cfg.timeout_seconds = search_cfg.timeout_seconds;
        auto search = std::make_shared<HttpSearchBackend>(search_cfg);
        auto pages = std::make_shared<HttpReaderSource>(reader_cfg);
        std::shared_ptr<Summarizer> summarizer;
        if (summarizer_model) {
            summarizer = std::make_shared<ModelSummarizer>(
                summarizer_model, profile.option("tools.summarizer_model_id", "summarizer"));
        } else {
            summarizer = std::make_shared<TemplateSummarizer>();
        }
        return std::make_shared<ToolRouter>(search, pages, summarizer, top_k);
    }
    throw std::invalid_argument("unknown tools.backend \"" + backend + "\"");
}

std::shared_ptr<ModelBackend> build_agent_backend(const RunProfile& profile,
                                                  const ModelScript* script,
                                                  const std::string& task_id) {
    std::string backend = profile.option("model.backend", "scripted");
    if (backend == "scripted") {
        if (!script) {
            throw std::invalid_argument("scripted model needs model.script (or --script)");
        }
        return script->backend_for_task(task_id);
    }
    if (backend == "live") {
        HttpBackendConfig cfg;
        cfg.base_url = env_or("MODEL_BASE_URL", profile.option("model.base_url"));
        if (cfg.base_url.empty()) {
            throw std::invalid_argument("live model needs MODEL_BASE_URL or model.base_url");
        }
        cfg.path = profile.option("model.path", "/v1/chat/completions");
        cfg.api_key = env_or("MODEL_API_KEY", "");
        return std::make_shared<HttpChatBackend>(cfg);
    }
    throw std::invalid_argument("unknown model.backend \"" + backend + "\"");
}

std::string sanitize_file_stem(const std::string& id) {
    std::string out;
    for (char c : id) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? "task" : out;
}

SuiteResult run_suite(const std::vector<BenchTask>& tasks, const RunProfile& profile,
                      const ModelScript* script, const std::string& out_dir, int jobs) {
    fs::create_directories(out_dir);
    const bool offline = profile.option("model.backend", "scripted") == "scripted";

    SuiteResult result;
    result.items.resize(tasks.size());
    std::atomic<size_t> cursor{0};
    std::mutex failure_mutex;
    std::vector<std::string> failures;

    auto worker = [&] {
        while (true) {
            size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            const BenchTask& bench = tasks[i];
            try {
                EngineBackends backends;
                backends.agent_model = build_agent_backend(profile, script, bench.id);
                backends.tools = build_tool_router(profile, backends.agent_model);
                Engine engine(profile.engine, backends, offline ? zero_clock() : steady_clock_ms());
                Trajectory traj = engine.run_episode({bench.id, bench.question, bench.mode});
                std::string file =
                    (fs::path(out_dir) / (sanitize_file_stem(bench.id) + ".jsonl")).string();
                write_trajectory_file(file, traj, engine.last_plan_snapshots());
                result.items[i] = {bench.id, file, traj.termination, traj.metrics.steps};
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failures.push_back(bench.id + ": " + e.what());
            }
        }
    };

    int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!failures.empty()) {
        std::string detail;
        for (const std::string& f : failures) detail += "\n  " + f;
        throw std::runtime_error("suite runner failed:" + detail);
    }
    for (const auto& item : result.items) {
        if (item.termination == Termination::EnvFailure) result.any_env_failure = true;
    }
    return result;
}

Verdict exact_match_verdict(const std::string& labeled, const std::string& predicted) {
    Verdict verdict;
    bool equal = to_lower(trim(labeled)) == to_lower(trim(predicted));
    verdict.judgement = equal ? "correct" : "incorrect";
    verdict.rationale = equal ? "exact match after trimming and case folding"
                              : "predicted answer differs from the labeled answer";
    return verdict;
}

}  // namespace smtl
