// Operator entry point: run episodes, evaluate benchmark outputs, curate
// trajectories, replay recorded runs, and sweep retrieval top-k.
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smtl/config.hpp"
#include "smtl/curation.hpp"
#include "smtl/engine.hpp"
#include "smtl/eval.hpp"
#include "smtl/harness.hpp"
#include "smtl/util.hpp"

namespace fs = std::filesystem;
using namespace smtl;

namespace {

struct CommonOpts {
    std::string profile = "mock";
    std::string config_file;
    std::string tasks_file;
    std::string out = "out";
    std::string script_file;
    std::string corpus_dir;
    int jobs = 1;
    std::optional<int> top_k;
    std::optional<int> max_steps;
    std::optional<bool> strict_format;
    std::string judge_mode;
    std::string judge_script;
    std::string judge_model;
};

RunProfile resolve_profile(const CommonOpts& opts) {
    RunProfile profile = builtin_profile(opts.profile);
    if (!opts.config_file.empty()) apply_config(profile, parse_config_file(opts.config_file));
    if (!opts.script_file.empty()) profile.options["model.script"] = opts.script_file;
    if (!opts.corpus_dir.empty()) profile.options["tools.corpus"] = opts.corpus_dir;
    if (!opts.judge_mode.empty()) profile.options["judge.mode"] = opts.judge_mode;
    if (!opts.judge_script.empty()) profile.options["judge.script"] = opts.judge_script;
    if (!opts.judge_model.empty()) profile.options["judge.model_id"] = opts.judge_model;
    if (opts.top_k) profile.engine.top_k = *opts.top_k;
    if (opts.max_steps) profile.engine.max_steps = *opts.max_steps;
    if (opts.strict_format) profile.engine.strict_format = *opts.strict_format;
    return profile;
}

std::vector<std::string> list_trajectory_files(const std::string& dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("not a directory: " + dir);
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .jsonl trajectories in " + dir);
    return files;
}

int cmd_run(const CommonOpts& opts) {
    RunProfile profile = resolve_profile(opts);
    std::vector<BenchTask> tasks = load_tasks_jsonl(opts.tasks_file);
    std::optional<ModelScript> script;
    std::string script_path = profile.option("model.script");
    if (!script_path.empty()) script = ModelScript::load(script_path);

    SuiteResult result =
        run_suite(tasks, profile, script ? &*script : nullptr, opts.out, opts.jobs);

    long total_steps = 0;
    std::map<std::string, int> by_termination;
    for (const auto& item : result.items) {
        total_steps += item.steps;
        ++by_termination[termination_name(item.termination)];
        std::cout << item.task_id << ": " << termination_name(item.termination) << " ("
                  << item.steps << " steps) -> " << item.file << "\n";
    }
    std::cout << "\n" << result.items.size() << " trajectories, " << total_steps
              << " total steps; terminations:";
    for (const auto& [name, count] : by_termination) std::cout << " " << name << "=" << count;
    std::cout << "\n";
    return result.any_env_failure ? 1 : 0;
}

Verdict judge_for(const RunProfile& profile, ModelBackend* judge_backend, const BenchTask& task,
                  const std::string& predicted) {
    std::string mode = profile.option("judge.mode", "exact");
    if (mode == "exact") return exact_match_verdict(task.answer, predicted);
    if (!judge_backend) throw std::runtime_error("judge backend not configured");
    JudgeConfig cfg;
    cfg.model_id = profile.option("judge.model_id", "judge");
    return judge_answer(task.question, task.answer, predicted, *judge_backend, cfg);
}

std::unique_ptr<ModelBackend> build_judge_backend(const RunProfile& profile) {
    std::string mode = profile.option("judge.mode", "exact");
    if (mode == "scripted") {
        std::string path = profile.option("judge.script");
        if (path.empty()) throw std::runtime_error("judge.mode=scripted needs judge.script");
        ModelScript script = ModelScript::load(path);
        auto backend = std::make_unique<ScriptedBackend>();
        for (const auto& [fp, text] : script.by_fingerprint) backend->add_response(fp, text);
        return backend;
    }
    if (mode == "live") {
        HttpBackendConfig cfg;
        const char* base = std::getenv("MODEL_BASE_URL");
        cfg.base_url = base ? base : profile.option("model.base_url");
        if (cfg.base_url.empty()) throw std::runtime_error("judge.mode=live needs MODEL_BASE_URL");
        const char* key = std::getenv("MODEL_API_KEY");
        cfg.api_key = key ? key : "";
        return std::make_unique<HttpChatBackend>(cfg);
    }
    return nullptr;  // exact
}

int cmd_eval(const CommonOpts& opts, const std::string& traj_dir, bool sweep) {
    RunProfile profile = resolve_profile(opts);
    std::vector<BenchTask> answers = load_tasks_jsonl(opts.tasks_file);
    std::map<std::string, BenchTask> by_id;
    for (const BenchTask& t : answers) by_id[t.id] = t;

    std::unique_ptr<ModelBackend> judge_backend = build_judge_backend(profile);

    // label -> items; default one row, sweep groups by recorded top_k
    std::map<std::string, std::vector<EvalItem>> groups;
    std::map<std::string, long> group_order;
    for (const std::string& file : list_trajectory_files(traj_dir)) {
        Trajectory traj = read_trajectory_file(file);
        auto it = by_id.find(traj.task_id);
        if (it == by_id.end()) {
            std::cerr << "error: MissingAnswer: no labeled answer for task id \"" << traj.task_id
                      << "\" (" << file << ")\n";
            return 2;
        }
        bool correct = false;
        if (traj.termination == Termination::Answered && traj.final_answer) {
            correct = judge_for(profile, judge_backend.get(), it->second, *traj.final_answer)
                          .correct();
        }
        std::string label = "all";
        long order = 0;
        if (sweep) {
            long k = traj.config.contains("top_k") ? traj.config["top_k"].get<long>() : 0;
            label = "top_k=" + std::to_string(k);
            order = k;
        }
        groups[label].push_back(make_eval_item(traj, correct));
        group_order[label] = order;
    }

    std::vector<EvalRow> rows;
    std::vector<std::pair<long, std::string>> ordered;
    for (const auto& [label, _] : groups) ordered.push_back({group_order[label], label});
    std::sort(ordered.begin(), ordered.end());
    for (const auto& [_, label] : ordered) {
        rows.push_back({label, efficiency_metrics(groups[label])});
    }

    std::string table = render_report_table(rows);
    std::string csv = render_report_csv(rows);
    std::cout << table;
    fs::create_directories(opts.out);
    write_file((fs::path(opts.out) / "report.txt").string(), table);
    write_file((fs::path(opts.out) / "report.csv").string(), csv);
    std::cout << "\nwrote " << (fs::path(opts.out) / "report.txt").string() << " and report.csv\n";
    return 0;
}

int cmd_curate(const CommonOpts& opts, const std::string& traj_dir, bool rl, bool semantic,
               double semantic_floor, const std::string& verdicts_file, long max_tokens,
               double min_calls) {
    CurationRules rules;
    rules.max_tokens = max_tokens;
    rules.min_avg_calls_per_step = min_calls;

    std::unique_ptr<ModelBackend> judge_backend;
    if (semantic) {
        RunProfile profile = resolve_profile(opts);
        judge_backend = build_judge_backend(profile);
        if (!judge_backend) {
            throw std::runtime_error("--semantic needs judge.mode scripted or live");
        }
    }

    std::map<std::string, bool> verdicts;
    if (!verdicts_file.empty()) {
        for (const std::string& line : split_lines(read_file(verdicts_file))) {
            if (trim(line).empty()) continue;
            auto j = nlohmann::json::parse(line);
            verdicts[j.at("id").get<std::string>()] = j.value("correct", false);
        }
    }

    std::vector<Trajectory> trajs;
    std::vector<std::string> files = list_trajectory_files(traj_dir);
    for (const std::string& file : files) trajs.push_back(read_trajectory_file(file));

    std::map<std::string, int> by_reason;
    std::ostringstream manifest;
    std::vector<bool> accepted(trajs.size(), false);
    for (size_t i = 0; i < trajs.size(); ++i) {
        CurationOutcome outcome = rl ? rl_filter(trajs[i]) : hard_reject(trajs[i], rules);
        if (!rl && semantic && outcome.decision == CurationDecision::Accept) {
            // Two-stage order: the semantic judge only sees survivors of the
            // rule-based stage.
            SemanticFilterConfig sem_cfg;
            sem_cfg.floor = semantic_floor;
            outcome = semantic_filter(trajs[i], *judge_backend, sem_cfg);
            if (outcome.decision == CurationDecision::Reject) {
                outcome.reason = "semantic:" + outcome.reason;
            }
        }
        accepted[i] = outcome.decision == CurationDecision::Accept;
        ++by_reason[outcome.decision == CurationDecision::Accept
                        ? "accept"
                        : std::string(curation_decision_name(outcome.decision)) + ":" + outcome.reason];
        nlohmann::ordered_json j;
        j["task_id"] = trajs[i].task_id;
        j["file"] = files[i];
        j["decision"] = curation_decision_name(outcome.decision);
        j["reason"] = outcome.reason;
        j["evidence"] = outcome.evidence;
        manifest << j.dump() << "\n";
    }

    // Shortest-correct selection per task among accepted trajectories.
    if (!rl && !verdicts.empty()) {
        std::map<std::string, std::vector<size_t>> per_task;
        for (size_t i = 0; i < trajs.size(); ++i) {
            if (accepted[i]) per_task[trajs[i].task_id].push_back(i);
        }
        for (const auto& [task_id, indices] : per_task) {
            std::vector<Trajectory> candidates;
            std::vector<bool> correct;
            for (size_t i : indices) {
                candidates.push_back(trajs[i]);
                auto v = verdicts.find(task_id);
                correct.push_back(v != verdicts.end() && v->second);
            }
            auto best = select_shortest_correct(candidates, correct);
            if (best) {
                nlohmann::ordered_json j;
                j["task_id"] = task_id;
                j["selected"] = files[indices[*best]];
                manifest << j.dump() << "\n";
            }
        }
    }

    fs::create_directories(fs::path(opts.out).parent_path().empty()
                               ? "."
                               : fs::path(opts.out).parent_path().string());
    write_file(opts.out, manifest.str());
    std::cout << trajs.size() << " trajectories -> " << opts.out << "\n";
    for (const auto& [reason, count] : by_reason) std::cout << "  " << reason << ": " << count << "\n";
    return 0;
}

int cmd_replay(const std::string& file) {
    Trajectory traj = read_trajectory_file(file);
    std::cout << "task " << traj.task_id << " (" << task_mode_name(traj.mode) << ")\n";
    std::cout << traj.task << "\n";
    for (const StepRecord& step : traj.steps) {
        std::cout << "\n--- step " << step.index << " [" << step_kind_name(step.kind)
                  << "] plan r" << step.plan_revision << ", " << step.token_count_after
                  << " tokens\n";
        if (step.kind == StepKind::Compression) {
            std::cout << "*** context compressed: everything before this refinement was dropped ***\n";
        }
        std::cout << step.turn_text << "\n";
        for (const ToolCallRequest& call : step.tool_calls) {
            std::cout << "  -> [" << call.index << "] " << call.name << "(";
            bool first = true;
            for (const auto& [k, v] : call.arguments) {
                if (!first) std::cout << ", ";
                first = false;
                std::cout << k << "=\"" << v << "\"";
            }
            std::cout << ")\n";
        }
        for (const ToolObservation& obs : step.observations) {
            std::cout << "  <- [" << obs.request_index << "] " << obs.tool << ": ";
            if (const auto* err = obs.error()) {
                std::cout << "ERROR(" << tool_error_kind_name(err->kind) << ") " << err->detail;
            } else if (const auto* results = std::get_if<std::vector<SearchResult>>(&obs.outcome)) {
                std::cout << results->size() << " results";
            } else if (std::get_if<PageDigest>(&obs.outcome)) {
                std::cout << "digest";
            }
            std::cout << "\n";
        }
    }
    std::cout << "\n=== " << termination_name(traj.termination);
    if (!traj.termination_detail.empty()) std::cout << " (" << traj.termination_detail << ")";
    std::cout << " after " << traj.metrics.steps << " steps, " << traj.metrics.total_tool_calls
              << " tool calls (avg " << traj.metrics.avg_tool_calls_per_step << "/step)\n";
    if (traj.final_answer) std::cout << "answer: " << *traj.final_answer << "\n";
    if (traj.reward) std::cout << "reward: " << *traj.reward << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::vector<int>& ks) {
    RunProfile base = resolve_profile(opts);
    std::vector<BenchTask> tasks = load_tasks_jsonl(opts.tasks_file);
    std::optional<ModelScript> script;
    std::string script_path = base.option("model.script");
    if (!script_path.empty()) script = ModelScript::load(script_path);

    std::unique_ptr<ModelBackend> judge_backend = build_judge_backend(base);
    std::vector<EvalRow> rows;
    for (int k : ks) {
        RunProfile profile = base;
        profile.engine.top_k = k;
        std::string out_dir = (fs::path(opts.out) / ("topk-" + std::to_string(k))).string();
        SuiteResult result =
            run_suite(tasks, profile, script ? &*script : nullptr, out_dir, opts.jobs);
        std::vector<EvalItem> items;
        std::map<std::string, BenchTask> by_id;
        for (const BenchTask& t : tasks) by_id[t.id] = t;
        for (const auto& item : result.items) {
            Trajectory traj = read_trajectory_file(item.file);
            bool correct = false;
            if (traj.termination == Termination::Answered && traj.final_answer) {
                correct = judge_for(profile, judge_backend.get(), by_id.at(traj.task_id),
                                    *traj.final_answer)
                              .correct();
            }
            items.push_back(make_eval_item(traj, correct));
        }
        rows.push_back({"top_k=" + std::to_string(k), efficiency_metrics(items)});
    }
    std::string table = render_report_table(rows);
    std::cout << table;
    fs::create_directories(opts.out);
    write_file((fs::path(opts.out) / "sweep.txt").string(), table);
    write_file((fs::path(opts.out) / "sweep.csv").string(), render_report_csv(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parallel agentic search runtime"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string traj_dir;
    std::string traj_file;
    bool sweep_flag = false;
    bool rl_flag = false;
    bool semantic_flag = false;
    double semantic_floor = 6.0;
    std::string verdicts_file;
    long max_tokens = 65536;
    double min_calls = 3.0;
    std::vector<int> sweep_ks = {4, 8, 12, 16, 20};

    auto add_common = [&](CLI::App* cmd, bool wants_tasks) {
        cmd->add_option("--profile", opts.profile, "run profile: mock, smtl-100, smtl-300");
        cmd->add_option("--config", opts.config_file, "config file (key = value, dotted keys)");
        if (wants_tasks) {
            cmd->add_option("--tasks", opts.tasks_file, "tasks file (JSON Lines)")->required();
        }
        cmd->add_option("--out", opts.out, "output directory or file");
        cmd->add_option("--script", opts.script_file, "scripted-model fixture file");
        cmd->add_option("--corpus", opts.corpus_dir, "mock corpus directory");
        cmd->add_option("--jobs", opts.jobs, "concurrent episodes")->check(CLI::PositiveNumber);
        cmd->add_option("--top-k", [&](const std::vector<std::string>& v) {
            opts.top_k = std::stoi(v[0]);
            return true;
        }, "web search top-k");
        cmd->add_option("--max-steps", [&](const std::vector<std::string>& v) {
            opts.max_steps = std::stoi(v[0]);
            return true;
        }, "maximum interaction steps");
        cmd->add_option("--strict-format", [&](const std::vector<std::string>& v) {
            opts.strict_format = v[0] == "true" || v[0] == "1";
            return true;
        }, "terminate on format violations (true/false)");
        cmd->add_option("--judge-mode", opts.judge_mode, "judge: exact, scripted, live");
        cmd->add_option("--judge-script", opts.judge_script, "scripted judge fixture file");
        cmd->add_option("--judge-model", opts.judge_model, "judge model id");
    };

    CLI::App* run = app.add_subcommand("run", "run episodes for a tasks file");
    add_common(run, true);

    CLI::App* eval = app.add_subcommand("eval", "score trajectories and emit the metrics table");
    add_common(eval, true);
    eval->add_option("--trajectories", traj_dir, "trajectory directory")->required();
    eval->add_flag("--sweep", sweep_flag, "group rows by the recorded top_k");

    CLI::App* curate = app.add_subcommand("curate", "filter trajectories into a curated manifest");
    curate->add_option("--trajectories", traj_dir, "trajectory directory")->required();
    curate->add_option("--out", opts.out, "manifest output file")->required();
    curate->add_flag("--rl", rl_flag, "apply the RL negative-trajectory filters instead of SFT rules");
    curate->add_flag("--semantic", semantic_flag, "judge survivors of the rule stage on the four dimensions");
    curate->add_option("--semantic-floor", semantic_floor, "minimum mean score per dimension");
    curate->add_option("--judge-mode", opts.judge_mode, "judge: scripted, live");
    curate->add_option("--judge-script", opts.judge_script, "scripted judge fixture file");
    curate->add_option("--verdicts", verdicts_file, "JSONL of {id, correct} for shortest-correct");
    curate->add_option("--max-tokens", max_tokens, "trajectory token cap");
    curate->add_option("--min-calls-per-step", min_calls, "average tool-calls-per-step floor");

    CLI::App* replay = app.add_subcommand("replay", "render a trajectory as a readable transcript");
    replay->add_option("trajectory", traj_file, "trajectory .jsonl file")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run + eval across web search top-k values");
    add_common(sweep, true);
    sweep->add_option("--topk", sweep_ks, "top-k values to sweep");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(opts);
        if (eval->parsed()) return cmd_eval(opts, traj_dir, sweep_flag);
        if (curate->parsed()) {
            return cmd_curate(opts, traj_dir, rl_flag, semantic_flag, semantic_floor,
                              verdicts_file, max_tokens, min_calls);
        }
        if (replay->parsed()) return cmd_replay(traj_file);
        if (sweep->parsed()) return cmd_sweep(opts, sweep_ks);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
