#include "smtl/trajectory.hpp"

#include <sstream>

#include "smtl/util.hpp"

namespace smtl {

using nlohmann::json;
using nlohmann::ordered_json;

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::Answered: return "Answered";
        case Termination::StepBudget: return "StepBudget";
        case Termination::EmptySet: return "EmptySet";
        case Termination::FormatViolation: return "FormatViolation";
        case Termination::EnvFailure: return "EnvFailure";
    }
    return "EnvFailure";
}

std::optional<Termination> termination_from_name(const std::string& name) {
    if (name == "Answered") return Termination::Answered;
    if (name == "StepBudget") return Termination::StepBudget;
    if (name == "EmptySet") return Termination::EmptySet;
    if (name == "FormatViolation") return Termination::FormatViolation;
    if (name == "EnvFailure") return Termination::EnvFailure;
    return std::nullopt;
}

const char* step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::Plan: return "plan";
        case StepKind::Refine: return "refine";
        case StepKind::ToolCalls: return "tool_calls";
        case StepKind::Answer: return "answer";
        case StepKind::Analysis: return "analysis";
        case StepKind::Compression: return "compression";
        case StepKind::Violation: return "violation";
    }
    return "analysis";
}

namespace {

std::optional<StepKind> step_kind_from_name(const std::string& name) {
    if (name == "plan") return StepKind::Plan;
    if (name == "refine") return StepKind::Refine;
    if (name == "tool_calls") return StepKind::ToolCalls;
    if (name == "answer") return StepKind::Answer;
    if (name == "analysis") return StepKind::Analysis;
    if (name == "compression") return StepKind::Compression;
    if (name == "violation") return StepKind::Violation;
    return std::nullopt;
}

ordered_json call_to_json(const ToolCallRequest& call) {
    ordered_json j;
    j["index"] = call.index;
    j["name"] = call.name;
    ordered_json args = ordered_json::object();
    for (const auto& [k, v] : call.arguments) args[k] = v;
    j["arguments"] = std::move(args);
    return j;
}

ToolCallRequest call_from_json(const json& j) {
    ToolCallRequest call;
    call.index = j.value("index", 0);
    call.name = j.value("name", "");
    if (j.contains("arguments")) {
        for (const auto& [k, v] : j["arguments"].items()) {
            call.arguments[k] = v.get<std::string>();
        }
    }
    return call;
}

}  // namespace

ordered_json plan_to_json(const TaskPlan& plan) {
    ordered_json j;
    j["revision"] = plan.revision;
    ordered_json goals = ordered_json::array();
    for (const Goal& g : plan.goals) {
        ordered_json gj;
        gj["id"] = g.id;
        gj["description"] = g.description;
        gj["status"] = goal_status_name(g.status);
        ordered_json paths = ordered_json::array();
        for (const Path& p : g.paths) {
            ordered_json pj;
            pj["id"] = p.id;
            pj["objective"] = p.objective;
            pj["success_criterion"] = p.success_criterion;
            pj["status"] = path_status_name(p.status);
            paths.push_back(std::move(pj));
        }
        gj["paths"] = std::move(paths);
        goals.push_back(std::move(gj));
    }
    j["goals"] = std::move(goals);
    return j;
}

ordered_json observation_to_json(const ToolObservation& obs) {
    ordered_json j;
    j["index"] = obs.request_index;
    j["tool"] = obs.tool;
    if (const auto* results = std::get_if<std::vector<SearchResult>>(&obs.outcome)) {
        ordered_json arr = ordered_json::array();
        for (const SearchResult& r : *results) {
            arr.push_back({{"title", r.title}, {"snippet", r.snippet}, {"url", r.url}});
        }
        j["results"] = std::move(arr);
    } else if (const auto* digest = std::get_if<PageDigest>(&obs.outcome)) {
        j["digest"] = {{"rationale", digest->rationale},
                       {"evidence", digest->evidence},
                       {"summary", digest->summary},
                       {"source_url", digest->source_url}};
    } else if (const auto* err = std::get_if<ToolError>(&obs.outcome)) {
        j["error"] = {{"kind", tool_error_kind_name(err->kind)}, {"detail", err->detail}};
    }
    return j;
}

ToolObservation observation_from_json(const json& j) {
    ToolObservation obs;
    obs.request_index = j.value("index", 0);
    obs.tool = j.value("tool", "");
    if (j.contains("results")) {
        std::vector<SearchResult> results;
        for (const json& r : j["results"]) {
            results.push_back({r.value("title", ""), r.value("snippet", ""), r.value("url", "")});
        }
        obs.outcome = std::move(results);
    } else if (j.contains("digest")) {
        const json& d = j["digest"];
        obs.outcome = PageDigest{d.value("rationale", ""), d.value("evidence", ""),
                                 d.value("summary", ""), d.value("source_url", "")};
    } else if (j.contains("error")) {
        const json& e = j["error"];
        ToolError err;
        err.kind = tool_error_kind_from_name(e.value("kind", "ServerError"))
                       .value_or(ToolErrorKind::ServerError);
        err.detail = e.value("detail", "");
        obs.outcome = err;
    }
    return obs;
}

std::string trajectory_to_jsonl(const Trajectory& traj,
                                const std::vector<TaskPlan>& plan_snapshots) {
    std::ostringstream out;

    ordered_json header;
    header["type"] = "header";
    header["schema_version"] = 1;
    header["task_id"] = traj.task_id;
    header["task"] = traj.task;
    header["mode"] = task_mode_name(traj.mode);
    header["config"] = traj.config;
    out << header.dump() << "\n";

    for (size_t i = 0; i < traj.steps.size(); ++i) {
        const StepRecord& step = traj.steps[i];
        ordered_json sj;
        sj["type"] = "step";
        sj["index"] = step.index;
        sj["kind"] = step_kind_name(step.kind);
        sj["turn"] = step.turn_text;
        ordered_json calls = ordered_json::array();
        for (const ToolCallRequest& c : step.tool_calls) calls.push_back(call_to_json(c));
        sj["tool_calls"] = std::move(calls);
        ordered_json observations = ordered_json::array();
        for (const ToolObservation& o : step.observations) observations.push_back(observation_to_json(o));
        sj["observations"] = std::move(observations);
        sj["plan_revision"] = step.plan_revision;
        sj["token_count_after"] = step.token_count_after;
        sj["wall_time_ms"] = step.wall_time_ms;
        if (i < plan_snapshots.size() && !plan_snapshots[i].goals.empty()) {
            sj["plan"] = plan_to_json(plan_snapshots[i]);
        }
        out << sj.dump() << "\n";
    }

    ordered_json footer;
    footer["type"] = "footer";
    footer["termination"] = termination_name(traj.termination);
    footer["termination_detail"] = traj.termination_detail;
    if (traj.final_answer) footer["final_answer"] = *traj.final_answer;
    if (traj.reward) footer["reward"] = *traj.reward;
    footer["metrics"] = {{"steps", traj.metrics.steps},
                         {"total_tool_calls", traj.metrics.total_tool_calls},
                         {"avg_tool_calls_per_step", traj.metrics.avg_tool_calls_per_step},
                         {"total_tokens", traj.metrics.total_tokens},
                         {"compressions", traj.metrics.compressions}};
    out << footer.dump() << "\n";
    return out.str();
}

Trajectory trajectory_from_jsonl(const std::string& content) {
    Trajectory traj;
    bool saw_header = false;
    bool saw_footer = false;
    std::vector<std::string> lines = split_lines(content);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("line " + std::to_string(i + 1) +
                                     ": invalid JSON: " + e.what());
        }
        std::string type = j.value("type", "");
        if (type == "header") {
            saw_header = true;
            traj.task_id = j.value("task_id", "");
            traj.task = j.value("task", "");
            traj.mode = task_mode_from_name(j.value("mode", "search")).value_or(TaskMode::Search);
            if (j.contains("config")) traj.config = j["config"];
        } else if (type == "step") {
            StepRecord step;
            step.index = j.value("index", 0);
            auto kind = step_kind_from_name(j.value("kind", ""));
            if (!kind) {
                throw std::runtime_error("line " + std::to_string(i + 1) + ": unknown step kind \"" +
                                         j.value("kind", "") + "\"");
            }
            step.kind = *kind;
            step.turn_text = j.value("turn", "");
            if (j.contains("tool_calls")) {
                for (const json& c : j["tool_calls"]) step.tool_calls.push_back(call_from_json(c));
            }
            if (j.contains("observations")) {
                for (const json& o : j["observations"]) step.observations.push_back(observation_from_json(o));
            }
            step.plan_revision = j.value("plan_revision", 0);
            step.token_count_after = j.value("token_count_after", 0L);
            step.wall_time_ms = j.value("wall_time_ms", 0.0);
            traj.steps.push_back(std::move(step));
        } else if (type == "footer") {
            saw_footer = true;
            auto term = termination_from_name(j.value("termination", ""));
            if (!term) {
                throw std::runtime_error("line " + std::to_string(i + 1) +
                                         ": unknown termination \"" + j.value("termination", "") + "\"");
            }
            traj.termination = *term;
            traj.termination_detail = j.value("termination_detail", "");
            if (j.contains("final_answer")) traj.final_answer = j["final_answer"].get<std::string>();
            if (j.contains("reward")) traj.reward = j["reward"].get<double>();
            if (j.contains("metrics")) {
                const json& m = j["metrics"];
                traj.metrics.steps = m.value("steps", 0);
                traj.metrics.total_tool_calls = m.value("total_tool_calls", 0L);
                traj.metrics.avg_tool_calls_per_step = m.value("avg_tool_calls_per_step", 0.0);
                traj.metrics.total_tokens = m.value("total_tokens", 0L);
                traj.metrics.compressions = m.value("compressions", 0);
            }
        } else {
            throw std::runtime_error("line " + std::to_string(i + 1) + ": unknown record type \"" +
                                     type + "\"");
        }
    }
    if (!saw_header) throw std::runtime_error("trajectory file has no header record");
    if (!saw_footer) throw std::runtime_error("trajectory file has no footer record");
    return traj;
}

void write_trajectory_file(const std::string& path, const Trajectory& traj,
                           const std::vector<TaskPlan>& plan_snapshots) {
    write_file(path, trajectory_to_jsonl(traj, plan_snapshots));
}

Trajectory read_trajectory_file(const std::string& path) {
    try {
        return trajectory_from_jsonl(read_file(path));
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace smtl
