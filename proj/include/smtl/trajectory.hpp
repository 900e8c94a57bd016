#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smtl/plan.hpp"
#include "smtl/protocol.hpp"
#include "smtl/tools.hpp"

namespace smtl {

enum class Termination { Answered, StepBudget, EmptySet, FormatViolation, EnvFailure };

const char* termination_name(Termination t);
std::optional<Termination> termination_from_name(const std::string& name);

enum class StepKind { Plan, Refine, ToolCalls, Answer, Analysis, Compression, Violation };

const char* step_kind_name(StepKind k);

struct StepRecord {
    int index = 0;  // 1-based step number t
    StepKind kind = StepKind::Analysis;
    std::string turn_text;                     // raw assistant output
    std::vector<ToolCallRequest> tool_calls;   // empty unless kind == ToolCalls
    std::vector<ToolObservation> observations;
    int plan_revision = 0;                     // after this step
    long token_count_after = 0;
    double wall_time_ms = 0.0;
};

struct TrajectoryMetrics {
    int steps = 0;
    long total_tool_calls = 0;
    double avg_tool_calls_per_step = 0.0;
    long total_tokens = 0;  // cumulative appended tokens; unaffected by compression drops
    int compressions = 0;
};

/// The full episode record: input to evaluation and curation.
struct Trajectory {
    std::string task_id;
    std::string task;
    TaskMode mode = TaskMode::Search;
    nlohmann::ordered_json config;  // engine config snapshot for the header
    std::vector<StepRecord> steps;
    Termination termination = Termination::EnvFailure;
    std::string termination_detail;
    std::optional<std::string> final_answer;
    std::optional<double> reward;  // recorded for reward-0 format violations
    TrajectoryMetrics metrics;
};

nlohmann::ordered_json plan_to_json(const TaskPlan& plan);
nlohmann::ordered_json observation_to_json(const ToolObservation& obs);
ToolObservation observation_from_json(const nlohmann::json& j);

/// JSON Lines: one header object, one object per step, one footer object.
std::string trajectory_to_jsonl(const Trajectory& traj,
                                const std::vector<TaskPlan>& plan_snapshots = {});

/// Parses a trajectory file. Throws std::runtime_error naming the offending
/// line on structural corruption.
Trajectory trajectory_from_jsonl(const std::string& content);

void write_trajectory_file(const std::string& path, const Trajectory& traj,
                           const std::vector<TaskPlan>& plan_snapshots = {});
Trajectory read_trajectory_file(const std::string& path);

}  // namespace smtl
