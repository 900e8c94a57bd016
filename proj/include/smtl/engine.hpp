#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "smtl/context.hpp"
#include "smtl/model.hpp"
#include "smtl/state.hpp"
#include "smtl/tools.hpp"
#include "smtl/trajectory.hpp"

namespace smtl {

struct EngineConfig {
    int max_steps = 100;
    int refine_interval = 5;    // delta: a refinement turn is requested every delta steps
    long context_budget = 131072;
    std::string tokenizer_id = "approx-bytes-4";
    int per_step_call_max = 10;
    int dispatch_width = 10;    // concurrent tool calls in flight within a step
    bool strict_format = true;  // format violations terminate with reward 0
    int top_k = 5;
    std::string model_id = "agent";
    double temperature = 0.0;
    int max_output_tokens = 8192;

    void validate() const;  // throws std::invalid_argument when a count is < 1
    nlohmann::ordered_json to_json() const;
};

struct Task {
    std::string id;
    std::string text;
    TaskMode mode = TaskMode::Search;
};

struct EngineBackends {
    std::shared_ptr<ModelBackend> agent_model;
    std::shared_ptr<ToolRouter> tools;
};

struct StepOutcome {
    bool terminated = false;
    Termination reason = Termination::Answered;
    std::optional<std::string> answer;
    std::string detail;
};

/// F from the aggregation step: extends the transcript with the assistant
/// turn followed by the rendered tool responses in index order, updates the
/// token count and increments t. Tool errors arrive as error observations
/// and are aggregated like any other.
void aggregate_state(ReasoningState& state, const std::string& assistant_text,
                     const std::vector<ToolCallRequest>& actions,
                     const std::vector<ToolObservation>& observations,
                     const TokenCounter& counter);

/// Wall-clock source for step timing; injectable so offline runs are
/// byte-deterministic.
using Clock = std::function<double()>;
Clock steady_clock_ms();
Clock zero_clock();

/// The episode loop: drives model turns, dispatches parallel tool calls,
/// schedules refinement every refine_interval steps, compresses on context
/// overflow, terminates and records the trajectory.
class Engine {
public:
    Engine(EngineConfig config, EngineBackends backends, Clock clock = steady_clock_ms());

    /// One model turn. Exactly one model call unless the step is a
    /// compression step (whose forced refinement is also one call).
    StepOutcome step(ReasoningState& state);

    Trajectory run_episode(const Task& task);

    /// Step records and plan snapshots of the most recent episode, aligned.
    const std::vector<StepRecord>& last_steps() const { return steps_; }
    const std::vector<TaskPlan>& last_plan_snapshots() const { return plan_snapshots_; }

    ReasoningState make_initial_state(const Task& task) const;

private:
    StepOutcome process_turn(ReasoningState& state, const std::string& turn_text,
                             double start_ms);
    StepOutcome handle_violation(ReasoningState& state, const std::string& turn_text,
                                 const std::string& reason, double start_ms);
    StepOutcome check_loop_conditions(const ReasoningState& state);
    void record_step(const ReasoningState& state, StepKind kind, const std::string& turn_text,
                     std::vector<ToolCallRequest> calls, std::vector<ToolObservation> observations,
                     double wall_ms);

    EngineConfig config_;
    EngineBackends backends_;
    Clock clock_;
    TokenCounter counter_;
    std::vector<StepRecord> steps_;
    std::vector<TaskPlan> plan_snapshots_;
    int compressions_ = 0;
    bool answer_turn_granted_ = false;
};

}  // namespace smtl
