#include "smtl/engine.hpp"

#include <chrono>

#include "smtl/prompts.hpp"
#include "smtl/util.hpp"

namespace smtl {

using nlohmann::ordered_json;

void EngineConfig::validate() const {
    auto check = [](long v, const char* name) {
        if (v < 1) {
            throw std::invalid_argument(std::string("engine config: ") + name + " must be >= 1");
        }
    };
    check(max_steps, "max_steps");
    check(refine_interval, "refine_interval");
    check(context_budget, "context_budget");
    check(per_step_call_max, "per_step_call_max");
    check(dispatch_width, "dispatch_width");
    check(top_k, "top_k");
    check(max_output_tokens, "max_output_tokens");
}

ordered_json EngineConfig::to_json() const {
    ordered_json j;
    j["max_steps"] = max_steps;
    j["refine_interval"] = refine_interval;
    j["context_budget"] = context_budget;
    j["tokenizer_id"] = tokenizer_id;
    j["per_step_call_max"] = per_step_call_max;
    j["dispatch_width"] = dispatch_width;
    j["strict_format"] = strict_format;
    j["top_k"] = top_k;
    j["model_id"] = model_id;
    j["temperature"] = temperature;
    j["max_output_tokens"] = max_output_tokens;
    return j;
}

void aggregate_state(ReasoningState& state, const std::string& assistant_text,
                     const std::vector<ToolCallRequest>& actions,
                     const std::vector<ToolObservation>& observations,
                     const TokenCounter& counter) {
    (void)actions;  // the actions are embedded in the assistant text; the 1:1
                    // index correspondence is what the rendering relies on
    state.messages.push_back({"assistant", assistant_text});
    if (!observations.empty()) {
        state.messages.push_back({"tool", render_tool_responses(observations)});
    }
    state.token_count = token_len(state.messages, counter);
    ++state.step_index;
}

Clock steady_clock_ms() {
    return [] {
        auto now = std::chrono::steady_clock::now().time_since_epoch();
        return std::chrono::duration<double, std::milli>(now).count();
    };
}

Clock zero_clock() {
    return [] { return 0.0; };
}

Engine::Engine(EngineConfig config, EngineBackends backends, Clock clock)
    : config_(std::move(config)), backends_(std::move(backends)), clock_(std::move(clock)) {
    config_.validate();
    if (!backends_.agent_model || !backends_.tools) {
        throw std::invalid_argument("engine needs both a model backend and a tool router");
    }
    counter_ = make_token_counter(config_.tokenizer_id);
}

ReasoningState Engine::make_initial_state(const Task& task) const {
    ReasoningState state;
    state.mode = task.mode;
    state.messages.push_back({"system", prompts::system_prompt(task.mode, config_.per_step_call_max)});
    state.messages.push_back({"user", task.text});
    state.token_count = token_len(state.messages, counter_);
    return state;
}

void Engine::record_step(const ReasoningState& state, StepKind kind, const std::string& turn_text,
                         std::vector<ToolCallRequest> calls,
                         std::vector<ToolObservation> observations, double wall_ms) {
    StepRecord record;
    record.index = state.step_index;
    record.kind = kind;
    record.turn_text = turn_text;
    record.tool_calls = std::move(calls);
    record.observations = std::move(observations);
    record.plan_revision = state.plan.revision;
    record.token_count_after = state.token_count;
    record.wall_time_ms = wall_ms;
    steps_.push_back(std::move(record));

    bool snapshot = state.plan_built &&
                    (kind == StepKind::Plan || kind == StepKind::Refine || kind == StepKind::Compression);
    plan_snapshots_.push_back(snapshot ? state.plan : TaskPlan{});
}

StepOutcome Engine::handle_violation(ReasoningState& state, const std::string& turn_text,
                                     const std::string& reason, double start_ms) {
    aggregate_state(state, turn_text, {}, {}, counter_);
    if (config_.strict_format) {
        record_step(state, StepKind::Violation, turn_text, {}, {}, clock_() - start_ms);
        return {true, Termination::FormatViolation, std::nullopt, reason};
    }
    // Lenient mode: the violation is reported back to the model as an error
    // observation and the episode continues.
    state.messages.push_back({"tool", "<tool_response>\n[0] protocol\nERROR(FormatViolation): " +
                                          reason + "\n</tool_response>"});
    state.token_count = token_len(state.messages, counter_);
    record_step(state, StepKind::Violation, turn_text, {}, {}, clock_() - start_ms);
    return check_loop_conditions(state);
}

namespace {

StepKind step_kind_for(const AgentTurn& turn, bool built_plan_this_turn) {
    if (built_plan_this_turn) return StepKind::Plan;
    switch (turn.kind) {
        case TurnKind::Plan:
        case TurnKind::SubtaskList: return StepKind::Plan;
        case TurnKind::PlanRefine: return StepKind::Refine;
        case TurnKind::ToolCalls: return StepKind::ToolCalls;
        case TurnKind::Answer: return StepKind::Answer;
        case TurnKind::SubtaskOpen:
        case TurnKind::Analysis:
        case TurnKind::SubtaskAnswer: return StepKind::Analysis;
    }
    return StepKind::Analysis;
}

/// Research-mode progress markers: <subtask> activates the next live goal,
/// <subtask_answer> completes the active one.
void mark_subtask_open(TaskPlan& plan) {
    for (Goal& g : plan.goals) {
        if (g.status == GoalStatus::Completed || g.status == GoalStatus::Blocked) continue;
        for (Path& p : g.paths) {
            if (p.status == PathStatus::Failed) continue;
            if (p.status == PathStatus::NotStarted) p.status = PathStatus::Active;
            refresh_statuses(plan);
            return;
        }
    }
}

void mark_subtask_answered(TaskPlan& plan) {
    for (Goal& g : plan.goals) {
        if (g.status == GoalStatus::Completed || g.status == GoalStatus::Blocked) continue;
        for (Path& p : g.paths) {
            if (p.status == PathStatus::Failed) continue;
            p.status = PathStatus::Succeeded;
            refresh_statuses(plan);
            return;
        }
    }
}

}  // namespace

StepOutcome Engine::process_turn(ReasoningState& state, const std::string& turn_text,
                                 double start_ms) {
    AgentTurn turn;
    try {
        turn = parse_turn(turn_text, state.mode);
    } catch (const ProtocolError& e) {
        return handle_violation(state, turn_text, e.what(), start_ms);
    }

    std::vector<ToolCallRequest> calls = turn.tool_calls();
    if (static_cast<int>(calls.size()) > config_.per_step_call_max) {
        return handle_violation(state, turn_text,
                                std::to_string(calls.size()) + " tool calls exceed the per-step max of " +
                                    std::to_string(config_.per_step_call_max),
                                start_ms);
    }

    // Refinement/plan blocks apply before any calls dispatch.
    bool built_plan = false;
    try {
        if (!state.plan_built &&
            (turn.block_body(Tag::Plan) || turn.block_body(Tag::SubtaskList))) {
            state.plan = build_plan(turn);
            state.plan_built = true;
            built_plan = true;
        } else if (state.plan_built) {
            if (auto refine = turn.block_body(Tag::PlanRefine)) {
                state.plan = apply_refinement(state.plan, parse_refinement_body(*refine));
            }
        }
    } catch (const PlanError& e) {
        return handle_violation(state, turn_text, e.what(), start_ms);
    }

    if (state.plan_built && state.mode == TaskMode::Research) {
        if (turn.block_body(Tag::Subtask)) mark_subtask_open(state.plan);
        if (turn.block_body(Tag::SubtaskAnswer)) mark_subtask_answered(state.plan);
    }

    if (turn.kind == TurnKind::Answer) {
        aggregate_state(state, turn_text, {}, {}, counter_);
        record_step(state, StepKind::Answer, turn_text, {}, {}, clock_() - start_ms);
        return {true, Termination::Answered, turn.body(), ""};
    }

    std::vector<ToolObservation> observations;
    if (!calls.empty()) {
        observations = dispatch_parallel(calls, config_.dispatch_width, *backends_.tools);
    }
    aggregate_state(state, turn_text, calls, observations, counter_);
    record_step(state, step_kind_for(turn, built_plan), turn_text, std::move(calls),
                std::move(observations), clock_() - start_ms);
    return check_loop_conditions(state);
}

StepOutcome Engine::check_loop_conditions(const ReasoningState& state) {
    // The loop runs while the pending set is nonempty; the model gets one
    // answer turn after the set empties before EmptySet is declared.
    if (state.plan_built && ready_subtasks(state.plan).empty() && answer_turn_granted_) {
        return {true, Termination::EmptySet, std::nullopt, "no executable subtasks remain"};
    }
    if (state.step_index >= config_.max_steps) {
        return {true, Termination::StepBudget, std::nullopt,
                "step budget of " + std::to_string(config_.max_steps) + " reached"};
    }
    return {};
}

StepOutcome Engine::step(ReasoningState& state) {
    const double start_ms = clock_();
    const int t = state.step_index + 1;

    // Overflow check first: the compression's forced refinement is itself an
    // assistant turn and consumes this step.
    ContextBudget budget{config_.context_budget, config_.tokenizer_id};
    CompressionOutcome comp =
        check_and_compress(state, budget, *backends_.agent_model, config_.model_id,
                           config_.temperature, config_.max_output_tokens, counter_);
    if (comp.compressed) {
        ++compressions_;
        ++state.step_index;
        record_step(state, StepKind::Compression, comp.refine_turn_text, {}, {},
                    clock_() - start_ms);
        return check_loop_conditions(state);
    }

    bool set_empty = state.plan_built && ready_subtasks(state.plan).empty();
    if (!set_empty) {
        answer_turn_granted_ = false;
    }
    if (set_empty && !answer_turn_granted_) {
        answer_turn_granted_ = true;
        state.messages.push_back({"user", prompts::answer_now_instruction(state.mode)});
        state.token_count = token_len(state.messages, counter_);
    } else if (t % config_.refine_interval == 0) {
        // Periodic refinement request (t mod delta = 0); the forced overflow
        // refinement above does not reset this phase.
        state.messages.push_back({"user", prompts::refine_instruction(state.mode)});
        state.token_count = token_len(state.messages, counter_);
    }

    ChatRequest req;
    req.messages = state.messages;
    req.model_id = config_.model_id;
    req.temperature = config_.temperature;
    req.max_tokens = config_.max_output_tokens;
    ChatResponse resp = backends_.agent_model->complete(req);

    return process_turn(state, resp.text, start_ms);
}

Trajectory Engine::run_episode(const Task& task) {
    steps_.clear();
    plan_snapshots_.clear();
    compressions_ = 0;
    answer_turn_granted_ = false;

    Trajectory traj;
    traj.task_id = task.id;
    traj.task = task.text;
    traj.mode = task.mode;
    traj.config = config_.to_json();

    ReasoningState state = make_initial_state(task);
    StepOutcome outcome;
    try {
        while (!outcome.terminated) {
            outcome = step(state);
        }
    } catch (const EnvFailure& e) {
        outcome = {true, Termination::EnvFailure, std::nullopt,
                   std::string(e.kind_name()) + ": " + e.what()};
    } catch (const CompressionFailure& e) {
        outcome = {true, Termination::EnvFailure, std::nullopt,
                   std::string("compression failure: ") + e.what()};
    }

    traj.steps = steps_;
    traj.termination = outcome.reason;
    traj.termination_detail = outcome.detail;
    traj.final_answer = outcome.answer;
    if (outcome.reason == Termination::FormatViolation) {
        traj.reward = 0.0;  // format violations end generation with reward 0
    }

    TrajectoryMetrics& m = traj.metrics;
    m.steps = static_cast<int>(steps_.size());
    for (const StepRecord& s : steps_) {
        m.total_tool_calls += static_cast<long>(s.tool_calls.size());
        m.total_tokens += counter_(s.turn_text);
        if (!s.observations.empty()) m.total_tokens += counter_(render_tool_responses(s.observations));
    }
    m.avg_tool_calls_per_step =
        m.steps == 0 ? 0.0 : static_cast<double>(m.total_tool_calls) / m.steps;
    m.compressions = compressions_;
    return traj;
}

}  // namespace smtl
