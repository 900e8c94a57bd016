#include "smtl/curation.hpp"

#include <cstdio>

namespace smtl {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

const char* curation_decision_name(CurationDecision d) {
    switch (d) {
        case CurationDecision::Accept: return "Accept";
        case CurationDecision::Reject: return "Reject";
        case CurationDecision::Drop: return "Drop";
    }
    return "Accept";
}

CurationOutcome hard_reject(const Trajectory& traj, const CurationRules& rules) {
    if (rules.structural_checks.count("format") &&
        traj.termination == Termination::FormatViolation) {
        return {CurationDecision::Reject, "structural",
                "termination=FormatViolation: " + traj.termination_detail};
    }
    if (rules.structural_checks.count("env") && traj.termination == Termination::EnvFailure) {
        return {CurationDecision::Reject, "structural",
                "termination=EnvFailure: " + traj.termination_detail};
    }
    if (rules.require_answer && traj.termination != Termination::Answered) {
        return {CurationDecision::Reject, "no_answer",
                std::string("termination=") + termination_name(traj.termination)};
    }
    if (traj.metrics.total_tokens > rules.max_tokens) {
        return {CurationDecision::Reject, "max_tokens",
                std::to_string(traj.metrics.total_tokens) + " > " +
                    std::to_string(rules.max_tokens)};
    }
    double avg = traj.metrics.steps == 0
                     ? 0.0
                     : static_cast<double>(traj.metrics.total_tool_calls) / traj.metrics.steps;
    if (avg < rules.min_avg_calls_per_step) {
        return {CurationDecision::Reject, "min_avg_calls",
                num(avg) + " < " + num(rules.min_avg_calls_per_step)};
    }
    return {CurationDecision::Accept, "", "avg_calls_per_step=" + num(avg)};
}

std::optional<size_t> select_shortest_correct(const std::vector<Trajectory>& trajs,
                                              const std::vector<bool>& judged_correct) {
    std::optional<size_t> best;
    for (size_t i = 0; i < trajs.size(); ++i) {
        if (i >= judged_correct.size() || !judged_correct[i]) continue;
        if (trajs[i].termination != Termination::Answered) continue;
        if (!best) {
            best = i;
            continue;
        }
        const Trajectory& cand = trajs[i];
        const Trajectory& cur = trajs[*best];
        if (cand.metrics.steps != cur.metrics.steps) {
            if (cand.metrics.steps < cur.metrics.steps) best = i;
        } else if (cand.metrics.total_tool_calls != cur.metrics.total_tool_calls) {
            if (cand.metrics.total_tool_calls < cur.metrics.total_tool_calls) best = i;
        } else if (cand.task_id < cur.task_id) {
            best = i;
        }
    }
    return best;
}

CurationOutcome rl_filter(const Trajectory& traj, const RlFilterConfig& config) {
    if (traj.termination == Termination::EnvFailure) {
        return {CurationDecision::Drop, "env", traj.termination_detail};
    }
    if (traj.termination == Termination::StepBudget) {
        return {CurationDecision::Drop, "max_turns", std::to_string(traj.metrics.steps) + " steps"};
    }
    long threshold = config.server_window_tokens - config.overlong_margin;
    if (traj.metrics.total_tokens > threshold) {
        return {CurationDecision::Drop, "overlong",
                std::to_string(traj.metrics.total_tokens) + " > " + std::to_string(threshold)};
    }
    return {CurationDecision::Accept, "", ""};
}

CurationOutcome semantic_filter(const Trajectory& traj, ModelBackend& judge,
                                const SemanticFilterConfig& config) {
    std::string report = traj.final_answer.value_or("");
    RubricScores scores =
        judge_report(traj.task, report, report, config.criteria, judge, config.judge);
    for (const std::string& dim : rubric_dimensions()) {
        double mean = scores.mean_article_1(dim);
        if (mean < config.floor) {
            return {CurationDecision::Reject, dim, num(mean) + " < " + num(config.floor)};
        }
    }
    return {CurationDecision::Accept, "", ""};
}

}  // namespace smtl
