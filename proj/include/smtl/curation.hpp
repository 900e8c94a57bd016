#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "smtl/eval.hpp"
#include "smtl/trajectory.hpp"

namespace smtl {

/// SFT hard-rejection thresholds. Boundaries are inclusive on the accepting
/// side: a trajectory at exactly max_tokens passes, and an average of
/// exactly min_avg_calls_per_step passes.
struct CurationRules {
    long max_tokens = 65536;
    double min_avg_calls_per_step = 3.0;
    bool require_answer = true;
    std::set<std::string> structural_checks = {"format", "env"};
};

enum class CurationDecision { Accept, Reject, Drop };

const char* curation_decision_name(CurationDecision d);

struct CurationOutcome {
    CurationDecision decision = CurationDecision::Accept;
    std::string reason;    // empty iff Accept
    std::string evidence;  // the measured value that triggered the decision
};

/// Rule-based hard rejection: structural checks, answer requirement, token
/// cap, call-density floor — in that order; first failure wins.
CurationOutcome hard_reject(const Trajectory& traj, const CurationRules& rules);

/// Among judged-correct trajectories for one task, the one with the fewest
/// steps; ties break by fewer total tool calls, then by trajectory id.
/// Returns the index into `trajs`, or nullopt when none is correct.
std::optional<size_t> select_shortest_correct(const std::vector<Trajectory>& trajs,
                                              const std::vector<bool>& judged_correct);

struct RlFilterConfig {
    long server_window_tokens = 131072;
    long overlong_margin = 1024;  // "excessively long" = window minus this margin
};

/// Negative-trajectory filtering for RL: environment failures, step-budget
/// terminations and overlong responses are dropped; answered-incorrect
/// trajectories are kept (they are legitimate negatives), and so are
/// format-violation trajectories (their reward-0 signal is the point).
CurationOutcome rl_filter(const Trajectory& traj, const RlFilterConfig& config = {});

struct SemanticFilterConfig {
    double floor = 6.0;  // "Good" band; a config default, not a fixed constant
    std::vector<std::string> criteria = {
        "Comprehensiveness: the report covers all key aspects of the task.",
        "Insight: the report offers analysis beyond surface-level restatement.",
        "Instruction following: the report answers exactly what the task asks.",
        "Readability: the report is clearly organized and easy to follow.",
    };
    JudgeConfig judge;
};

/// LLM-judge semantic filter over the four dimensions; Accept iff every
/// dimension's mean score reaches the floor. Runs only after hard_reject
/// passes (the two-stage order). The pairwise rubric is applied with the
/// candidate report as both articles; article-1 scores decide.
CurationOutcome semantic_filter(const Trajectory& traj, ModelBackend& judge,
                                const SemanticFilterConfig& config = {});

}  // namespace smtl
