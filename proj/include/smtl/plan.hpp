#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "smtl/protocol.hpp"

namespace smtl {

inline constexpr int kMaxGoals = 5;
inline constexpr int kMaxPathsPerGoal = 5;

enum class GoalStatus { Pending, InProgress, Completed, Blocked };
enum class PathStatus { NotStarted, Active, Succeeded, Failed };

const char* goal_status_name(GoalStatus s);
const char* path_status_name(PathStatus s);
std::optional<GoalStatus> goal_status_from_name(const std::string& name);
std::optional<PathStatus> path_status_from_name(const std::string& name);

class PlanError : public std::runtime_error {
public:
    enum class Kind { BoundsViolation, EmptyPlan };

    PlanError(Kind kind, const std::string& reason)
        : std::runtime_error(reason), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// One sequential fallback path (the unit of work — a subtask). Path i of a
/// goal may activate only once paths 0..i-1 have failed.
struct Path {
    std::string id;  // "<goal>.<path>", e.g. "2.1"
    std::string objective;
    std::string success_criterion;
    PathStatus status = PathStatus::NotStarted;

    bool operator==(const Path&) const = default;
};

struct Goal {
    std::string id;  // "1".."5"
    std::string description;
    std::vector<Path> paths;
    GoalStatus status = GoalStatus::Pending;

    bool operator==(const Goal&) const = default;
};

struct SubtaskRef {
    std::string goal_id;
    std::string path_id;
    std::string objective;
    std::string success_criterion;

    bool operator==(const SubtaskRef&) const = default;
};

struct NewSubtask {
    std::string goal_id;  // empty means a brand-new goal
    std::string objective;
    std::string success_criterion;

    bool operator==(const NewSubtask&) const = default;
};

/// The action of a plan_refine turn, decoded from its body text.
struct RefinementDelta {
    std::set<std::string> completed_subtasks;           // path ids
    std::vector<NewSubtask> new_subtasks;
    std::map<std::string, std::string> status_updates;  // id -> status name
    std::string recap;

    bool empty() const {
        return completed_subtasks.empty() && new_subtasks.empty() && status_updates.empty();
    }
};

struct TaskPlan {
    std::vector<Goal> goals;
    int revision = 0;  // increments exactly when a refinement applies
    std::vector<std::string> warnings;

    bool valid() const;
    std::set<std::string> completed_ids() const;  // C_t: succeeded path ids
    std::set<std::string> pending_ids() const;    // P_t: live, not-yet-resolved path ids
    const Goal* find_goal(const std::string& id) const;
    Goal* find_goal(const std::string& id);
    Path* find_path(const std::string& id);
};

/// Builds the initial plan (revision 0) from a plan or subtask_list turn.
/// Plan bodies use one "Goal:" line per goal with indented "Path:" lines
/// ("objective => success criterion"); subtask_list bodies are treated as one
/// single-path goal per list item. Goals lacking explicit paths get one path
/// derived from the goal description, with a warning.
TaskPlan build_plan(const AgentTurn& block);

/// Parses a plan body string directly (the helper behind build_plan).
TaskPlan parse_plan_body(const std::string& body);

/// Decodes a plan_refine body into a delta. Recognized directives, one per
/// line: "Recap:", "Completed: <ids>", "Status <id>: <status>",
/// "Add Path <goal-id>: objective => criterion", "Add Goal: description".
/// Everything else is recap prose.
RefinementDelta parse_refinement_body(const std::string& body);

/// E_t: the first non-failed, non-succeeded path of every non-terminal goal,
/// in goal order. Pure function; an empty result is the loop-termination
/// condition.
std::vector<SubtaskRef> ready_subtasks(const TaskPlan& plan);

/// Applies a delta: completed subtasks move to C, statuses update, new
/// subtasks append, revision increments. Unknown ids are ignored with a
/// warning; succeeded paths are never demoted. Throws PlanError on bound
/// violations (the plan is left untouched).
TaskPlan apply_refinement(const TaskPlan& plan, const RefinementDelta& delta);

/// Re-derives goal statuses from path statuses (any succeeded path completes
/// a goal; all-failed blocks it).
void refresh_statuses(TaskPlan& plan);

}  // namespace smtl
