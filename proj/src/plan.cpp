#include "smtl/plan.hpp"

#include <algorithm>

#include "smtl/util.hpp"

namespace smtl {

const char* goal_status_name(GoalStatus s) {
    switch (s) {
        case GoalStatus::Pending: return "Pending";
        case GoalStatus::InProgress: return "In Progress";
        case GoalStatus::Completed: return "Completed";
        case GoalStatus::Blocked: return "Blocked";
    }
    return "Pending";
}

const char* path_status_name(PathStatus s) {
    switch (s) {
        case PathStatus::NotStarted: return "Not Started";
        case PathStatus::Active: return "Active";
        case PathStatus::Succeeded: return "Succeeded";
        case PathStatus::Failed: return "Failed";
    }
    return "Not Started";
}

std::optional<GoalStatus> goal_status_from_name(const std::string& name) {
    std::string n = to_lower(trim(name));
    if (n == "pending") return GoalStatus::Pending;
    if (n == "in progress" || n == "inprogress" || n == "in_progress") return GoalStatus::InProgress;
    if (n == "completed" || n == "complete" || n == "done") return GoalStatus::Completed;
    if (n == "blocked") return GoalStatus::Blocked;
    return std::nullopt;
}

std::optional<PathStatus> path_status_from_name(const std::string& name) {
    std::string n = to_lower(trim(name));
    if (n == "not started" || n == "notstarted" || n == "not_started") return PathStatus::NotStarted;
    if (n == "active" || n == "in progress" || n == "in_progress") return PathStatus::Active;
    if (n == "succeeded" || n == "success" || n == "completed" || n == "done") return PathStatus::Succeeded;
    if (n == "failed" || n == "failure") return PathStatus::Failed;
    return std::nullopt;
}

namespace {

/// A goal is Completed when any path succeeded, Blocked when every path
/// failed, InProgress when a path is active. Statuses are derived so the
/// TaskPlan invariants hold by construction.
GoalStatus derive_goal_status(const Goal& goal) {
    bool any_succeeded = false;
    bool any_active = false;
    bool all_failed = !goal.paths.empty();
    for (const Path& p : goal.paths) {
        if (p.status == PathStatus::Succeeded) any_succeeded = true;
        if (p.status == PathStatus::Active) any_active = true;
        if (p.status != PathStatus::Failed) all_failed = false;
    }
    if (any_succeeded) return GoalStatus::Completed;
    if (all_failed) return GoalStatus::Blocked;
    if (any_active) return GoalStatus::InProgress;
    return GoalStatus::Pending;
}

void renumber(TaskPlan& plan) {
    for (size_t g = 0; g < plan.goals.size(); ++g) {
        Goal& goal = plan.goals[g];
        goal.id = std::to_string(g + 1);
        for (size_t p = 0; p < goal.paths.size(); ++p) {
            goal.paths[p].id = goal.id + "." + std::to_string(p + 1);
        }
    }
}

/// "objective => success criterion"; a missing criterion yields an empty one.
Path parse_path_text(const std::string& text, bool* missing_criterion) {
    Path path;
    size_t arrow = text.find("=>");
    if (arrow == std::string::npos) {
        path.objective = trim(text);
        *missing_criterion = true;
    } else {
        path.objective = trim(text.substr(0, arrow));
        path.success_criterion = trim(text.substr(arrow + 2));
        *missing_criterion = path.success_criterion.empty();
    }
    return path;
}

/// Matches "Label", "Label 3", "Label 3.1" prefixes followed by ':' and
/// returns the text after the colon plus the optional id token.
bool match_directive(const std::string& line, const std::string& label,
                     std::string* id_out, std::string* rest_out) {
    if (!starts_with_ci(line, label)) return false;
    size_t pos = label.size();
    while (pos < line.size() && line[pos] == ' ') ++pos;
    size_t id_start = pos;
    while (pos < line.size() && (std::isdigit(static_cast<unsigned char>(line[pos])) || line[pos] == '.')) ++pos;
    std::string id = line.substr(id_start, pos - id_start);
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size() || line[pos] != ':') return false;
    *id_out = id;
    *rest_out = trim(line.substr(pos + 1));
    return true;
}

}  // namespace

bool TaskPlan::valid() const {
    if (goals.empty() || goals.size() > kMaxGoals) return false;
    for (const Goal& g : goals) {
        if (g.paths.empty() || g.paths.size() > kMaxPathsPerGoal) return false;
    }
    return true;
}

std::set<std::string> TaskPlan::completed_ids() const {
    std::set<std::string> out;
    for (const Goal& g : goals) {
        for (const Path& p : g.paths) {
            if (p.status == PathStatus::Succeeded) out.insert(p.id);
        }
    }
    return out;
}

std::set<std::string> TaskPlan::pending_ids() const {
    std::set<std::string> out;
    for (const Goal& g : goals) {
        if (g.status == GoalStatus::Completed || g.status == GoalStatus::Blocked) continue;
        for (const Path& p : g.paths) {
            if (p.status == PathStatus::NotStarted || p.status == PathStatus::Active) {
                out.insert(p.id);
            }
        }
    }
    return out;
}

const Goal* TaskPlan::find_goal(const std::string& id) const {
    for (const Goal& g : goals) {
        if (g.id == id) return &g;
    }
    return nullptr;
}

Goal* TaskPlan::find_goal(const std::string& id) {
    for (Goal& g : goals) {
        if (g.id == id) return &g;
    }
    return nullptr;
}

Path* TaskPlan::find_path(const std::string& id) {
    for (Goal& g : goals) {
        for (Path& p : g.paths) {
            if (p.id == id) return &p;
        }
    }
    return nullptr;
}

TaskPlan parse_plan_body(const std::string& body) {
    TaskPlan plan;
    for (const std::string& raw : split_lines(body)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::string id, rest;
        if (match_directive(line, "Goal", &id, &rest)) {
            Goal goal;
            goal.description = rest;
            plan.goals.push_back(std::move(goal));
        } else if (match_directive(line, "Path", &id, &rest)) {
            if (plan.goals.empty()) {
                plan.warnings.push_back("path line before any goal ignored: " + line);
                continue;
            }
            bool missing = false;
            plan.goals.back().paths.push_back(parse_path_text(rest, &missing));
            if (missing) {
                plan.warnings.push_back("path without success criterion in goal " +
                                        std::to_string(plan.goals.size()));
            }
        }
        // Other lines are plan prose; they carry no structure.
    }
    if (plan.goals.empty()) {
        throw PlanError(PlanError::Kind::EmptyPlan, "plan body contains no goals");
    }
    if (plan.goals.size() > kMaxGoals) {
        throw PlanError(PlanError::Kind::BoundsViolation,
                        "plan has " + std::to_string(plan.goals.size()) + " goals (max " +
                            std::to_string(kMaxGoals) + ")");
    }
    for (size_t i = 0; i < plan.goals.size(); ++i) {
        Goal& g = plan.goals[i];
        if (g.paths.empty()) {
            bool missing = false;
            g.paths.push_back(parse_path_text(g.description, &missing));
            plan.warnings.push_back("goal " + std::to_string(i + 1) +
                                    " has no paths; derived one from its description");
        }
        if (g.paths.size() > kMaxPathsPerGoal) {
            throw PlanError(PlanError::Kind::BoundsViolation,
                            "goal " + std::to_string(i + 1) + " has " +
                                std::to_string(g.paths.size()) + " paths (max " +
                                std::to_string(kMaxPathsPerGoal) + ")");
        }
    }
    renumber(plan);
    return plan;
}

TaskPlan build_plan(const AgentTurn& block) {
    if (auto body = block.block_body(Tag::Plan)) {
        return parse_plan_body(*body);
    }
    if (auto body = block.block_body(Tag::SubtaskList)) {
        // Each list item becomes one goal with a single path.
        TaskPlan plan;
        for (const std::string& raw : split_lines(*body)) {
            std::string line = trim(raw);
            // Strip "1.", "2)", "-", "*" list markers.
            size_t pos = 0;
            while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
            if (pos > 0 && pos < line.size() && (line[pos] == '.' || line[pos] == ')')) {
                line = trim(line.substr(pos + 1));
            } else if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
                line = trim(line.substr(1));
            }
            if (line.empty()) continue;
            Goal goal;
            goal.description = line;
            bool missing = false;
            goal.paths.push_back(parse_path_text(line, &missing));
            plan.goals.push_back(std::move(goal));
        }
        if (plan.goals.empty()) {
            throw PlanError(PlanError::Kind::EmptyPlan, "subtask_list contains no subtasks");
        }
        if (plan.goals.size() > kMaxGoals) {
            throw PlanError(PlanError::Kind::BoundsViolation,
                            "subtask_list has " + std::to_string(plan.goals.size()) +
                                " subtasks (max " + std::to_string(kMaxGoals) + ")");
        }
        renumber(plan);
        return plan;
    }
    throw PlanError(PlanError::Kind::EmptyPlan, "turn carries no plan or subtask_list block");
}

RefinementDelta parse_refinement_body(const std::string& body) {
    RefinementDelta delta;
    std::string recap;
    for (const std::string& raw : split_lines(body)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::string id, rest;
        if (match_directive(line, "Recap", &id, &rest)) {
            if (!recap.empty()) recap += "\n";
            recap += rest;
        } else if (match_directive(line, "Completed", &id, &rest)) {
            for (const std::string& tok : split_any(rest, ", ")) {
                delta.completed_subtasks.insert(trim(tok));
            }
        } else if (match_directive(line, "Status", &id, &rest)) {
            if (!id.empty()) delta.status_updates[id] = rest;
        } else if (match_directive(line, "Add Path", &id, &rest)) {
            bool missing = false;
            Path p = parse_path_text(rest, &missing);
            delta.new_subtasks.push_back({id, p.objective, p.success_criterion});
        } else if (match_directive(line, "Add Goal", &id, &rest)) {
            bool missing = false;
            Path p = parse_path_text(rest, &missing);
            delta.new_subtasks.push_back({"", p.objective, p.success_criterion});
        } else if (match_directive(line, "Goal", &id, &rest)) {
            // "Goal 2: Blocked" — a bare status line from the recap section.
            if (!id.empty() && goal_status_from_name(rest)) delta.status_updates[id] = rest;
        } else {
            if (!recap.empty()) recap += "\n";
            recap += line;
        }
    }
    delta.recap = recap;
    return delta;
}

std::vector<SubtaskRef> ready_subtasks(const TaskPlan& plan) {
    std::vector<SubtaskRef> out;
    for (const Goal& g : plan.goals) {
        if (g.status == GoalStatus::Completed || g.status == GoalStatus::Blocked) continue;
        for (const Path& p : g.paths) {
            if (p.status == PathStatus::Failed) continue;
            if (p.status == PathStatus::Succeeded) break;  // goal is effectively done
            out.push_back({g.id, p.id, p.objective, p.success_criterion});
            break;  // paths within a goal are sequential; one ready path per goal
        }
    }
    return out;
}

TaskPlan apply_refinement(const TaskPlan& plan, const RefinementDelta& delta) {
    TaskPlan next = plan;

    // Bounds are checked before mutation so a throwing call leaves the
    // caller's plan usable.
    std::map<std::string, int> added_paths;
    int added_goals = 0;
    for (const NewSubtask& ns : delta.new_subtasks) {
        if (ns.goal_id.empty()) {
            ++added_goals;
        } else {
            ++added_paths[ns.goal_id];
        }
    }
    if (next.goals.size() + static_cast<size_t>(added_goals) > kMaxGoals) {
        throw PlanError(PlanError::Kind::BoundsViolation,
                        "refinement would exceed " + std::to_string(kMaxGoals) + " goals");
    }
    for (const auto& [goal_id, count] : added_paths) {
        const Goal* g = next.find_goal(goal_id);
        if (g && g->paths.size() + static_cast<size_t>(count) > kMaxPathsPerGoal) {
            throw PlanError(PlanError::Kind::BoundsViolation,
                            "refinement would exceed " + std::to_string(kMaxPathsPerGoal) +
                                " paths in goal " + goal_id);
        }
    }

    for (const std::string& id : delta.completed_subtasks) {
        Path* p = next.find_path(id);
        if (!p) {
            next.warnings.push_back("completed id not in plan: " + id);
            continue;
        }
        p->status = PathStatus::Succeeded;
    }

    for (const auto& [id, status_name] : delta.status_updates) {
        if (Path* p = next.find_path(id)) {
            auto ps = path_status_from_name(status_name);
            if (!ps) {
                next.warnings.push_back("unknown path status \"" + status_name + "\" for " + id);
                continue;
            }
            if (p->status == PathStatus::Succeeded && *ps != PathStatus::Succeeded) {
                next.warnings.push_back("ignored demotion of succeeded path " + id);
                continue;
            }
            p->status = *ps;
        } else if (Goal* g = next.find_goal(id)) {
            auto gs = goal_status_from_name(status_name);
            if (!gs) {
                next.warnings.push_back("unknown goal status \"" + status_name + "\" for goal " + id);
                continue;
            }
            // Goal-level declarations are pushed down onto paths so the
            // derived status matches the declaration.
            if (*gs == GoalStatus::Blocked) {
                for (Path& p : g->paths) {
                    if (p.status != PathStatus::Succeeded) p.status = PathStatus::Failed;
                }
            } else if (*gs == GoalStatus::Completed) {
                bool already = std::any_of(g->paths.begin(), g->paths.end(), [](const Path& p) {
                    return p.status == PathStatus::Succeeded;
                });
                if (!already) {
                    for (Path& p : g->paths) {
                        if (p.status != PathStatus::Failed) {
                            p.status = PathStatus::Succeeded;
                            break;
                        }
                    }
                }
            }
        } else {
            next.warnings.push_back("status update for unknown id: " + id);
        }
    }

    for (const NewSubtask& ns : delta.new_subtasks) {
        if (ns.goal_id.empty()) {
            Goal goal;
            goal.description = ns.objective;
            goal.paths.push_back({"", ns.objective, ns.success_criterion, PathStatus::NotStarted});
            next.goals.push_back(std::move(goal));
        } else {
            Goal* g = next.find_goal(ns.goal_id);
            if (!g) {
                next.warnings.push_back("new path for unknown goal: " + ns.goal_id);
                continue;
            }
            g->paths.push_back({"", ns.objective, ns.success_criterion, PathStatus::NotStarted});
        }
    }

    renumber(next);
    refresh_statuses(next);
    ++next.revision;
    return next;
}

void refresh_statuses(TaskPlan& plan) {
    for (Goal& g : plan.goals) g.status = derive_goal_status(g);
}

}  // namespace smtl
