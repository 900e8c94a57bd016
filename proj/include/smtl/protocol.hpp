#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smtl {

/// Which tag grammar the agent speaks. Search tasks use the compact
/// plan / plan_refine / tool_call / answer protocol; research tasks use the
/// subtask-oriented protocol (subtask_list / subtask / analysis / plan /
/// tool_call / subtask_answer / answer).
enum class TaskMode { Search, Research };

const char* task_mode_name(TaskMode mode);
std::optional<TaskMode> task_mode_from_name(const std::string& name);

enum class TurnKind {
    Plan,
    PlanRefine,
    ToolCalls,
    Answer,
    SubtaskList,
    SubtaskOpen,
    Analysis,
    SubtaskAnswer,
};

const char* turn_kind_name(TurnKind kind);

/// Tags that can appear in an assistant turn. ToolResponse is listed because
/// the engine emits it; an assistant producing it is malformed.
enum class Tag {
    Plan,
    PlanRefine,
    ToolCall,
    Answer,
    SubtaskList,
    Subtask,
    Analysis,
    SubtaskAnswer,
    ToolResponse,
};

const char* tag_name(Tag tag);

class ProtocolError : public std::runtime_error {
public:
    enum class Kind {
        MalformedTurn,    // no recognized tag, unbalanced tags, duplicate blocks
        FormatViolation,  // unknown tool, missing argument, undecodable call body
    };

    ProtocolError(Kind kind, const std::string& reason)
        : std::runtime_error(reason), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct ToolCallRequest {
    int index = 0;  // 0-based position within the turn
    std::string name;
    std::map<std::string, std::string> arguments;

    bool operator==(const ToolCallRequest&) const = default;
};

/// One segment of an assistant turn, in document order. Keeping the segment
/// list (instead of just the classified fields) is what makes
/// parse(render(turn)) == turn hold exactly.
struct TurnSegment {
    enum class Type { FreeText, Block, ToolCall };

    Type type = Type::FreeText;
    Tag tag = Tag::Plan;     // valid when type == Block
    std::string text;        // free text, or block body
    ToolCallRequest call;    // valid when type == ToolCall

    bool operator==(const TurnSegment&) const = default;
};

/// A fully parsed assistant turn.
struct AgentTurn {
    TurnKind kind = TurnKind::Analysis;
    TaskMode mode = TaskMode::Search;
    std::vector<TurnSegment> segments;

    bool operator==(const AgentTurn&) const = default;

    /// Body of the kind-defining block (empty for ToolCalls turns with no
    /// secondary block).
    std::string body() const;

    /// Body of the first block with the given tag, if present. Turns may mix
    /// e.g. a plan_refine block with tool calls; the engine applies the
    /// refine first, then dispatches the calls.
    std::optional<std::string> block_body(Tag tag) const;

    std::vector<ToolCallRequest> tool_calls() const;

    /// Concatenation of all untagged text.
    std::string free_text() const;
};

/// Known tool names and their required arguments.
bool is_known_tool(const std::string& name);

/// Parses one complete assistant message under the given grammar.
/// Throws ProtocolError(MalformedTurn) for tag-level problems and
/// ProtocolError(FormatViolation) for tool-call problems. Pure function.
AgentTurn parse_turn(const std::string& text, TaskMode mode);

/// Inverse of parse_turn for well-formed turns. Tool calls are serialized
/// canonically: {"name": ..., "arguments": {...}} with arguments in key order.
std::string render_turn(const AgentTurn& turn);

std::string render_tool_call(const ToolCallRequest& call);

/// Checks name and required arguments; `per_step_budget` bounds the index.
/// Throws ProtocolError(FormatViolation) with the reason.
void validate_tool_call(const ToolCallRequest& req, int per_step_budget);

}  // namespace smtl
