#include "smtl/protocol.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include <nlohmann/json.hpp>

#include "smtl/util.hpp"

namespace smtl {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* task_mode_name(TaskMode mode) {
    return mode == TaskMode::Search ? "search" : "research";
}

std::optional<TaskMode> task_mode_from_name(const std::string& name) {
    if (name == "search") return TaskMode::Search;
    if (name == "research") return TaskMode::Research;
    return std::nullopt;
}

const char* turn_kind_name(TurnKind kind) {
    switch (kind) {
        case TurnKind::Plan: return "plan";
        case TurnKind::PlanRefine: return "plan_refine";
        case TurnKind::ToolCalls: return "tool_calls";
        case TurnKind::Answer: return "answer";
        case TurnKind::SubtaskList: return "subtask_list";
        case TurnKind::SubtaskOpen: return "subtask";
        case TurnKind::Analysis: return "analysis";
        case TurnKind::SubtaskAnswer: return "subtask_answer";
    }
    return "unknown";
}

const char* tag_name(Tag tag) {
    switch (tag) {
        case Tag::Plan: return "plan";
        case Tag::PlanRefine: return "plan_refine";
        case Tag::ToolCall: return "tool_call";
        case Tag::Answer: return "answer";
        case Tag::SubtaskList: return "subtask_list";
        case Tag::Subtask: return "subtask";
        case Tag::Analysis: return "analysis";
        case Tag::SubtaskAnswer: return "subtask_answer";
        case Tag::ToolResponse: return "tool_response";
    }
    return "unknown";
}

namespace {

std::vector<Tag> grammar_tags(TaskMode mode) {
    if (mode == TaskMode::Search) {
        return {Tag::Plan, Tag::PlanRefine, Tag::ToolCall, Tag::Answer, Tag::ToolResponse};
    }
    return {Tag::SubtaskList, Tag::Subtask, Tag::Analysis, Tag::Plan,
            Tag::ToolCall, Tag::SubtaskAnswer, Tag::Answer, Tag::ToolResponse};
}

/// Converts single-quoted pseudo-JSON to real JSON. The protocol examples the
/// models learn from write tool calls as {'name': 'web_search', ...}, so
/// single quotes outside double-quoted strings become double quotes.
std::string normalize_quotes(const std::string& input) {
    std::string out;
    out.reserve(input.size());
    bool in_double = false;
    bool in_single = false;
    bool escape = false;
    for (char c : input) {
        if (escape) {
            out += c;
            escape = false;
            continue;
        }
        if (c == '\\') {
            out += c;
            escape = true;
            continue;
        }
        if (c == '"' && !in_single) {
            in_double = !in_double;
            out += c;
        } else if (c == '\'' && !in_double) {
            in_single = !in_single;
            out += '"';
        } else {
            out += c;
        }
    }
    return out;
}

/// One repair pass: strip code fences, then take the first balanced object.
std::string extract_json_object(const std::string& raw) {
    std::string s = raw;
    size_t fence = s.find("```");
    if (fence != std::string::npos) {
        size_t body_start = s.find('\n', fence);
        if (body_start != std::string::npos) {
            size_t fence_end = s.find("```", body_start);
            if (fence_end != std::string::npos) {
                s = s.substr(body_start + 1, fence_end - body_start - 1);
            }
        }
    }
    size_t start = s.find('{');
    if (start == std::string::npos) return "";
    int depth = 0;
    bool in_string = false;
    bool escape = false;
    for (size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (escape) {
            escape = false;
            continue;
        }
        if (c == '\\') {
            escape = true;
            continue;
        }
        if (c == '"') in_string = !in_string;
        if (in_string) continue;
        if (c == '{') ++depth;
        if (c == '}') {
            --depth;
            if (depth == 0) return s.substr(start, i - start + 1);
        }
    }
    return "";
}

std::string value_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

ToolCallRequest decode_tool_call(const std::string& body) {
    std::string text = trim(body);
    json obj;
    bool parsed = false;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
        std::string candidate = attempt == 0 ? normalize_quotes(text)
                                             : extract_json_object(normalize_quotes(text));
        if (candidate.empty()) continue;
        try {
            obj = json::parse(candidate);
            parsed = obj.is_object();
        } catch (const json::exception&) {
        }
    }
    if (!parsed) {
        throw ProtocolError(ProtocolError::Kind::FormatViolation,
                            "tool_call body is not a decodable JSON object");
    }
    if (!obj.contains("name") || !obj["name"].is_string()) {
        throw ProtocolError(ProtocolError::Kind::FormatViolation,
                            "tool_call object has no \"name\" field");
    }
    ToolCallRequest req;
    req.name = obj["name"].get<std::string>();
    if (obj.contains("arguments")) {
        if (!obj["arguments"].is_object()) {
            throw ProtocolError(ProtocolError::Kind::FormatViolation,
                                "tool_call \"arguments\" is not an object");
        }
        for (const auto& [key, value] : obj["arguments"].items()) {
            req.arguments[key] = value_to_string(value);
        }
    }
    return req;
}

struct TagHit {
    size_t pos = std::string::npos;
    Tag tag = Tag::Plan;
    bool closing = false;
};

TagHit find_next_tag(const std::string& text, size_t from, const std::vector<Tag>& tags) {
    TagHit best;
    for (Tag t : tags) {
        std::string open = std::string("<") + tag_name(t) + ">";
        std::string close = std::string("</") + tag_name(t) + ">";
        size_t p = text.find(open, from);
        if (p != std::string::npos && p < best.pos) best = {p, t, false};
        p = text.find(close, from);
        if (p != std::string::npos && p < best.pos) best = {p, t, true};
    }
    return best;
}

}  // namespace

std::string AgentTurn::body() const {
    for (const auto& seg : segments) {
        if (seg.type != TurnSegment::Type::Block) continue;
        switch (kind) {
            case TurnKind::Plan:
                if (seg.tag == Tag::Plan) return seg.text;
                break;
            case TurnKind::PlanRefine:
                if (seg.tag == Tag::PlanRefine) return seg.text;
                break;
            case TurnKind::Answer:
                if (seg.tag == Tag::Answer) return seg.text;
                break;
            case TurnKind::SubtaskList:
                if (seg.tag == Tag::SubtaskList) return seg.text;
                break;
            case TurnKind::SubtaskOpen:
                if (seg.tag == Tag::Subtask) return seg.text;
                break;
            case TurnKind::Analysis:
                if (seg.tag == Tag::Analysis) return seg.text;
                break;
            case TurnKind::SubtaskAnswer:
                if (seg.tag == Tag::SubtaskAnswer) return seg.text;
                break;
            case TurnKind::ToolCalls:
                break;
        }
    }
    return "";
}

std::optional<std::string> AgentTurn::block_body(Tag tag) const {
    for (const auto& seg : segments) {
        if (seg.type == TurnSegment::Type::Block && seg.tag == tag) return seg.text;
    }
    return std::nullopt;
}

std::vector<ToolCallRequest> AgentTurn::tool_calls() const {
    std::vector<ToolCallRequest> out;
    for (const auto& seg : segments) {
        if (seg.type == TurnSegment::Type::ToolCall) out.push_back(seg.call);
    }
    return out;
}

std::string AgentTurn::free_text() const {
    std::string out;
    for (const auto& seg : segments) {
        if (seg.type == TurnSegment::Type::FreeText) out += seg.text;
    }
    return out;
}

bool is_known_tool(const std::string& name) {
    return name == "web_search" || name == "crawl_page";
}

AgentTurn parse_turn(const std::string& text, TaskMode mode) {
    const std::vector<Tag> tags = grammar_tags(mode);
    AgentTurn turn;
    turn.mode = mode;

    size_t pos = 0;
    int call_index = 0;
    std::array<int, 9> block_counts{};
    while (pos < text.size()) {
        TagHit hit = find_next_tag(text, pos, tags);
        if (hit.pos == std::string::npos) {
            turn.segments.push_back({TurnSegment::Type::FreeText, Tag::Plan,
                                     text.substr(pos), {}});
            break;
        }
        if (hit.closing) {
            throw ProtocolError(ProtocolError::Kind::MalformedTurn,
                                std::string("stray closing tag </") + tag_name(hit.tag) + ">");
        }
        if (hit.pos > pos) {
            turn.segments.push_back({TurnSegment::Type::FreeText, Tag::Plan,
                                     text.substr(pos, hit.pos - pos), {}});
        }
        if (hit.tag == Tag::ToolResponse) {
            throw ProtocolError(ProtocolError::Kind::MalformedTurn,
                                "assistant turns must not contain <tool_response>");
        }
        std::string open = std::string("<") + tag_name(hit.tag) + ">";
        std::string close = std::string("</") + tag_name(hit.tag) + ">";
        size_t body_start = hit.pos + open.size();
        size_t close_pos = text.find(close, body_start);
        if (close_pos == std::string::npos) {
            throw ProtocolError(ProtocolError::Kind::MalformedTurn,
                                std::string("unbalanced <") + tag_name(hit.tag) + ">");
        }
        std::string body = text.substr(body_start, close_pos - body_start);
        if (hit.tag == Tag::ToolCall) {
            TurnSegment seg;
            seg.type = TurnSegment::Type::ToolCall;
            seg.tag = Tag::ToolCall;
            seg.call = decode_tool_call(body);
            seg.call.index = call_index++;
            validate_tool_call(seg.call, std::numeric_limits<int>::max());
            turn.segments.push_back(std::move(seg));
        } else {
            ++block_counts[static_cast<size_t>(hit.tag)];
            if (block_counts[static_cast<size_t>(hit.tag)] > 1) {
                throw ProtocolError(ProtocolError::Kind::MalformedTurn,
                                    std::string("duplicate <") + tag_name(hit.tag) + "> block");
            }
            turn.segments.push_back({TurnSegment::Type::Block, hit.tag, body, {}});
        }
        pos = close_pos + close.size();
    }

    bool any_block = call_index > 0;
    for (int c : block_counts) any_block = any_block || c > 0;
    if (!any_block) {
        throw ProtocolError(ProtocolError::Kind::MalformedTurn,
                            "no recognized tag in assistant turn");
    }
    bool has_answer = block_counts[static_cast<size_t>(Tag::Answer)] > 0;
    if (has_answer && call_index > 0) {
        throw ProtocolError(ProtocolError::Kind::MalformedTurn,
                            "terminal <answer> mixed with tool calls");
    }

    if (call_index > 0) {
        turn.kind = TurnKind::ToolCalls;
    } else if (has_answer) {
        turn.kind = TurnKind::Answer;
    } else if (block_counts[static_cast<size_t>(Tag::SubtaskList)] > 0) {
        turn.kind = TurnKind::SubtaskList;
    } else if (block_counts[static_cast<size_t>(Tag::PlanRefine)] > 0) {
        turn.kind = TurnKind::PlanRefine;
    } else if (block_counts[static_cast<size_t>(Tag::Plan)] > 0) {
        turn.kind = TurnKind::Plan;
    } else if (block_counts[static_cast<size_t>(Tag::SubtaskAnswer)] > 0) {
        turn.kind = TurnKind::SubtaskAnswer;
    } else if (block_counts[static_cast<size_t>(Tag::Subtask)] > 0) {
        turn.kind = TurnKind::SubtaskOpen;
    } else {
        turn.kind = TurnKind::Analysis;
    }
    return turn;
}

std::string render_tool_call(const ToolCallRequest& call) {
    ordered_json obj;
    obj["name"] = call.name;
    ordered_json args = ordered_json::object();
    for (const auto& [k, v] : call.arguments) args[k] = v;
    obj["arguments"] = std::move(args);
    return obj.dump();
}

std::string render_turn(const AgentTurn& turn) {
    std::string out;
    for (const auto& seg : turn.segments) {
        switch (seg.type) {
            case TurnSegment::Type::FreeText:
                out += seg.text;
                break;
            case TurnSegment::Type::Block:
                out += "<";
                out += tag_name(seg.tag);
                out += ">";
                out += seg.text;
                out += "</";
                out += tag_name(seg.tag);
                out += ">";
                break;
            case TurnSegment::Type::ToolCall:
                out += "<tool_call>\n";
                out += render_tool_call(seg.call);
                out += "\n</tool_call>";
                break;
        }
    }
    return out;
}

void validate_tool_call(const ToolCallRequest& req, int per_step_budget) {
    if (req.index < 0 || req.index >= per_step_budget) {
        throw ProtocolError(ProtocolError::Kind::FormatViolation,
                            "tool call index " + std::to_string(req.index) +
                                " exceeds per-step budget of " + std::to_string(per_step_budget));
    }
    if (!is_known_tool(req.name)) {
        throw ProtocolError(ProtocolError::Kind::FormatViolation,
                            "unknown tool \"" + req.name + "\"");
    }
    auto require = [&](const char* arg) {
        auto it = req.arguments.find(arg);
        if (it == req.arguments.end() || trim(it->second).empty()) {
            throw ProtocolError(ProtocolError::Kind::FormatViolation,
                                req.name + " requires nonempty argument \"" + arg + "\"");
        }
    };
    if (req.name == "web_search") {
        require("query");
    } else if (req.name == "crawl_page") {
        require("url");
        require("query");
    }
}

}  // namespace smtl
