#pragma once

#include <algorithm>
#include <random>
#include <string>

#include "smtl/protocol.hpp"

namespace smtl::testing {

/// Deterministic generator of well-formed agent turns for round-trip
/// checking. Free text and block bodies avoid '<' so the generated turn is
/// unambiguous under the tag grammar.
class TurnGenerator {
public:
    explicit TurnGenerator(uint32_t seed) : rng_(seed) {}

    AgentTurn generate(TaskMode mode) {
        AgentTurn turn;
        turn.mode = mode;
        bool want_calls = chance(50);
        bool want_answer = !want_calls && chance(25);

        std::vector<Tag> block_pool;
        if (mode == TaskMode::Search) {
            block_pool = {Tag::Plan, Tag::PlanRefine};
        } else {
            block_pool = {Tag::SubtaskList, Tag::Subtask, Tag::Analysis, Tag::Plan,
                          Tag::SubtaskAnswer};
        }
        std::shuffle(block_pool.begin(), block_pool.end(), rng_);
        size_t n_blocks = want_answer ? 0 : 1 + pick(block_pool.size() - 1);

        bool pending_text = chance(60);
        auto maybe_text = [&] {
            if (pending_text) {
                turn.segments.push_back({TurnSegment::Type::FreeText, Tag::Plan, safe_text(), {}});
            }
            pending_text = chance(60);
        };

        maybe_text();
        for (size_t i = 0; i < n_blocks; ++i) {
            turn.segments.push_back({TurnSegment::Type::Block, block_pool[i], safe_text(), {}});
            maybe_text();
        }
        if (want_answer) {
            turn.segments.push_back({TurnSegment::Type::Block, Tag::Answer, safe_text(), {}});
            maybe_text();
        }
        if (want_calls) {
            int n_calls = 1 + static_cast<int>(pick(4));
            for (int i = 0; i < n_calls; ++i) {
                TurnSegment seg;
                seg.type = TurnSegment::Type::ToolCall;
                seg.tag = Tag::ToolCall;
                seg.call.index = i;
                if (chance(50)) {
                    seg.call.name = "web_search";
                    seg.call.arguments["query"] = safe_text();
                } else {
                    seg.call.name = "crawl_page";
                    seg.call.arguments["url"] = "https://example.org/" + std::to_string(pick(99));
                    seg.call.arguments["query"] = safe_text();
                }
                if (chance(20)) seg.call.arguments["note"] = safe_text();
                turn.segments.push_back(std::move(seg));
                maybe_text();
            }
        }
        if (want_calls) {
            turn.kind = TurnKind::ToolCalls;
        } else if (want_answer) {
            turn.kind = TurnKind::Answer;
        } else {
            turn.kind = classify(turn);
        }
        return turn;
    }

private:
    bool chance(int percent) { return static_cast<int>(pick(99)) < percent; }
    size_t pick(size_t max_inclusive) {
        return std::uniform_int_distribution<size_t>(0, max_inclusive)(rng_);
    }

    std::string safe_text() {
        static const char* words[] = {"alpha",  "beta",  "gamma", "delta", "check",
                                      "verify", "route", "която", "07",    "x&y"};
        size_t n = 1 + pick(5);
        std::string out;
        for (size_t i = 0; i < n; ++i) {
            if (i) out += chance(20) ? "\n" : " ";
            out += words[pick(std::size(words) - 1)];
        }
        return out;
    }

    TurnKind classify(const AgentTurn& turn) {
        auto present = [&](Tag t) { return turn.block_body(t).has_value(); };
        if (present(Tag::SubtaskList)) return TurnKind::SubtaskList;
        if (present(Tag::PlanRefine)) return TurnKind::PlanRefine;
        if (present(Tag::Plan)) return TurnKind::Plan;
        if (present(Tag::SubtaskAnswer)) return TurnKind::SubtaskAnswer;
        if (present(Tag::Subtask)) return TurnKind::SubtaskOpen;
        return TurnKind::Analysis;
    }

    std::mt19937 rng_;
};

}  // namespace smtl::testing
