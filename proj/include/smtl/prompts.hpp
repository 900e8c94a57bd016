#pragma once

#include <string>
#include <vector>

#include "smtl/protocol.hpp"

namespace smtl::prompts {

/// System prompt for the given grammar. Tag names are the wire contract;
/// plan bounds and the per-step call limit are stated to the model here.
std::string system_prompt(TaskMode mode, int per_step_call_max);

/// Periodic plan-refine instruction, sent as a user message when t mod delta
/// hits zero.
std::string refine_instruction(TaskMode mode);

/// Forced refinement used by the overflow compression scheme: asks for a
/// plan_refine that carries everything worth keeping, since all pre-plan
/// context is about to be dropped.
std::string forced_refine_instruction(TaskMode mode);

/// Sent once when the pending set empties without an answer: the model gets
/// one turn to produce its final <answer> before the episode ends.
std::string answer_now_instruction(TaskMode mode);

/// Goal-conditioned page summarization prompt. Output contract: a JSON
/// object with "rationale", "evidence" and "summary" string fields.
std::string summarize_page(const std::string& url, const std::string& content,
                           const std::string& goal);

/// Answer-equivalence judge prompt. Output contract: {"rationale": ...,
/// "judgement": "correct" | "incorrect"}.
std::string judge_answer(const std::string& question, const std::string& labeled,
                         const std::string& predicted);

/// Pairwise report judge prompt over the four dimensions (comprehensiveness,
/// insight, instruction_following, readability), each criterion scored 0-10
/// per article.
std::string judge_report(const std::string& task, const std::string& article_1,
                         const std::string& article_2, const std::vector<std::string>& criteria);

}  // namespace smtl::prompts
