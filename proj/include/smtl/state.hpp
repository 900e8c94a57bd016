#pragma once

#include <string>
#include <vector>

#include "smtl/model.hpp"
#include "smtl/plan.hpp"
#include "smtl/protocol.hpp"

namespace smtl {

/// s_t: the aggregated reasoning state the model conditions on at step t.
/// messages[0] is the system prompt and messages[1] the task statement;
/// everything after is append-only except during context compression.
struct ReasoningState {
    std::vector<ChatMessage> messages;
    TaskPlan plan;            // empty until the model emits its initial plan
    bool plan_built = false;
    int step_index = 0;       // t; number of assistant turns so far
    long token_count = 0;     // token_len(messages) after every mutation
    TaskMode mode = TaskMode::Search;
};

}  // namespace smtl
