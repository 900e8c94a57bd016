#include "smtl/context.hpp"

#include <map>
#include <mutex>

#include "smtl/prompts.hpp"
#include "smtl/util.hpp"

namespace smtl {

namespace {

std::mutex g_registry_mutex;
std::map<std::string, TokenCounter>& counter_registry() {
    static std::map<std::string, TokenCounter> registry;
    return registry;
}

long approx_bytes_4(std::string_view text) {
    return static_cast<long>((text.size() + 3) / 4);
}

}  // namespace

TokenCounter make_token_counter(const std::string& tokenizer_id) {
    if (tokenizer_id == "approx-bytes-4") return approx_bytes_4;
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    auto it = counter_registry().find(tokenizer_id);
    if (it == counter_registry().end()) {
        throw std::runtime_error("unknown tokenizer id: " + tokenizer_id);
    }
    return it->second;
}

void register_token_counter(const std::string& tokenizer_id, TokenCounter counter) {
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    counter_registry()[tokenizer_id] = std::move(counter);
}

long token_len(const std::vector<ChatMessage>& messages, const TokenCounter& counter) {
    // Message content only; role markers are not charged against the budget.
    long total = 0;
    for (const ChatMessage& m : messages) {
        total += counter(m.content);
    }
    return total;
}

CompressionOutcome check_and_compress(ReasoningState& state, const ContextBudget& budget,
                                      ModelBackend& backend, const std::string& model_id,
                                      double temperature, int max_output_tokens,
                                      const TokenCounter& counter) {
    CompressionOutcome outcome;
    outcome.tokens_before = token_len(state.messages, counter);
    if (outcome.tokens_before < budget.limit) {
        return outcome;  // untouched; repeated calls without growth stay no-ops
    }
    if (state.messages.size() < 2) {
        throw CompressionFailure("state lacks a system prompt and task statement");
    }

    // Forced refinement over the full current history.
    ChatRequest req;
    req.model_id = model_id;
    req.temperature = temperature;
    req.max_tokens = max_output_tokens;
    req.messages = state.messages;
    req.messages.push_back({"user", prompts::forced_refine_instruction(state.mode)});
    ChatResponse resp = backend.complete(req);

    RefinementDelta delta;
    try {
        AgentTurn turn = parse_turn(resp.text, state.mode);
        if (auto refine = turn.block_body(Tag::PlanRefine)) {
            delta = parse_refinement_body(*refine);
        }
    } catch (const ProtocolError&) {
        // A malformed forced refinement still compresses: the raw text is
        // kept as the refreshed-plan summary and the delta stays empty.
    }
    if (state.plan_built) {
        state.plan = apply_refinement(state.plan, delta);
    }

    // Pre-plan context drop: system prompt, task statement, refreshed plan.
    std::vector<ChatMessage> compressed;
    compressed.push_back(state.messages[0]);
    compressed.push_back(state.messages[1]);
    compressed.push_back({"assistant", resp.text});
    state.messages = std::move(compressed);
    state.token_count = token_len(state.messages, counter);
    if (state.token_count >= budget.limit) {
        throw CompressionFailure("compressed state still holds " +
                                 std::to_string(state.token_count) + " tokens against a limit of " +
                                 std::to_string(budget.limit));
    }
    outcome.compressed = true;
    outcome.refine_turn_text = resp.text;
    return outcome;
}

}  // namespace smtl
