#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "smtl/model.hpp"
#include "smtl/state.hpp"

namespace smtl {

struct ContextBudget {
    long limit = 131072;
    std::string tokenizer_id = "approx-bytes-4";
};

using TokenCounter = std::function<long(std::string_view)>;

/// Counter for a tokenizer id. The default scheme "approx-bytes-4" counts
/// ceil(bytes/4); exact tokenizers plug in by registering under their own id.
TokenCounter make_token_counter(const std::string& tokenizer_id);
void register_token_counter(const std::string& tokenizer_id, TokenCounter counter);

/// Deterministic token accounting over a transcript; monotone under append.
long token_len(const std::vector<ChatMessage>& messages, const TokenCounter& counter);

/// Even the compressed state exceeds the budget: the task/plan is
/// pathological and the episode cannot continue.
class CompressionFailure : public std::runtime_error {
public:
    explicit CompressionFailure(const std::string& reason) : std::runtime_error(reason) {}
};

struct CompressionOutcome {
    bool compressed = false;
    std::string refine_turn_text;  // the forced refinement the model produced
    long tokens_before = 0;
};

/// Overflow handling: below the limit the state is returned untouched.
/// At or above it, one forced plan refinement is obtained using the current
/// history, then everything except the system prompt, the task statement and
/// the refinement output is dropped. The plan revision increments.
CompressionOutcome check_and_compress(ReasoningState& state, const ContextBudget& budget,
                                      ModelBackend& backend, const std::string& model_id,
                                      double temperature, int max_output_tokens,
                                      const TokenCounter& counter);

}  // namespace smtl
