#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smtl/model.hpp"
#include "smtl/trajectory.hpp"

namespace smtl {

class JudgeError : public std::runtime_error {
public:
    enum class Kind { DecodeError, ScoreOutOfRange };

    JudgeError(Kind kind, const std::string& reason)
        : std::runtime_error(reason), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct Verdict {
    std::string rationale;
    std::string judgement;  // exactly "correct" or "incorrect"

    bool correct() const { return judgement == "correct"; }
};

struct CriterionScore {
    std::string criterion;
    std::string analysis;
    double article_1_score = 0.0;
    double article_2_score = 0.0;
};

inline const std::vector<std::string>& rubric_dimensions() {
    static const std::vector<std::string> dims = {"comprehensiveness", "insight",
                                                  "instruction_following", "readability"};
    return dims;
}

/// Four-dimension pairwise report scores; every score lies in [0, 10].
struct RubricScores {
    std::map<std::string, std::vector<CriterionScore>> dimensions;

    double mean_article_1(const std::string& dimension) const;
    double mean_article_2(const std::string& dimension) const;
};

struct JudgeConfig {
    std::string model_id = "judge";
    double temperature = 0.0;
    int max_output_tokens = 4096;
};

/// Answer-equivalence judging: one judge call, JSON decoded; on decode
/// failure one retry, then JudgeError(DecodeError).
Verdict judge_answer(const std::string& question, const std::string& labeled,
                     const std::string& predicted, ModelBackend& judge,
                     const JudgeConfig& config = {});

/// Pairwise report judging over the four dimensions. Missing dimensions are
/// DecodeErrors; scores outside [0, 10] raise ScoreOutOfRange.
RubricScores judge_report(const std::string& task, const std::string& article_1,
                          const std::string& article_2, const std::vector<std::string>& criteria,
                          ModelBackend& judge, const JudgeConfig& config = {});

/// Decodes a raw judge response without calling any backend (exposed for the
/// scripted-judge paths).
Verdict decode_verdict(const std::string& raw);
RubricScores decode_rubric_scores(const std::string& raw);

/// Per-trajectory numbers feeding the efficiency report.
struct EvalItem {
    std::string id;
    int steps = 0;
    long tool_calls = 0;
    bool answered = false;
    bool judged_correct = false;  // meaningful only when answered

    bool success() const { return answered && judged_correct; }
};

EvalItem make_eval_item(const Trajectory& traj, bool judged_correct);

struct EfficiencyReport {
    double accuracy = 0.0;  // pass@1
    double avg_steps = 0.0;
    double median_steps = 0.0;
    std::optional<double> median_steps_success;
    std::optional<double> median_steps_fail;
    double avg_tool_calls_per_step = 0.0;  // pooled: total calls / total steps
    int count = 0;
};

/// Pure statistics over trajectory records; success means judged-correct and
/// Answered. Every trajectory contributes to exactly one of the two median
/// splits.
EfficiencyReport efficiency_metrics(const std::vector<EvalItem>& items);

struct EvalRow {
    std::string label;
    EfficiencyReport report;
};

/// Plain-text table with the Steps / Avg. Tool Calls / Acc. columns, plus a
/// median-split detail block.
std::string render_report_table(const std::vector<EvalRow>& rows);
std::string render_report_csv(const std::vector<EvalRow>& rows);

}  // namespace smtl
