#include "smtl/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

namespace smtl {
namespace {

using nlohmann::json;

std::string rubric_json(double c, double i, double f, double r, double article2 = 5.0) {
    json out;
    for (auto [dim, score] : std::initializer_list<std::pair<const char*, double>>{
             {"comprehensiveness", c}, {"insight", i}, {"instruction_following", f},
             {"readability", r}}) {
        out[dim] = json::array({{{"criterion", std::string("crit for ") + dim},
                                 {"analysis", "a"},
                                 {"article_1_score", score},
                                 {"article_2_score", article2}}});
    }
    return out.dump();
}

TEST(JudgeAnswer, IdenticalAnswerJudgedCorrect) {
    ScriptedBackend judge;
    judge.add_sequence({"{\"rationale\": \"same\", \"judgement\": \"correct\"}"});
    Verdict v = judge_answer("q", "Paris", "Paris", judge);
    EXPECT_TRUE(v.correct());
    EXPECT_EQ(v.judgement, "correct");
}

TEST(JudgeAnswer, ScriptedIncorrectPassesThrough) {
    ScriptedBackend judge;
    judge.add_sequence({"{\"rationale\": \"different entity\", \"judgement\": \"incorrect\"}"});
    Verdict v = judge_answer("q", "Paris", "Lyon", judge);
    EXPECT_FALSE(v.correct());
    EXPECT_EQ(v.rationale, "different entity");
}

TEST(JudgeAnswer, OneRetryOnDecodeFailure) {
    ScriptedBackend judge;
    judge.add_sequence({"I think it is correct.",  // undecodable
                        "{\"rationale\": \"ok\", \"judgement\": \"correct\"}"});
    Verdict v = judge_answer("q", "a", "a", judge);
    EXPECT_TRUE(v.correct());
    EXPECT_EQ(judge.calls_made(), 2);
}

TEST(JudgeAnswer, TwoFailuresRaiseDecodeError) {
    ScriptedBackend judge;
    judge.add_sequence({"prose", "more prose"});
    try {
        judge_answer("q", "a", "b", judge);
        FAIL() << "expected JudgeError";
    } catch (const JudgeError& e) {
        EXPECT_EQ(e.kind(), JudgeError::Kind::DecodeError);
    }
    EXPECT_EQ(judge.calls_made(), 2);
}

TEST(JudgeAnswer, FencedJudgementRepairs) {
    ScriptedBackend judge;
    judge.add_sequence({"```json\n{\"rationale\": \"r\", \"judgement\": \"correct\"}\n```"});
    EXPECT_TRUE(judge_answer("q", "a", "a", judge).correct());
}

TEST(JudgeAnswer, BatchAccuracyMatchesHandCount) {
    // 10 fixtures, 7 scripted correct: accuracy must be exactly 0.7.
    std::vector<EvalItem> items;
    for (int i = 0; i < 10; ++i) {
        ScriptedBackend judge;
        bool correct = i < 7;
        judge.add_sequence({std::string("{\"rationale\": \"r\", \"judgement\": \"") +
                            (correct ? "correct" : "incorrect") + "\"}"});
        Verdict v = judge_answer("q", "a", "b", judge);
        EvalItem item;
        item.id = "t" + std::to_string(i);
        item.steps = 5;
        item.tool_calls = 5;
        item.answered = true;
        item.judged_correct = v.correct();
        items.push_back(item);
    }
    EfficiencyReport report = efficiency_metrics(items);
    EXPECT_DOUBLE_EQ(report.accuracy, 0.7);
}

TEST(JudgeReport, ValidFourDimensionOutputDecodes) {
    ScriptedBackend judge;
    judge.add_sequence({rubric_json(8, 7, 9, 6, 4)});
    RubricScores scores = judge_report("task", "a1", "a2", {"crit"}, judge);
    EXPECT_EQ(scores.dimensions.size(), 4u);
    EXPECT_DOUBLE_EQ(scores.mean_article_1("comprehensiveness"), 8.0);
    EXPECT_DOUBLE_EQ(scores.mean_article_1("readability"), 6.0);
    EXPECT_DOUBLE_EQ(scores.mean_article_2("insight"), 4.0);
}

TEST(JudgeReport, ScoreElevenIsOutOfRange) {
    ScriptedBackend judge;
    judge.add_sequence({rubric_json(11, 5, 5, 5)});
    try {
        judge_report("task", "a1", "a2", {"crit"}, judge);
        FAIL() << "expected ScoreOutOfRange";
    } catch (const JudgeError& e) {
        EXPECT_EQ(e.kind(), JudgeError::Kind::ScoreOutOfRange);
    }
}

TEST(JudgeReport, MissingDimensionIsDecodeError) {
    json partial = json::parse(rubric_json(5, 5, 5, 5));
    partial.erase("readability");
    ScriptedBackend judge;
    judge.add_sequence({partial.dump()});
    try {
        judge_report("task", "a1", "a2", {"crit"}, judge);
        FAIL() << "expected DecodeError";
    } catch (const JudgeError& e) {
        EXPECT_EQ(e.kind(), JudgeError::Kind::DecodeError);
    }
}

TEST(JudgeReport, EmptyCriteriaRejected) {
    ScriptedBackend judge;
    EXPECT_THROW(judge_report("task", "a1", "a2", {}, judge), std::invalid_argument);
}

TEST(EfficiencyMetrics, SingleCorrectTrajectory) {
    EvalItem item{"t", 7, 21, true, true};
    EfficiencyReport report = efficiency_metrics({item});
    EXPECT_DOUBLE_EQ(report.avg_steps, 7.0);
    EXPECT_DOUBLE_EQ(report.avg_tool_calls_per_step, 3.0);
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(report.median_steps, 7.0);
    ASSERT_TRUE(report.median_steps_success.has_value());
    EXPECT_DOUBLE_EQ(*report.median_steps_success, 7.0);
    EXPECT_FALSE(report.median_steps_fail.has_value());
}

TEST(EfficiencyMetrics, HundredSyntheticTrajectoriesMatchBruteForce) {
    std::mt19937 rng(123);
    std::vector<EvalItem> items;
    for (int i = 0; i < 100; ++i) {
        EvalItem item;
        item.id = "s" + std::to_string(i);
        item.steps = 1 + static_cast<int>(rng() % 80);
        item.tool_calls = static_cast<long>(rng() % (static_cast<unsigned>(item.steps) * 5 + 1));
        item.answered = rng() % 10 < 7;
        item.judged_correct = item.answered && (rng() % 10 < 6);
        items.push_back(item);
    }
    EfficiencyReport report = efficiency_metrics(items);

    // Independent brute-force recomputation from the raw records.
    double sum_steps = 0;
    long sum_calls = 0;
    int n_success = 0;
    std::vector<double> all, succ, fail;
    for (const EvalItem& it : items) {
        sum_steps += it.steps;
        sum_calls += it.tool_calls;
        all.push_back(it.steps);
        if (it.answered && it.judged_correct) {
            ++n_success;
            succ.push_back(it.steps);
        } else {
            fail.push_back(it.steps);
        }
    }
    auto brute_median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
    };
    EXPECT_DOUBLE_EQ(report.accuracy, n_success / 100.0);
    EXPECT_DOUBLE_EQ(report.avg_steps, sum_steps / 100.0);
    EXPECT_DOUBLE_EQ(report.median_steps, brute_median(all));
    ASSERT_TRUE(report.median_steps_success.has_value());
    ASSERT_TRUE(report.median_steps_fail.has_value());
    EXPECT_DOUBLE_EQ(*report.median_steps_success, brute_median(succ));
    EXPECT_DOUBLE_EQ(*report.median_steps_fail, brute_median(fail));
    EXPECT_DOUBLE_EQ(report.avg_tool_calls_per_step, static_cast<double>(sum_calls) / sum_steps);
    // Partition property: every trajectory lands in exactly one split.
    EXPECT_EQ(succ.size() + fail.size(), items.size());
}

TEST(EfficiencyMetrics, FailuresCappedAtBudgetReportBudgetMedian) {
    std::vector<EvalItem> items;
    for (int i = 0; i < 20; ++i) {
        EvalItem item;
        item.id = "f" + std::to_string(i);
        item.steps = 80;  // terminated exactly at the maximum allowed step
        item.tool_calls = 160;
        item.answered = false;
        items.push_back(item);
    }
    items.push_back({"ok", 9, 27, true, true});
    EfficiencyReport report = efficiency_metrics(items);
    ASSERT_TRUE(report.median_steps_fail.has_value());
    EXPECT_DOUBLE_EQ(*report.median_steps_fail, 80.0);
    EXPECT_DOUBLE_EQ(*report.median_steps_success, 9.0);
}

TEST(EfficiencyMetrics, EmptyInputRejected) {
    EXPECT_THROW(efficiency_metrics({}), std::invalid_argument);
}

TEST(ReportTables, ColumnsAndDeterminism) {
    EvalRow row{"mock", efficiency_metrics({{"t", 6, 12, true, true}})};
    std::string table = render_report_table({row});
    EXPECT_NE(table.find("Steps"), std::string::npos);
    EXPECT_NE(table.find("Avg. Tool Calls"), std::string::npos);
    EXPECT_NE(table.find("Acc."), std::string::npos);
    EXPECT_EQ(table, render_report_table({row}));
    std::string csv = render_report_csv({row});
    EXPECT_NE(csv.find("label,count,steps"), std::string::npos);
    EXPECT_NE(csv.find("mock,1,"), std::string::npos);
}

TEST(DecodeVerdict, RejectsOtherStrings) {
    EXPECT_THROW(decode_verdict("{\"judgement\": \"maybe\"}"), JudgeError);
    EXPECT_NO_THROW(decode_verdict("{\"judgement\": \"Correct\"}"));  // case-folded
}

}  // namespace
}  // namespace smtl
