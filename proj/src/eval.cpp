#include "smtl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smtl/prompts.hpp"
#include "smtl/util.hpp"

namespace smtl {

using nlohmann::json;

namespace {

json parse_json_lenient(const std::string& raw, const char* what) {
    std::string text = trim(raw);
    try {
        return json::parse(text);
    } catch (const json::exception&) {
    }
    // One repair pass: code fences, then the first balanced object.
    size_t fence = text.find("```");
    if (fence != std::string::npos) {
        size_t body_start = text.find('\n', fence);
        size_t fence_end = body_start == std::string::npos ? std::string::npos
                                                           : text.find("```", body_start);
        if (fence_end != std::string::npos) {
            text = text.substr(body_start + 1, fence_end - body_start - 1);
        }
    }
    size_t start = text.find('{');
    if (start != std::string::npos) {
        int depth = 0;
        bool in_string = false, escape = false;
        for (size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (escape) { escape = false; continue; }
            if (c == '\\') { escape = true; continue; }
            if (c == '"') in_string = !in_string;
            if (in_string) continue;
            if (c == '{') ++depth;
            if (c == '}' && --depth == 0) {
                try {
                    return json::parse(text.substr(start, i - start + 1));
                } catch (const json::exception&) {
                    break;
                }
            }
        }
    }
    throw JudgeError(JudgeError::Kind::DecodeError,
                     std::string(what) + " is not decodable JSON");
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::string fmt(double v, const char* spec = "%.1f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

double RubricScores::mean_article_1(const std::string& dimension) const {
    auto it = dimensions.find(dimension);
    if (it == dimensions.end() || it->second.empty()) return 0.0;
    double sum = 0.0;
    for (const CriterionScore& c : it->second) sum += c.article_1_score;
    return sum / static_cast<double>(it->second.size());
}

double RubricScores::mean_article_2(const std::string& dimension) const {
    auto it = dimensions.find(dimension);
    if (it == dimensions.end() || it->second.empty()) return 0.0;
    double sum = 0.0;
    for (const CriterionScore& c : it->second) sum += c.article_2_score;
    return sum / static_cast<double>(it->second.size());
}

Verdict decode_verdict(const std::string& raw) {
    json obj = parse_json_lenient(raw, "judge verdict");
    if (!obj.contains("judgement") || !obj["judgement"].is_string()) {
        throw JudgeError(JudgeError::Kind::DecodeError, "verdict has no \"judgement\" field");
    }
    Verdict verdict;
    verdict.judgement = to_lower(trim(obj["judgement"].get<std::string>()));
    verdict.rationale = obj.value("rationale", "");
    if (verdict.judgement != "correct" && verdict.judgement != "incorrect") {
        throw JudgeError(JudgeError::Kind::DecodeError,
                         "judgement must be \"correct\" or \"incorrect\", got \"" +
                             verdict.judgement + "\"");
    }
    return verdict;
}

RubricScores decode_rubric_scores(const std::string& raw) {
    json obj = parse_json_lenient(raw, "rubric scores");
    RubricScores scores;
    for (const std::string& dim : rubric_dimensions()) {
        if (!obj.contains(dim) || !obj[dim].is_array()) {
            throw JudgeError(JudgeError::Kind::DecodeError,
                             "rubric output is missing dimension \"" + dim + "\"");
        }
        std::vector<CriterionScore> entries;
        for (const json& item : obj[dim]) {
            CriterionScore entry;
            entry.criterion = item.value("criterion", "");
            entry.analysis = item.value("analysis", "");
            if (!item.contains("article_1_score") || !item.contains("article_2_score")) {
                throw JudgeError(JudgeError::Kind::DecodeError,
                                 "criterion in \"" + dim + "\" lacks scores");
            }
            entry.article_1_score = item["article_1_score"].get<double>();
            entry.article_2_score = item["article_2_score"].get<double>();
            for (double s : {entry.article_1_score, entry.article_2_score}) {
                if (s < 0.0 || s > 10.0 || !std::isfinite(s)) {
                    throw JudgeError(JudgeError::Kind::ScoreOutOfRange,
                                     "score " + fmt(s, "%.2f") + " in \"" + dim +
                                         "\" is outside [0, 10]");
                }
            }
            entries.push_back(std::move(entry));
        }
        if (entries.empty()) {
            throw JudgeError(JudgeError::Kind::DecodeError,
                             "dimension \"" + dim + "\" has no criteria");
        }
        scores.dimensions[dim] = std::move(entries);
    }
    return scores;
}

Verdict judge_answer(const std::string& question, const std::string& labeled,
                     const std::string& predicted, ModelBackend& judge,
                     const JudgeConfig& config) {
    ChatRequest req;
    req.model_id = config.model_id;
    req.temperature = config.temperature;
    req.max_tokens = config.max_output_tokens;
    req.messages.push_back({"user", prompts::judge_answer(question, labeled, predicted)});

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatResponse resp = judge.complete(req);
        try {
            return decode_verdict(resp.text);
        } catch (const JudgeError& e) {
            last_error = e.what();
        }
    }
    throw JudgeError(JudgeError::Kind::DecodeError,
                     "verdict undecodable after retry: " + last_error);
}

RubricScores judge_report(const std::string& task, const std::string& article_1,
                          const std::string& article_2, const std::vector<std::string>& criteria,
                          ModelBackend& judge, const JudgeConfig& config) {
    if (criteria.empty()) {
        throw std::invalid_argument("judge_report requires a nonempty criteria list");
    }
    ChatRequest req;
    req.model_id = config.model_id;
    req.temperature = config.temperature;
    req.max_tokens = config.max_output_tokens;
    req.messages.push_back({"user", prompts::judge_report(task, article_1, article_2, criteria)});
    ChatResponse resp = judge.complete(req);
    return decode_rubric_scores(resp.text);
}

EvalItem make_eval_item(const Trajectory& traj, bool judged_correct) {
    EvalItem item;
    item.id = traj.task_id;
    item.steps = traj.metrics.steps;
    item.tool_calls = traj.metrics.total_tool_calls;
    item.answered = traj.termination == Termination::Answered;
    item.judged_correct = item.answered && judged_correct;
    return item;
}

EfficiencyReport efficiency_metrics(const std::vector<EvalItem>& items) {
    if (items.empty()) {
        throw std::invalid_argument("efficiency_metrics requires at least one trajectory");
    }
    EfficiencyReport report;
    report.count = static_cast<int>(items.size());

    long total_steps = 0;
    long total_calls = 0;
    long successes = 0;
    std::vector<double> all_steps, success_steps, fail_steps;
    for (const EvalItem& item : items) {
        total_steps += item.steps;
        total_calls += item.tool_calls;
        all_steps.push_back(item.steps);
        if (item.success()) {
            ++successes;
            success_steps.push_back(item.steps);
        } else {
            fail_steps.push_back(item.steps);
        }
    }
    report.accuracy = static_cast<double>(successes) / static_cast<double>(items.size());
    report.avg_steps = static_cast<double>(total_steps) / static_cast<double>(items.size());
    report.median_steps = median_of(all_steps);
    if (!success_steps.empty()) report.median_steps_success = median_of(success_steps);
    if (!fail_steps.empty()) report.median_steps_fail = median_of(fail_steps);
    report.avg_tool_calls_per_step =
        total_steps == 0 ? 0.0 : static_cast<double>(total_calls) / static_cast<double>(total_steps);
    return report;
}

std::string render_report_table(const std::vector<EvalRow>& rows) {
    std::ostringstream out;
    size_t label_width = 5;
    for (const EvalRow& r : rows) label_width = std::max(label_width, r.label.size());

    auto pad = [&](const std::string& s, size_t w) {
        std::string p = s;
        while (p.size() < w) p += ' ';
        return p;
    };
    out << pad("Model", label_width) << "  " << pad("Steps", 8) << pad("Avg. Tool Calls", 17)
        << "Acc.\n";
    for (const EvalRow& r : rows) {
        out << pad(r.label, label_width) << "  " << pad(fmt(r.report.avg_steps), 8)
            << pad(fmt(r.report.avg_tool_calls_per_step), 17) << fmt(r.report.accuracy * 100.0)
            << "\n";
    }
    out << "\nMedian steps (all / success / fail):\n";
    for (const EvalRow& r : rows) {
        out << pad(r.label, label_width) << "  " << fmt(r.report.median_steps) << " / "
            << (r.report.median_steps_success ? fmt(*r.report.median_steps_success) : "-") << " / "
            << (r.report.median_steps_fail ? fmt(*r.report.median_steps_fail) : "-") << "\n";
    }
    return out.str();
}

std::string render_report_csv(const std::vector<EvalRow>& rows) {
    std::ostringstream out;
    out << "label,count,steps,avg_tool_calls,accuracy,median_steps,median_steps_success,"
           "median_steps_fail\n";
    for (const EvalRow& r : rows) {
        out << r.label << "," << r.report.count << "," << fmt(r.report.avg_steps, "%.4f") << ","
            << fmt(r.report.avg_tool_calls_per_step, "%.4f") << ","
            << fmt(r.report.accuracy, "%.4f") << "," << fmt(r.report.median_steps, "%.4f") << ","
            << (r.report.median_steps_success ? fmt(*r.report.median_steps_success, "%.4f") : "")
            << ","
            << (r.report.median_steps_fail ? fmt(*r.report.median_steps_fail, "%.4f") : "") << "\n";
    }
    return out.str();
}

}  // namespace smtl
