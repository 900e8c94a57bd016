#include "smtl/prompts.hpp"

#include <sstream>

namespace smtl::prompts {

namespace {

const char* kSearchPrompt = R"(You are an expert assistant that solves complex search tasks through structured tool usage and explicit goal management. You must follow a step-by-step execution process that combines planning, parallel execution, verification, and concise final answering.

Core objective:
- Decompose the task into clear, verifiable goals.
- Advance multiple goals in parallel whenever possible.
- Execute each goal through sequential fallback paths.
- Use tools purposefully and efficiently to gather and verify evidence.
- Produce a final answer only after all goals are explicitly resolved.

Functional interfaces:

1. <plan> — Decompose the task into parallelizable goals and execution paths. Use 1-5 goals; each goal has 1-5 sequential fallback paths; each path must specify a clear success criterion. Used only at the first step. Format the body as:
Goal 1: <description>
Path 1.1: <objective> => <success criterion>
Path 1.2: <objective> => <success criterion>

2. <plan_refine> — Summarize progress and decide next actions. Include: a plan recap; the execution status of each goal (Completed / In Progress / Blocked); analysis of attempted paths; the next sub-paths to execute in parallel. Use these directives where applicable, one per line:
Recap: <progress summary>
Completed: <path ids, comma separated>
Status <id>: <status>
Add Path <goal id>: <objective> => <success criterion>
Add Goal: <description> => <success criterion>
Invoked periodically after multiple actions.

3. <tool_call> — Execute a tool. Each tool_call block contains one JSON object: {"name": "web_search", "arguments": {"query": "..."}} or {"name": "crawl_page", "arguments": {"url": "...", "query": "..."}}. Use web_search for broad discovery and crawl_page for deep verification guided by an information goal. Issue multiple tool_call blocks in one step for distinct subtasks. Prioritize authoritative sources; always verify promising URLs via crawl_page.

4. <answer> — Output the final confirmed answer, only after all goals are resolved. Consolidate evidence across all goals; match the task language; keep the answer concise and factual.

Critical execution rules:
- Advance all goals in parallel whenever possible.
- Never terminate early without verification.
- Do not skip promising sources during verification.
)";

const char* kResearchPrompt = R"(You are an expert assistant who solves tasks through structured tool calls, following a step-by-step process. Each step involves analyzing needs, selecting tools, and executing calls to achieve the task.

You can only use the following functions: subtask_list, subtask, analysis, plan, tool_call, tool_response, subtask_answer, answer.

1. subtask_list: At the very beginning, break the complex question into a list of clear, independent subtasks. Start with <subtask_list> and end with </subtask_list>. One subtask per line.
2. subtask: Marks the beginning of executing one specific subtask from the subtask_list. Start with <subtask> and end with </subtask>.
3. analysis: Within a subtask, before using plan or tool_call, provide reasoning, arguments, and next steps. Start with <analysis> and end with </analysis>.
4. plan: For the current subtask, break it down into fine-grained steps to be executed using tools. Start with <plan> and end with </plan>.
5. tool_call: Execute tools to gather information. Each tool_call block contains one JSON object: {"name": "web_search", "arguments": {"query": "..."}} or {"name": "crawl_page", "arguments": {"url": "...", "query": "..."}}.
6. tool_response: The response returned after a tool is executed. You never write this tag yourself.
7. subtask_answer: After completing a subtask, provide an intermediate, definitive answer. Start with <subtask_answer> and end with </subtask_answer>.
8. answer: After all subtasks are completed, synthesize all subtask_answers into a final comprehensive answer.

Tool usage guide:
1. web_search: if retrieved information is irrelevant, re-search with new queries until sufficient relevant information is obtained and you are highly confident in the final answer.
2. crawl_page: use crawl_page to obtain detailed information from URLs, and crawl additional URLs when needed.
3. Deeper search: use web_search to discover URLs, then crawl_page to verify and extract details. Repeat web_search/crawl_page multiple times if deeper hints emerge.

Workflow:
1. Start with <subtask_list>. Then for each subtask, follow an analysis -> plan -> tool_call -> tool_response loop until the subtask is answerable, and output <subtask_answer>. After all subtasks, produce <answer>.
2. The special tags <subtask_list>, <subtask>, <analysis>, <plan>, <tool_call>, <tool_response>, <subtask_answer>, <answer> must not appear in free text.
3. The final answer must be a detailed, well-structured report with an introduction, body paragraphs, a conclusion, and a references section. Support every key information point with numbered square-bracket citations, e.g. [1], placed immediately after the supported claim. End with a section titled References: a numbered list, one entry per citation, each formatted as "[Number]. URL - Webpage Title."
)";

}  // namespace

std::string system_prompt(TaskMode mode, int per_step_call_max) {
    std::ostringstream out;
    out << (mode == TaskMode::Search ? kSearchPrompt : kResearchPrompt);
    out << "\nUse no more than " << per_step_call_max << " tool calls per step.\n";
    out << "Do not produce an answer unless you are certain. Final answers should avoid unnecessary explanation.\n";
    return out.str();
}

std::string refine_instruction(TaskMode mode) {
    if (mode == TaskMode::Search) {
        return "Pause and refine the plan now. Respond with a single <plan_refine> block: recap "
               "progress, give each goal's status (Completed / In Progress / Blocked), mark "
               "completed paths, and set the next sub-paths to execute in parallel.";
    }
    return "Pause and reassess now. Respond with an <analysis> block reviewing progress across "
           "subtasks and a <plan> block for the remaining work.";
}

std::string forced_refine_instruction(TaskMode mode) {
    std::string base =
        "The context budget is exhausted. All messages before this refinement will be dropped; "
        "only the system prompt, the task, and your refinement will remain. ";
    if (mode == TaskMode::Search) {
        return base +
               "Respond with a single <plan_refine> block that restates the plan, every goal's "
               "status, all confirmed findings with their sources, and the next sub-paths to "
               "execute. Include every fact you still need.";
    }
    return base +
           "Respond with a single <plan> block that restates the remaining subtasks, all "
           "confirmed findings with their sources, and the next steps. Include every fact you "
           "still need.";
}

std::string answer_now_instruction(TaskMode mode) {
    if (mode == TaskMode::Search) {
        return "Every goal in the plan is resolved or blocked. Consolidate the evidence and "
               "produce your final <answer> now.";
    }
    return "Every subtask is resolved. Synthesize the subtask answers into the final <answer> "
           "report now, with in-text citations and a References section.";
}

std::string summarize_page(const std::string& url, const std::string& content,
                           const std::string& goal) {
    std::ostringstream out;
    out << "Please process the provided webpage content and extract information that is directly "
           "relevant to the specified information goal.\n\n";
    out << "Webpage URL:\n" << url << "\n\n";
    out << "Webpage Content:\n" << content << "\n\n";
    out << "Information Goal:\n" << goal << "\n\n";
    out << "Task guidelines:\n"
           "1. Goal-Oriented Content Scanning: identify the specific sections, passages, or data "
           "within the webpage that are directly relevant to the given information goal. Ignore "
           "unrelated or tangential content.\n"
           "2. Evidence Extraction: extract the most relevant information that supports the goal. "
           "Do not omit important details. Preserve the original wording and context as much as "
           "possible, and include extended excerpts when necessary.\n"
           "3. Structured Summarization: organize the extracted information into a coherent and "
           "concise summary with a clear logical structure, prioritizing relevance, factual "
           "accuracy, and completeness with respect to the goal.\n\n";
    out << "The output must be a valid JSON object with the following fields:\n"
           "{\n"
           "  \"rationale\": \"Explanation of why the extracted content is relevant to the information goal\",\n"
           "  \"evidence\": \"Verbatim excerpts or minimally edited passages from the webpage that directly support the goal\",\n"
           "  \"summary\": \"A concise, goal-focused summary synthesized from the extracted evidence\"\n"
           "}\n\n"
           "The output must be fully JSON-parsable. All special characters must be properly "
           "escaped. Do not include any content outside the specified JSON fields.\n";
    return out.str();
}

std::string judge_answer(const std::string& question, const std::string& labeled,
                         const std::string& predicted) {
    std::ostringstream out;
    out << "Please determine whether the Predicted Answer is semantically equivalent to the "
           "Labeled Answer, given the Question.\n\n";
    out << "Question: " << question << "\n";
    out << "Labeled Answer: " << labeled << "\n";
    out << "Predicted Answer: " << predicted << "\n\n";
    out << "Evaluation process:\n"
           "1. Judge solely on whether the meaning conveyed by the Predicted Answer aligns with "
           "the meaning of the Labeled Answer.\n"
           "2. Allowable variations: differences in capitalization, punctuation, grammar, word "
           "order, phrasing style, measurement units, or non-essential descriptive phrases are "
           "acceptable if they do not alter the core meaning. Name-format variations referring "
           "to the same entity are acceptable. Minor numerical margins are permissible when "
           "appropriate for the context. Synonyms conveying the same meaning are acceptable.\n"
           "3. Judge \"correct\" only if the Predicted Answer directly addresses the Question, "
           "its core meaning is semantically equivalent to the Labeled Answer, and it does not "
           "contradict any explicit requirement in the Question or Labeled Answer. If the "
           "Predicted Answer contains the Labeled Answer within it, it should be considered "
           "correct.\n"
           "4. Judge \"incorrect\" if the Predicted Answer misses essential information, adds "
           "contradictory or incompatible information, is ambiguous, indirect, or evasive, or is "
           "semantically different in a meaningful way.\n\n";
    out << "Output format:\n"
           "{\n"
           "  \"rationale\": \"your rationale for the judgement\",\n"
           "  \"judgement\": \"correct or incorrect\"\n"
           "}\n";
    return out.str();
}

std::string judge_report(const std::string& task, const std::string& article_1,
                         const std::string& article_2, const std::vector<std::string>& criteria) {
    std::ostringstream out;
    out << "You are a strict, meticulous, and objective research article evaluation expert. You "
           "excel at using specific assessment criteria to deeply compare two articles on the "
           "same task, providing precise scores and clear justifications.\n\n";
    out << "There is a deep research task, and you need to evaluate two research articles "
           "written for this task. The evaluation is conducted across four dimensions: "
           "Comprehensiveness, Insight, Instruction Following, and Readability.\n\n";
    out << "Research Task:\n" << task << "\n\n";
    out << "Article 1:\n" << article_1 << "\n\n";
    out << "Article 2:\n" << article_2 << "\n\n";
    out << "Evaluation criteria list:\n";
    for (size_t i = 0; i < criteria.size(); ++i) {
        out << (i + 1) << ". " << criteria[i] << "\n";
    }
    out << "\nYour task: strictly evaluate and compare article_1 and article_2 based on each "
           "criterion in the criteria list. Analyze each criterion, compare the performance of "
           "the two articles, and assign each article a score from 0 to 10 per criterion.\n\n";
    out << "Scoring rules:\n"
           "- 0-2: very poor performance; almost completely fails to meet the criterion.\n"
           "- 2-4: poor performance; minimally meets the criterion with major deficiencies.\n"
           "- 4-6: average performance; basically meets the criterion.\n"
           "- 6-8: good performance; largely meets the criterion with notable strengths.\n"
           "- 8-10: excellent performance; fully meets or exceeds the criterion.\n\n";
    out << "The output must strictly follow this JSON format, with all four dimension keys "
           "(comprehensiveness, insight, instruction_following, readability) present:\n"
           "{\n"
           "    \"comprehensiveness\": [\n"
           "        {\n"
           "            \"criterion\": \"Text content of the criterion\",\n"
           "            \"analysis\": \"Comparative analysis\",\n"
           "            \"article_1_score\": 0,\n"
           "            \"article_2_score\": 0\n"
           "        }\n"
           "    ],\n"
           "    \"insight\": [...],\n"
           "    \"instruction_following\": [...],\n"
           "    \"readability\": [...]\n"
           "}\n"
           "Do not include any introduction, summary, or unrelated content. Ensure the output "
           "JSON is fully parsable and that all characters that may cause JSON parsing errors "
           "are properly escaped.\n";
    return out.str();
}

}  // namespace smtl::prompts
