#include "dualmode/prompt_templates.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dualmode {

namespace {

constexpr std::string_view kComputational =
    "Solve step by step. Show all calculations.\n"
    "Problem: {context}\n"
    "Question: {question}\n"
    "\n"
    "Working:\n"
    "\n"
    "Return exactly one line at the end:\n"
    "FINAL_ANSWER: <number>";

constexpr std::string_view kHybrid =
    "Analyze the context and question systematically.\n"
    "1. Extract relevant facts\n"
    "2. Identify relationships\n"
    "3. Apply logical reasoning\n"
    "4. Reach a conclusion\n"
    "\n"
    "{context_block}Question: {question}\n"
    "\n"
    "Analysis:\n"
    "\n"
    "FINAL_ANSWER: <yes_or_no>";

constexpr std::string_view kState =
    "Current state: {state}\n"
    "Event: {event}\n"
    "Return ONLY the updated state as a JSON object with keys \"locations\" and \"objects\".";

constexpr std::string_view kRepair =
    "The following was not valid JSON. Return ONLY a corrected JSON object:\n{completion}";

constexpr std::string_view kAnswer =
    "State: {state}\n"
    "Question: {question}\n"
    "Return exactly one line: FINAL_ANSWER: <answer>";

constexpr std::string_view kStateText =
    "Current state: {state}\n"
    "Event: {event}\n"
    "Describe the complete updated state in plain English.";

constexpr std::string_view kStateNone =
    "{context_block}Question: {question}\n"
    "Return exactly one line: FINAL_ANSWER: <answer>";

constexpr std::string_view kDirect = "{context_block}Question: {question}\nAnswer:";

constexpr std::string_view kCot =
    "{context_block}Question: {question}\n"
    "Let's think step by step.\n"
    "Return exactly one line at the end:\n"
    "FINAL_ANSWER: <answer>";

constexpr std::string_view kStructuredCot =
    "{context_block}Question: {question}\n"
    "Answer with explicit enumerated steps:\n"
    "Step 1:\n"
    "Step 2:\n"
    "Step 3:\n"
    "Return exactly one line at the end:\n"
    "FINAL_ANSWER: <answer>";

}  // namespace

const PromptTemplates& PromptTemplates::defaults() {
    static const PromptTemplates t = {
        std::string(kComputational),
        std::string(kHybrid),
        "Context: {context}\n",
        std::string(kState),
        std::string(kRepair),
        std::string(kAnswer),
        std::string(kStateText),
        std::string(kStateNone),
        std::string(kDirect),
        std::string(kCot),
        std::string(kStructuredCot),
        "{context}\n",
    };
    return t;
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
    PromptTemplates t = defaults();
    auto maybe_load = [&](const char* name, std::string& field) {
        const std::filesystem::path file = std::filesystem::path(dir) / (std::string(name) + ".txt");
        std::ifstream in(file);
        if (!in) return;
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string content = buf.str();
        // editors append a trailing newline; templates are defined without one
        if (!content.empty() && content.back() == '\n') content.pop_back();
        field = std::move(content);
    };
    maybe_load("computational", t.computational);
    maybe_load("hybrid", t.hybrid);
    maybe_load("hybrid_context", t.hybrid_context);
    maybe_load("state", t.state);
    maybe_load("repair", t.repair);
    maybe_load("answer", t.answer);
    maybe_load("state_text", t.state_text);
    maybe_load("state_none", t.state_none);
    maybe_load("direct", t.direct);
    maybe_load("cot", t.cot);
    maybe_load("structured_cot", t.structured_cot);
    maybe_load("plain_context", t.plain_context);
    return t;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size() + 64);
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const std::string name(tmpl.substr(i + 1, close - i - 1));
                auto it = vars.find(name);
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

}  // namespace dualmode
