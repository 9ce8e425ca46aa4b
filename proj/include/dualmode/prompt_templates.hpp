#pragma once

#include <map>
#include <string>
#include <string_view>

namespace dualmode {

// Every prompt the system sends, as placeholder templates. Defaults are
// compiled in; any of them can be replaced by dropping a file with the same
// field name (plus ".txt") into a templates directory.
//
// Placeholders: {context} {question} {state} {event} {completion}
// {context_block}. The *_context fields define what {context_block} expands
// to when the problem has a context; it expands to "" otherwise.
struct PromptTemplates {
    std::string computational;   // {context} {question}
    std::string hybrid;          // {context_block} {question}
    std::string hybrid_context;  // "Context: {context}\n"
    std::string state;           // {state} {event}
    std::string repair;          // {completion}
    std::string answer;          // {state} {question}
    std::string state_text;      // {state} {event}  (free-prose state ablation)
    std::string state_none;      // {context_block} {question}  (no-state ablation)
    std::string direct;          // {context_block} {question}
    std::string cot;             // {context_block} {question}
    std::string structured_cot;  // {context_block} {question}
    std::string plain_context;   // "{context}\n"

    static const PromptTemplates& defaults();
    // Defaults overlaid with any <field>.txt files found under dir.
    static PromptTemplates load_dir(const std::string& dir);
};

// Single-pass "{name}" substitution; replaced values are never re-scanned, so
// braces inside values (e.g. serialized JSON state) are inert.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

}  // namespace dualmode
