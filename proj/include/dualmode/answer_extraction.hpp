#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "dualmode/types.hpp"

namespace dualmode {

// Alias map applied during string-answer normalization ("bath" -> "bathroom").
// Canonical forms must map to themselves or be absent, so one application of
// the table is a fixed point.
struct AliasTable {
    std::map<std::string, std::string> entries;

    static AliasTable defaults();
    // Two-column whitespace-separated text file; '#' starts a comment.
    static AliasTable load(const std::string& path);

    std::string apply(const std::string& s) const;
};

// Bottom-up scan for the last "FINAL_ANSWER:" line (case-insensitive, leading
// whitespace allowed). Returns the trimmed payload; lines with an empty
// payload are skipped, so the result is never an empty string.
std::optional<std::string> extract_final(std::string_view completion);

// Last numeric literal in the text: optional sign, digits with optional
// thousands commas, optional decimal part. Commas are stripped from the
// returned string.
std::optional<std::string> extract_last_number(std::string_view s);

// Lenient full-string numeric parse used for answer matching: trims, drops a
// leading '$', thousands commas and trailing sentence punctuation.
std::optional<double> parse_number(std::string_view s);

// Integral values render without a decimal point; everything else with up to
// 10 significant digits (matching tolerates 1e-9, so nothing is lost).
std::string render_number(double v);

std::string normalize_answer(std::string_view raw, AnswerKind kind, const AliasTable& aliases);

// The exact-match rules: numeric |pred-gold| < 1e-9 (strict), yes/no by
// normalized first token, strings by alias-normalized equality. Unparseable
// numeric predictions compare false, never throw.
bool match_answers(std::string_view pred, std::string_view gold, AnswerKind kind,
                   const AliasTable& aliases);

}  // namespace dualmode
