#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace dualmode {

enum class AnswerKind { numeric, yes_no, text };

enum class DatasetHint { none, gsm8k, strategyqa, babi };

// One benchmark problem. `question` must be non-empty after trimming;
// `answer_kind` decides which comparator match_answers() applies.
struct ProblemInstance {
    std::string id;
    std::string context;  // may be empty
    std::string question;
    std::string gold_answer;
    AnswerKind answer_kind = AnswerKind::text;
    DatasetHint hint = DatasetHint::none;
};

std::string to_string(AnswerKind kind);
std::optional<AnswerKind> answer_kind_from_string(std::string_view name);

std::string to_string(DatasetHint hint);
std::optional<DatasetHint> hint_from_string(std::string_view name);

}  // namespace dualmode
