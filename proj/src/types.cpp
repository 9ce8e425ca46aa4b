#include "dualmode/types.hpp"

namespace dualmode {

std::string to_string(AnswerKind kind) {
    switch (kind) {
        case AnswerKind::numeric: return "numeric";
        case AnswerKind::yes_no: return "yes_no";
        case AnswerKind::text: return "string";
    }
    return "?";
}

std::optional<AnswerKind> answer_kind_from_string(std::string_view name) {
    if (name == "numeric") return AnswerKind::numeric;
    if (name == "yes_no") return AnswerKind::yes_no;
    if (name == "string" || name == "text") return AnswerKind::text;
    return std::nullopt;
}

std::string to_string(DatasetHint hint) {
    switch (hint) {
        case DatasetHint::none: return "none";
        case DatasetHint::gsm8k: return "gsm8k";
        case DatasetHint::strategyqa: return "strategyqa";
        case DatasetHint::babi: return "babi";
    }
    return "?";
}

std::optional<DatasetHint> hint_from_string(std::string_view name) {
    if (name == "none" || name.empty()) return DatasetHint::none;
    if (name == "gsm8k" || name == "GSM8K") return DatasetHint::gsm8k;
    if (name == "strategyqa" || name == "StrategyQA") return DatasetHint::strategyqa;
    if (name == "babi" || name == "bAbI") return DatasetHint::babi;
    return std::nullopt;
}

}  // namespace dualmode
