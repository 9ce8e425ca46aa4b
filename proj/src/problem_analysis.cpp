#include "dualmode/problem_analysis.hpp"

#include <cctype>
#include <stdexcept>

#include "dualmode/text.hpp"

namespace dualmode {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool any_word(std::string_view lowered, const std::vector<std::string>& words) {
    for (const auto& w : words)
        if (text::contains_word(lowered, w)) return true;
    return false;
}

int total_word_count(std::string_view lowered, const std::vector<std::string>& words) {
    int n = 0;
    for (const auto& w : words) n += text::count_word(lowered, w);
    return n;
}

std::string combined_text(const ProblemInstance& p) {
    if (p.context.empty()) return text::lower(p.question);
    return text::lower(p.context + " " + p.question);
}

}  // namespace

bool CoefficientSet::valid() const {
    return alpha >= 0 && beta >= 0 && gamma >= 0 && delta >= 0 && epsilon >= 0 && zeta >= 0 &&
           eta >= 0 && theta >= 0 && iota >= 0;
}

const AnalyzerLexicons& AnalyzerLexicons::defaults() {
    static const AnalyzerLexicons lex = {
        /*math_words=*/{"calculate", "total", "sum", "how many", "cost", "price", "bought", "sold"},
        /*spatial_words=*/{"where", "moved", "picked up", "dropped", "location", "travelled"},
        /*multihop_words=*/{"if", "therefore", "because", "implies", "which means"},
        /*movement_words=*/{"went", "goes", "walked", "ran", "moved", "travelled", "traveled",
                            "left", "arrived", "entered", "journeyed", "took", "carried",
                            "brought"},
        /*causal_words=*/{"because", "therefore", "implies", "which means"},
        /*entity_stop_words=*/{"the", "a", "an", "if", "how", "what", "where", "when"},
    };
    return lex;
}

int count_arithmetic_ops(std::string_view s) {
    // digits at a word boundary, optional whitespace, then an operator symbol
    // or operator word (prefix match, mirroring \b(\d+)\s*([+\-*/]|plus|minus|times))
    int count = 0;
    size_t i = 0;
    const size_t n = s.size();
    while (i < n) {
        if (!is_digit(s[i]) || (i > 0 && text::is_word_char(s[i - 1]))) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < n && is_digit(s[j])) ++j;
        size_t k = j;
        while (k < n && is_space(s[k])) ++k;
        bool matched = false;
        if (k < n && (s[k] == '+' || s[k] == '-' || s[k] == '*' || s[k] == '/')) {
            matched = true;
            ++k;
        } else {
            for (std::string_view word : {"plus", "minus", "times"}) {
                if (s.substr(k, word.size()) == word) {
                    matched = true;
                    k += word.size();
                    break;
                }
            }
        }
        if (matched) {
            ++count;
            i = k;
        } else {
            i = j;
        }
    }
    return count;
}

int count_number_literals(std::string_view s) {
    int count = 0;
    size_t i = 0;
    const size_t n = s.size();
    while (i < n) {
        if (!is_digit(s[i])) {
            ++i;
            continue;
        }
        while (i < n && is_digit(s[i])) ++i;
        if (i < n && s[i] == '.' && i + 1 < n && is_digit(s[i + 1])) {
            ++i;
            while (i < n && is_digit(s[i])) ++i;
        }
        ++count;
    }
    return count;
}

std::set<std::string> extract_entities(std::string_view txt, const AnalyzerLexicons& lex) {
    std::set<std::string> entities;
    for (const std::string& tok : text::tokens(txt)) {
        if (tok.size() < 2) continue;
        if (std::isupper(static_cast<unsigned char>(tok[0])) == 0) continue;
        const std::string lowered = text::lower(tok);
        bool stop = false;
        for (const auto& w : lex.entity_stop_words) {
            if (lowered == w) {
                stop = true;
                break;
            }
        }
        if (!stop) entities.insert(tok);
    }
    return entities;
}

bool contains_movement(std::string_view txt, const AnalyzerLexicons& lex) {
    return any_word(text::lower(txt), lex.movement_words);
}

AnalysisVector analyze(const ProblemInstance& problem, const AnalyzerLexicons& lex) {
    const std::string lowered = combined_text(problem);
    AnalysisVector v;
    v.a_math = count_arithmetic_ops(lowered) > 0 || any_word(lowered, lex.math_words);
    v.a_spatial = any_word(lowered, lex.spatial_words);
    v.a_multihop = total_word_count(lowered, lex.multihop_words) >= 2;
    const auto entities = extract_entities(problem.context, lex);
    v.a_tracking = entities.size() > 2 && (v.a_spatial || contains_movement(lowered, lex));
    return v;
}

ComplexityScores complexity_scores(const ProblemInstance& problem, const CoefficientSet& coeffs,
                                   const AnalyzerLexicons& lex) {
    if (!coeffs.valid()) throw std::invalid_argument("complexity_scores: negative coefficient");
    const std::string lowered = combined_text(problem);
    ComplexityScores s;
    s.n_ops = count_arithmetic_ops(lowered);
    s.n_nums = count_number_literals(lowered);
    s.i_math = any_word(lowered, lex.math_words) ? 1 : 0;
    s.m_entities = static_cast<int>(extract_entities(problem.context, lex).size());
    s.k_transitions = total_word_count(lowered, lex.movement_words);
    s.i_spatial = any_word(lowered, lex.spatial_words) ? 1 : 0;
    s.d_chain = total_word_count(lowered, lex.multihop_words);
    s.n_facts = static_cast<int>(text::split_sentences(problem.context).size());
    s.i_causal = any_word(lowered, lex.causal_words) ? 1 : 0;
    s.phi_comp = coeffs.alpha * s.n_ops + coeffs.beta * s.n_nums + coeffs.gamma * s.i_math;
    s.phi_state =
        coeffs.delta * s.m_entities + coeffs.epsilon * s.k_transitions + coeffs.zeta * s.i_spatial;
    s.phi_logic = coeffs.eta * s.d_chain + coeffs.theta * s.n_facts + coeffs.iota * s.i_causal;
    return s;
}

}  // namespace dualmode
