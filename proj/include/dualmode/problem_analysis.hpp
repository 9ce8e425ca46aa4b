#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dualmode/types.hpp"

namespace dualmode {

// The four routing indicators produced by problem analysis.
struct AnalysisVector {
    bool a_math = false;
    bool a_spatial = false;
    bool a_multihop = false;
    bool a_tracking = false;

    bool operator==(const AnalysisVector&) const = default;
};

// Unitless non-negative weights for the three complexity scores. The defaults
// are all 1.0 so the scores read as plain counts.
struct CoefficientSet {
    double alpha = 1.0, beta = 1.0, gamma = 1.0;    // computational
    double delta = 1.0, epsilon = 1.0, zeta = 1.0;  // state
    double eta = 1.0, theta = 1.0, iota = 1.0;      // logical

    bool valid() const;
};

struct ComplexityScores {
    double phi_comp = 0.0;
    double phi_state = 0.0;
    double phi_logic = 0.0;
    int n_ops = 0;
    int n_nums = 0;
    int i_math = 0;
    int m_entities = 0;
    int k_transitions = 0;
    int i_spatial = 0;
    int d_chain = 0;
    int n_facts = 0;
    int i_causal = 0;
};

// Keyword lexicons driving the indicators. Defaults are compiled in;
// overridable through the CLI config.
struct AnalyzerLexicons {
    std::vector<std::string> math_words;
    std::vector<std::string> spatial_words;
    std::vector<std::string> multihop_words;
    std::vector<std::string> movement_words;
    std::vector<std::string> causal_words;
    std::vector<std::string> entity_stop_words;

    static const AnalyzerLexicons& defaults();
};

// Distinct capitalized tokens (length >= 2) that are not stop words.
std::set<std::string> extract_entities(std::string_view txt,
                                       const AnalyzerLexicons& lex = AnalyzerLexicons::defaults());

// True iff the lowercased text contains any movement verb.
bool contains_movement(std::string_view txt,
                       const AnalyzerLexicons& lex = AnalyzerLexicons::defaults());

// Indicator extraction over lowercase(context + " " + question). Entities are
// read from the context with its original capitalization.
AnalysisVector analyze(const ProblemInstance& problem,
                       const AnalyzerLexicons& lex = AnalyzerLexicons::defaults());

// Count-based diagnostics: phi_comp = alpha*n_ops + beta*n_nums + gamma*i_math
// and the analogous state/logic forms. Throws std::invalid_argument on a
// negative coefficient.
ComplexityScores complexity_scores(const ProblemInstance& problem, const CoefficientSet& coeffs,
                                   const AnalyzerLexicons& lex = AnalyzerLexicons::defaults());

// Non-overlapping matches of "<digits> <op>" where op is +-*/ or
// plus/minus/times. Exposed for the diagnostics output.
int count_arithmetic_ops(std::string_view lowered);
int count_number_literals(std::string_view s);

}  // namespace dualmode
