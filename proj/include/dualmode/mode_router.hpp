#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dualmode/problem_analysis.hpp"
#include "dualmode/types.hpp"

namespace dualmode {

enum class Mode { computational, symbolic, hybrid };

std::string to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view name);

struct ModeEffect {
    double p_correct = 0.0;   // in [0,1]
    double efficiency = 1.0;  // > 0
};

// Per problem-class effectiveness estimates; user-supplied, loaded from JSON
// keyed by class label and mode name.
struct EffectivenessTable {
    std::map<std::string, std::map<Mode, ModeEffect>> entries;

    static EffectivenessTable load(const std::string& path);
};

struct MissingEntryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Priority routing: a StrategyQA hint forces hybrid; otherwise math without
// spatial cues is computational, math with spatial cues hybrid, spatial or
// tracking symbolic, multihop hybrid, default symbolic. A forced mode (for
// misrouting ablations) bypasses everything.
Mode select_mode(const AnalysisVector& analysis, DatasetHint hint = DatasetHint::none,
                 std::optional<Mode> forced = std::nullopt);

// argmax over modes of p_correct * efficiency; ties go to the first of
// computational < symbolic < hybrid. Throws MissingEntryError when the class
// lacks an entry for any mode.
Mode optimal_mode_empirical(const std::string& class_label, const EffectivenessTable& table);

}  // namespace dualmode
