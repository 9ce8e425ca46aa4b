#include "dualmode/mode_router.hpp"

#include <array>
#include <fstream>

#include <json.hpp>

namespace dualmode {

std::string to_string(Mode m) {
    switch (m) {
        case Mode::computational: return "computational";
        case Mode::symbolic: return "symbolic";
        case Mode::hybrid: return "hybrid";
    }
    return "?";
}

std::optional<Mode> mode_from_string(std::string_view name) {
    if (name == "computational") return Mode::computational;
    if (name == "symbolic") return Mode::symbolic;
    if (name == "hybrid") return Mode::hybrid;
    return std::nullopt;
}

Mode select_mode(const AnalysisVector& a, DatasetHint hint, std::optional<Mode> forced) {
    if (forced) return *forced;
    if (hint == DatasetHint::strategyqa) return Mode::hybrid;  // yes/no questions
    if (a.a_math) return a.a_spatial ? Mode::hybrid : Mode::computational;
    if (a.a_spatial || a.a_tracking) return Mode::symbolic;
    if (a.a_multihop) return Mode::hybrid;
    return Mode::symbolic;
}

EffectivenessTable EffectivenessTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("effectiveness table: cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("effectiveness table: " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw std::runtime_error("effectiveness table: expected a JSON object");
    EffectivenessTable table;
    for (const auto& [label, modes] : doc.items()) {
        if (!modes.is_object())
            throw std::runtime_error("effectiveness table: class \"" + label +
                                     "\": expected an object of modes");
        for (const auto& [mode_name, cell] : modes.items()) {
            auto mode = mode_from_string(mode_name);
            if (!mode)
                throw std::runtime_error("effectiveness table: class \"" + label +
                                         "\": unknown mode \"" + mode_name + "\"");
            ModeEffect effect;
            effect.p_correct = cell.at("p_correct").get<double>();
            effect.efficiency = cell.value("efficiency", 1.0);
            if (effect.p_correct < 0.0 || effect.p_correct > 1.0)
                throw std::runtime_error("effectiveness table: class \"" + label +
                                         "\": p_correct outside [0,1]");
            if (effect.efficiency <= 0.0)
                throw std::runtime_error("effectiveness table: class \"" + label +
                                         "\": efficiency must be positive");
            table.entries[label][*mode] = effect;
        }
    }
    return table;
}

Mode optimal_mode_empirical(const std::string& class_label, const EffectivenessTable& table) {
    auto cls = table.entries.find(class_label);
    if (cls == table.entries.end())
        throw MissingEntryError("no effectiveness entries for class \"" + class_label + "\"");
    constexpr std::array<Mode, 3> order = {Mode::computational, Mode::symbolic, Mode::hybrid};
    std::optional<Mode> best;
    double best_score = 0.0;
    for (Mode m : order) {
        auto cell = cls->second.find(m);
        if (cell == cls->second.end())
            throw MissingEntryError("class \"" + class_label + "\" lacks an entry for mode " +
                                    to_string(m));
        double score = cell->second.p_correct * cell->second.efficiency;
        if (!best || score > best_score) {
            best = m;
            best_score = score;
        }
    }
    return *best;
}

}  // namespace dualmode
