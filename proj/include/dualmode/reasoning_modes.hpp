#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualmode/model_backend.hpp"
#include "dualmode/prompt_templates.hpp"
#include "dualmode/types.hpp"

namespace dualmode {

// Tracked world: who is where, and what is held by whom / lies where.
// Serializes to exactly two top-level keys, "locations" and "objects",
// with sorted keys so fixtures are stable.
struct WorldState {
    std::map<std::string, std::string> locations;
    std::map<std::string, std::string> objects;

    bool operator==(const WorldState&) const = default;
};

std::string serialize_state(const WorldState& state);

enum class StateParseError { no_json_found, malformed_json, wrong_shape };

struct StateParseResult {
    std::optional<WorldState> state;
    StateParseError error = StateParseError::no_json_found;

    bool ok() const { return state.has_value(); }
};

// Accepts a JSON object with optional "locations"/"objects" string->string
// maps; surrounding prose is tolerated by extracting the first balanced
// {...} block. Missing keys default to empty maps; non-string values are a
// wrong-shape error.
StateParseResult parse_state(std::string_view completion);

// Right-biased union per map: entries from `incoming` overwrite, everything
// else is retained.
WorldState merge_states(WorldState current, const WorldState& incoming);

// One sentence of the story, in order.
struct Event {
    std::string text;
    int index = 0;
};

std::vector<Event> extract_events(std::string_view context);

struct CandidateAnswer {
    std::string raw;
    std::optional<double> numeric_value;  // present iff raw parses as a number

    static CandidateAnswer from_raw(std::string raw);
};

// Median (mean of middles on even counts) when every non-null answer is
// numeric; otherwise majority vote over normalized strings with ties broken
// by earliest first occurrence. Throws std::invalid_argument on an empty
// list.
CandidateAnswer aggregate_answers(const std::vector<CandidateAnswer>& answers);

enum class StateRepr { json, text, none };
std::string to_string(StateRepr r);
std::optional<StateRepr> state_repr_from_string(std::string_view name);

struct ModeOptions {
    std::string model;
    int k = 5;
    double sampling_temperature = 0.7;
    double deterministic_temperature = 0.0;
    int max_tokens = 2048;
    StateRepr state_repr = StateRepr::json;
    const PromptTemplates* templates = &PromptTemplates::defaults();
};

struct ModeOutcome {
    CandidateAnswer answer;
    bool extraction_failed = false;
    int generations = 0;
    int repairs = 0;
    std::vector<int> skipped_events;  // events whose state never parsed
    double latency_s = 0.0;           // sum of original call latencies
    std::optional<WorldState> final_state;
};

std::string build_computational_prompt(const ProblemInstance& problem,
                                       const PromptTemplates& t = PromptTemplates::defaults());
std::string build_hybrid_prompt(const ProblemInstance& problem,
                                const PromptTemplates& t = PromptTemplates::defaults());
std::string build_state_prompt(const WorldState& state, const Event& event,
                               const PromptTemplates& t = PromptTemplates::defaults());
std::string build_repair_prompt(std::string_view bad_completion,
                                const PromptTemplates& t = PromptTemplates::defaults());
std::string build_answer_prompt(const WorldState& state, std::string_view question,
                                const PromptTemplates& t = PromptTemplates::defaults());

// k sampled completions, FINAL_ANSWER extraction with last-number fallback,
// aggregated by aggregate_answers. k == 1 runs at the deterministic
// temperature.
ModeOutcome run_computational(const ProblemInstance& problem, Backend& backend,
                              const ModeOptions& opts);

// Event-by-event state tracking at temperature 0 with one JSON repair
// attempt per event; unrecoverable events are skipped and recorded.
ModeOutcome run_symbolic(const ProblemInstance& problem, Backend& backend,
                         const ModeOptions& opts);

// Single fact-extraction generation at temperature 0; falls back to the
// last yes/no token when the marker is missing.
ModeOutcome run_hybrid(const ProblemInstance& problem, Backend& backend, const ModeOptions& opts);

}  // namespace dualmode
