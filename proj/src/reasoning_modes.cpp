#include "dualmode/reasoning_modes.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include <json.hpp>

#include "dualmode/answer_extraction.hpp"
#include "dualmode/text.hpp"

namespace dualmode {

using nlohmann::json;

std::string serialize_state(const WorldState& state) {
    json doc;
    doc["locations"] = json::object();
    doc["objects"] = json::object();
    for (const auto& [k, v] : state.locations) doc["locations"][k] = v;
    for (const auto& [k, v] : state.objects) doc["objects"][k] = v;
    return doc.dump();
}

namespace {

// First balanced {...} block, skipping braces inside JSON strings.
std::optional<std::string> first_json_block(std::string_view s) {
    const size_t open = s.find('{');
    if (open == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"')
            in_string = true;
        else if (c == '{')
            ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) return std::string(s.substr(open, i - open + 1));
        }
    }
    return std::nullopt;
}

bool read_string_map(const json& doc, const char* key, std::map<std::string, std::string>& out) {
    if (!doc.contains(key)) return true;
    const json& section = doc.at(key);
    if (!section.is_object()) return false;
    for (const auto& [k, v] : section.items()) {
        if (!v.is_string()) return false;
        std::string value = v.get<std::string>();
        if (k.empty() || value.empty()) return false;
        out[k] = std::move(value);
    }
    return true;
}

}  // namespace

StateParseResult parse_state(std::string_view completion) {
    StateParseResult result;
    auto block = first_json_block(completion);
    if (!block) {
        // an opening brace that never balances is malformed JSON, not absence
        result.error = completion.find('{') == std::string_view::npos
                           ? StateParseError::no_json_found
                           : StateParseError::malformed_json;
        return result;
    }
    json doc;
    try {
        doc = json::parse(*block);
    } catch (const json::exception&) {
        result.error = StateParseError::malformed_json;
        return result;
    }
    if (!doc.is_object()) {
        result.error = StateParseError::wrong_shape;
        return result;
    }
    WorldState state;
    if (!read_string_map(doc, "locations", state.locations) ||
        !read_string_map(doc, "objects", state.objects)) {
        result.error = StateParseError::wrong_shape;
        return result;
    }
    result.state = std::move(state);
    return result;
}

WorldState merge_states(WorldState current, const WorldState& incoming) {
    for (const auto& [k, v] : incoming.locations) current.locations[k] = v;
    for (const auto& [k, v] : incoming.objects) current.objects[k] = v;
    return current;
}

std::vector<Event> extract_events(std::string_view context) {
    std::vector<Event> events;
    int index = 0;
    for (std::string& sentence : text::split_sentences(context))
        events.push_back(Event{std::move(sentence), index++});
    return events;
}

CandidateAnswer CandidateAnswer::from_raw(std::string raw) {
    CandidateAnswer c;
    c.raw = std::move(raw);
    const std::string trimmed = text::trim(c.raw);
    if (!trimmed.empty()) {
        const char* begin = trimmed.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin + trimmed.size()) c.numeric_value = v;
    }
    return c;
}

CandidateAnswer aggregate_answers(const std::vector<CandidateAnswer>& answers) {
    if (answers.empty()) throw std::invalid_argument("aggregate_answers: empty answer list");
    const bool all_numeric =
        std::all_of(answers.begin(), answers.end(),
                    [](const CandidateAnswer& a) { return a.numeric_value.has_value(); });
    if (all_numeric) {
        std::vector<double> values;
        values.reserve(answers.size());
        for (const auto& a : answers) values.push_back(*a.numeric_value);
        std::sort(values.begin(), values.end());
        const size_t n = values.size();
        const double median =
            (n % 2 == 1) ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
        return CandidateAnswer::from_raw(render_number(median));
    }
    // majority vote over normalized strings, earliest first occurrence wins ties
    struct Tally {
        int count = 0;
        size_t first_seen = 0;
    };
    std::map<std::string, Tally> votes;
    for (size_t i = 0; i < answers.size(); ++i) {
        std::string key = text::lower(text::trim(answers[i].raw));
        auto [it, inserted] = votes.try_emplace(std::move(key), Tally{0, i});
        ++it->second.count;
    }
    const std::pair<const std::string, Tally>* best = nullptr;
    for (const auto& entry : votes) {
        if (!best || entry.second.count > best->second.count ||
            (entry.second.count == best->second.count &&
             entry.second.first_seen < best->second.first_seen)) {
            best = &entry;
        }
    }
    return CandidateAnswer::from_raw(best->first);
}

std::string to_string(StateRepr r) {
    switch (r) {
        case StateRepr::json: return "json";
        case StateRepr::text: return "text";
        case StateRepr::none: return "none";
    }
    return "?";
}

std::optional<StateRepr> state_repr_from_string(std::string_view name) {
    if (name == "json") return StateRepr::json;
    if (name == "text") return StateRepr::text;
    if (name == "none") return StateRepr::none;
    return std::nullopt;
}

std::string build_computational_prompt(const ProblemInstance& p, const PromptTemplates& t) {
    return render_template(t.computational, {{"context", p.context}, {"question", p.question}});
}

namespace {

std::string context_block(const ProblemInstance& p, const std::string& block_template) {
    if (p.context.empty()) return "";
    return render_template(block_template, {{"context", p.context}});
}

}  // namespace

std::string build_hybrid_prompt(const ProblemInstance& p, const PromptTemplates& t) {
    return render_template(t.hybrid, {{"context_block", context_block(p, t.hybrid_context)},
                                      {"question", p.question}});
}

std::string build_state_prompt(const WorldState& state, const Event& event,
                               const PromptTemplates& t) {
    return render_template(t.state, {{"state", serialize_state(state)}, {"event", event.text}});
}

std::string build_repair_prompt(std::string_view bad_completion, const PromptTemplates& t) {
    return render_template(t.repair, {{"completion", std::string(bad_completion)}});
}

std::string build_answer_prompt(const WorldState& state, std::string_view question,
                                const PromptTemplates& t) {
    return render_template(
        t.answer, {{"state", serialize_state(state)}, {"question", std::string(question)}});
}

namespace {

GenerationResult generate_tracked(Backend& backend, ModeOutcome& outcome,
                                  GenerationRequest request) {
    GenerationResult g = backend.generate(request);
    ++outcome.generations;
    outcome.latency_s += g.original_latency_s;
    return g;
}

// Final-answer extraction for symbolic/none paths: marker line, else the
// whole trimmed completion.
void fill_answer_with_fallback(ModeOutcome& outcome, const std::string& completion) {
    std::string raw;
    if (auto marker = extract_final(completion))
        raw = *marker;
    else
        raw = text::trim(completion);
    if (raw.empty()) {
        outcome.extraction_failed = true;
        return;
    }
    outcome.answer = CandidateAnswer::from_raw(std::move(raw));
}

ModeOutcome run_symbolic_json(const ProblemInstance& p, Backend& backend,
                              const ModeOptions& opts) {
    ModeOutcome outcome;
    const PromptTemplates& t = *opts.templates;
    WorldState state;
    for (const Event& event : extract_events(p.context)) {
        GenerationResult g = generate_tracked(
            backend, outcome,
            {opts.model, build_state_prompt(state, event, t), opts.deterministic_temperature,
             opts.max_tokens, 0});
        StateParseResult parsed = parse_state(g.text);
        if (!parsed.ok()) {
            GenerationResult repaired = generate_tracked(
                backend, outcome,
                {opts.model, build_repair_prompt(g.text, t), opts.deterministic_temperature,
                 opts.max_tokens, 0});
            ++outcome.repairs;
            parsed = parse_state(repaired.text);
        }
        if (parsed.ok())
            state = merge_states(std::move(state), *parsed.state);
        else
            outcome.skipped_events.push_back(event.index);
    }
    GenerationResult answer = generate_tracked(
        backend, outcome,
        {opts.model, build_answer_prompt(state, p.question, t), opts.deterministic_temperature,
         opts.max_tokens, 0});
    fill_answer_with_fallback(outcome, answer.text);
    outcome.final_state = std::move(state);
    return outcome;
}

ModeOutcome run_symbolic_text(const ProblemInstance& p, Backend& backend,
                              const ModeOptions& opts) {
    ModeOutcome outcome;
    const PromptTemplates& t = *opts.templates;
    std::string state = "Nothing is known yet.";
    for (const Event& event : extract_events(p.context)) {
        GenerationResult g = generate_tracked(
            backend, outcome,
            {opts.model,
             render_template(t.state_text, {{"state", state}, {"event", event.text}}),
             opts.deterministic_temperature, opts.max_tokens, 0});
        std::string updated = text::trim(g.text);
        if (updated.empty())
            outcome.skipped_events.push_back(event.index);
        else
            state = std::move(updated);
    }
    GenerationResult answer = generate_tracked(
        backend, outcome,
        {opts.model,
         render_template(t.answer, {{"state", state}, {"question", p.question}}),
         opts.deterministic_temperature, opts.max_tokens, 0});
    fill_answer_with_fallback(outcome, answer.text);
    return outcome;
}

ModeOutcome run_symbolic_none(const ProblemInstance& p, Backend& backend,
                              const ModeOptions& opts) {
    ModeOutcome outcome;
    const PromptTemplates& t = *opts.templates;
    const std::string prompt =
        render_template(t.state_none, {{"context_block", context_block(p, t.plain_context)},
                                       {"question", p.question}});
    GenerationResult g = generate_tracked(
        backend, outcome,
        {opts.model, prompt, opts.deterministic_temperature, opts.max_tokens, 0});
    fill_answer_with_fallback(outcome, g.text);
    return outcome;
}

}  // namespace

ModeOutcome run_computational(const ProblemInstance& p, Backend& backend,
                              const ModeOptions& opts) {
    if (opts.k < 1) throw std::invalid_argument("run_computational: k must be >= 1");
    ModeOutcome outcome;
    const std::string prompt = build_computational_prompt(p, *opts.templates);
    // single-pass computational runs deterministically
    const double temperature =
        opts.k == 1 ? opts.deterministic_temperature : opts.sampling_temperature;
    std::vector<CandidateAnswer> answers;
    for (int i = 0; i < opts.k; ++i) {
        GenerationResult g = generate_tracked(
            backend, outcome, {opts.model, prompt, temperature, opts.max_tokens, i});
        std::optional<std::string> extracted = extract_final(g.text);
        if (!extracted) extracted = extract_last_number(g.text);
        if (extracted) answers.push_back(CandidateAnswer::from_raw(std::move(*extracted)));
    }
    if (answers.empty()) {
        outcome.extraction_failed = true;  // no sample yielded an answer
        return outcome;
    }
    outcome.answer = aggregate_answers(answers);
    return outcome;
}

ModeOutcome run_symbolic(const ProblemInstance& p, Backend& backend, const ModeOptions& opts) {
    switch (opts.state_repr) {
        case StateRepr::json: return run_symbolic_json(p, backend, opts);
        case StateRepr::text: return run_symbolic_text(p, backend, opts);
        case StateRepr::none: return run_symbolic_none(p, backend, opts);
    }
    return run_symbolic_json(p, backend, opts);
}

ModeOutcome run_hybrid(const ProblemInstance& p, Backend& backend, const ModeOptions& opts) {
    ModeOutcome outcome;
    GenerationResult g = generate_tracked(
        backend, outcome,
        {opts.model, build_hybrid_prompt(p, *opts.templates), opts.deterministic_temperature,
         opts.max_tokens, 0});
    if (auto marker = extract_final(g.text)) {
        outcome.answer = CandidateAnswer::from_raw(std::move(*marker));
        return outcome;
    }
    // scan the completion tail-first for a bare yes/no token
    const std::vector<std::string> words = text::tokens(g.text);
    for (auto it = words.rbegin(); it != words.rend(); ++it) {
        const std::string w = text::lower(*it);
        if (w == "yes" || w == "no") {
            outcome.answer = CandidateAnswer::from_raw(w);
            return outcome;
        }
    }
    outcome.extraction_failed = true;
    return outcome;
}

}  // namespace dualmode
