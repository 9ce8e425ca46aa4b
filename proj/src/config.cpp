#include "dualmode/config.hpp"

#include <fstream>

namespace dualmode {

using nlohmann::json;

namespace {

void read_if(const json& doc, const char* key, std::string& out) {
    if (doc.contains(key)) out = doc.at(key).get<std::string>();
}
void read_if(const json& doc, const char* key, double& out) {
    if (doc.contains(key)) out = doc.at(key).get<double>();
}
void read_if(const json& doc, const char* key, int& out) {
    if (doc.contains(key)) out = doc.at(key).get<int>();
}
void read_if(const json& doc, const char* key, uint64_t& out) {
    if (doc.contains(key)) out = doc.at(key).get<uint64_t>();
}

void read_words(const json& doc, const char* key, std::vector<std::string>& out) {
    if (!doc.contains(key)) return;
    const json& arr = doc.at(key);
    if (!arr.is_array()) throw ConfigError(std::string("config: lexicons.") + key + " must be an array");
    out.clear();
    for (const auto& w : arr) out.push_back(w.get<std::string>());
}

}  // namespace

void Config::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    apply_json(doc);
}

void Config::apply_json(const json& doc) {
    try {
        if (doc.contains("backend")) {
            const json& b = doc["backend"];
            read_if(b, "script", script_path);
            read_if(b, "endpoint", endpoint);
            read_if(b, "model", model);
            read_if(b, "credentials_env", credentials_env);
            read_if(b, "cache_dir", cache_dir);
            read_if(b, "timeout_s", timeout_s);
            read_if(b, "retry_attempts", retry_attempts);
            read_if(b, "retry_initial_backoff_s", retry_initial_backoff_s);
            read_if(b, "rate_limit_requests", rate_limit_requests);
            read_if(b, "rate_limit_window_s", rate_limit_window_s);
        }
        if (doc.contains("dataset")) {
            const json& d = doc["dataset"];
            read_if(d, "path", dataset.path);
            read_if(d, "name", dataset.name);
            read_if(d, "sample_n", dataset.sample_n);
            read_if(d, "seed", dataset.seed);
            if (d.contains("answer_kind")) {
                auto kind = answer_kind_from_string(d["answer_kind"].get<std::string>());
                if (!kind) throw ConfigError("config: dataset.answer_kind is unknown");
                dataset.default_kind = *kind;
            }
        }
        if (doc.contains("method")) {
            const json& m = doc["method"];
            if (m.contains("kind")) {
                auto kind = method_from_string(m["kind"].get<std::string>());
                if (!kind) throw ConfigError("config: method.kind is unknown");
                method.kind = *kind;
            }
            read_if(m, "k", method.k);
            if (m.contains("forced_mode")) {
                const std::string name = m["forced_mode"].get<std::string>();
                if (name.empty()) {
                    method.forced_mode.reset();
                } else {
                    auto mode = mode_from_string(name);
                    if (!mode) throw ConfigError("config: method.forced_mode is unknown");
                    method.forced_mode = *mode;
                }
            }
            if (m.contains("state_repr")) {
                auto repr = state_repr_from_string(m["state_repr"].get<std::string>());
                if (!repr) throw ConfigError("config: method.state_repr is unknown");
                state_repr = *repr;
            }
        }
        if (doc.contains("modes")) {
            const json& m = doc["modes"];
            read_if(m, "sampling_temperature", sampling_temperature);
            read_if(m, "deterministic_temperature", deterministic_temperature);
            read_if(m, "max_tokens", max_tokens);
            read_if(m, "templates_dir", templates_dir);
            if (sampling_temperature < 0.0 || sampling_temperature > 2.0 ||
                deterministic_temperature < 0.0 || deterministic_temperature > 2.0)
                throw ConfigError("config: temperatures must lie in [0, 2]");
            if (max_tokens < 1) throw ConfigError("config: max_tokens must be positive");
        }
        if (doc.contains("analysis")) {
            const json& a = doc["analysis"];
            if (a.contains("coefficients")) {
                const json& c = a["coefficients"];
                read_if(c, "alpha", coefficients.alpha);
                read_if(c, "beta", coefficients.beta);
                read_if(c, "gamma", coefficients.gamma);
                read_if(c, "delta", coefficients.delta);
                read_if(c, "epsilon", coefficients.epsilon);
                read_if(c, "zeta", coefficients.zeta);
                read_if(c, "eta", coefficients.eta);
                read_if(c, "theta", coefficients.theta);
                read_if(c, "iota", coefficients.iota);
                if (!coefficients.valid())
                    throw ConfigError("config: coefficients must be non-negative");
            }
            if (a.contains("lexicons")) {
                const json& l = a["lexicons"];
                read_words(l, "math_words", lexicons.math_words);
                read_words(l, "spatial_words", lexicons.spatial_words);
                read_words(l, "multihop_words", lexicons.multihop_words);
                read_words(l, "movement_words", lexicons.movement_words);
                read_words(l, "causal_words", lexicons.causal_words);
                read_words(l, "entity_stop_words", lexicons.entity_stop_words);
            }
        }
        if (doc.contains("matching")) read_if(doc["matching"], "aliases_path", aliases_path);
        if (doc.contains("stats")) {
            const json& s = doc["stats"];
            read_if(s, "bootstrap_b", stats.bootstrap_b);
            read_if(s, "bootstrap_level", stats.bootstrap_level);
            read_if(s, "n_permutations", stats.n_permutations);
            read_if(s, "seed", stats.seed);
        }
        if (doc.contains("execution")) read_if(doc["execution"], "workers", workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

nlohmann::json Config::snapshot() const {
    json lex = {{"math_words", lexicons.math_words},
                {"spatial_words", lexicons.spatial_words},
                {"multihop_words", lexicons.multihop_words},
                {"movement_words", lexicons.movement_words},
                {"causal_words", lexicons.causal_words},
                {"entity_stop_words", lexicons.entity_stop_words}};
    json doc = {
        {"backend",
         {{"script", script_path},
          {"endpoint", endpoint},
          {"model", model},
          {"credentials_env", credentials_env},
          {"timeout_s", timeout_s},
          {"retry_attempts", retry_attempts},
          {"retry_initial_backoff_s", retry_initial_backoff_s},
          {"rate_limit_requests", rate_limit_requests},
          {"rate_limit_window_s", rate_limit_window_s}}},
        {"dataset",
         {{"path", dataset.path},
          {"name", dataset.name},
          {"sample_n", dataset.sample_n},
          {"seed", dataset.seed},
          {"answer_kind", to_string(dataset.default_kind)}}},
        {"method",
         {{"kind", to_string(method.kind)},
          {"k", method.k},
          {"forced_mode", method.forced_mode ? to_string(*method.forced_mode) : ""},
          {"state_repr", to_string(state_repr)}}},
        {"modes",
         {{"sampling_temperature", sampling_temperature},
          {"deterministic_temperature", deterministic_temperature},
          {"max_tokens", max_tokens},
          {"templates_dir", templates_dir}}},
        {"analysis",
         {{"coefficients",
           {{"alpha", coefficients.alpha},
            {"beta", coefficients.beta},
            {"gamma", coefficients.gamma},
            {"delta", coefficients.delta},
            {"epsilon", coefficients.epsilon},
            {"zeta", coefficients.zeta},
            {"eta", coefficients.eta},
            {"theta", coefficients.theta},
            {"iota", coefficients.iota}}},
          {"lexicons", std::move(lex)}}},
        {"matching", {{"aliases_path", aliases_path}}},
        {"stats",
         {{"bootstrap_b", stats.bootstrap_b},
          {"bootstrap_level", stats.bootstrap_level},
          {"n_permutations", stats.n_permutations},
          {"seed", stats.seed}}},
    };
    return doc;
}

AliasTable Config::aliases() const {
    if (aliases_path.empty()) return AliasTable::defaults();
    try {
        return AliasTable::load(aliases_path);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
}

PromptTemplates Config::templates() const {
    if (templates_dir.empty()) return PromptTemplates::defaults();
    return PromptTemplates::load_dir(templates_dir);
}

}  // namespace dualmode
