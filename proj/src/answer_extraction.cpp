#include "dualmode/answer_extraction.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dualmode/text.hpp"

namespace dualmode {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

constexpr std::string_view kMarker = "final_answer:";

// Matches a line of the form [ws]FINAL_ANSWER:<payload> case-insensitively
// and returns the trimmed payload.
std::optional<std::string> marker_payload(std::string_view line) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (line.size() - i < kMarker.size()) return std::nullopt;
    for (size_t k = 0; k < kMarker.size(); ++k) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(line[i + k])));
        if (c != kMarker[k]) return std::nullopt;
    }
    std::string payload = text::trim(line.substr(i + kMarker.size()));
    if (payload.empty()) return std::nullopt;
    return payload;
}

}  // namespace

std::optional<std::string> extract_final(std::string_view completion) {
    size_t end = completion.size();
    while (true) {
        size_t nl = completion.rfind('\n', end == 0 ? std::string_view::npos : end - 1);
        size_t begin = (nl == std::string_view::npos) ? 0 : nl + 1;
        if (auto payload = marker_payload(completion.substr(begin, end - begin))) return payload;
        if (begin == 0) break;
        end = begin - 1;
    }
    return std::nullopt;
}

std::optional<std::string> extract_last_number(std::string_view s) {
    std::optional<std::string> last;
    size_t i = 0;
    const size_t n = s.size();
    while (i < n) {
        size_t start = i;
        bool has_sign = (s[i] == '+' || s[i] == '-');
        if (has_sign) {
            bool sign_ok = (i == 0 || !is_digit(s[i - 1]));
            if (!sign_ok || i + 1 >= n || !is_digit(s[i + 1])) {
                ++i;
                continue;
            }
            ++i;
        }
        if (!is_digit(s[i])) {
            ++i;
            continue;
        }
        while (i < n && is_digit(s[i])) ++i;
        // thousands groups: ",ddd" not followed by a fourth digit
        while (i + 4 <= n && s[i] == ',' && is_digit(s[i + 1]) && is_digit(s[i + 2]) &&
               is_digit(s[i + 3]) && (i + 4 == n || !is_digit(s[i + 4]))) {
            i += 4;
        }
        if (i < n && s[i] == '.' && i + 1 < n && is_digit(s[i + 1])) {
            ++i;
            while (i < n && is_digit(s[i])) ++i;
        }
        std::string num;
        for (size_t k = start; k < i; ++k)
            if (s[k] != ',') num.push_back(s[k]);
        last = std::move(num);
    }
    return last;
}

std::optional<double> parse_number(std::string_view s) {
    std::string t = text::trim(s);
    if (!t.empty() && t.front() == '$') t.erase(t.begin());
    while (!t.empty()) {
        char c = t.back();
        if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':')
            t.pop_back();
        else
            break;
    }
    std::string digits;
    digits.reserve(t.size());
    for (char c : t)
        if (c != ',') digits.push_back(c);
    if (digits.empty()) return std::nullopt;
    const char* begin = digits.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + digits.size()) return std::nullopt;
    return v;
}

std::string render_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

AliasTable AliasTable::defaults() {
    AliasTable t;
    t.entries = {{"bath", "bathroom"}, {"hall", "hallway"}};
    return t;
}

AliasTable AliasTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("alias table: cannot open " + path);
    AliasTable t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream row(line);
        std::string from, to, extra;
        if (!(row >> from)) continue;  // blank line
        if (!(row >> to) || (row >> extra)) {
            throw std::runtime_error("alias table: line " + std::to_string(line_no) +
                                     ": expected exactly two columns");
        }
        t.entries[text::lower(from)] = text::lower(to);
    }
    for (const auto& [from, to] : t.entries) {
        auto it = t.entries.find(to);
        if (it != t.entries.end() && it->second != to) {
            throw std::runtime_error("alias table: \"" + from + "\" maps to \"" + to +
                                     "\" which is itself re-aliased; canonical forms must be fixed points");
        }
        (void)from;
    }
    return t;
}

std::string AliasTable::apply(const std::string& s) const {
    auto it = entries.find(s);
    return it == entries.end() ? s : it->second;
}

namespace {

std::string first_token_normalized(std::string_view raw) {
    std::string cleaned;
    cleaned.reserve(raw.size());
    for (char c : raw) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::ispunct(u))
            cleaned.push_back(' ');
        else
            cleaned.push_back(static_cast<char>(std::tolower(u)));
    }
    std::istringstream stream(cleaned);
    std::string tok;
    stream >> tok;
    return tok;
}

std::string normalized_string_form(std::string_view raw, const AliasTable& aliases) {
    std::string t = text::lower(text::trim(raw));
    while (!t.empty()) {
        char c = t.back();
        if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':')
            t.pop_back();
        else
            break;
    }
    return aliases.apply(text::trim(t));
}

}  // namespace

std::string normalize_answer(std::string_view raw, AnswerKind kind, const AliasTable& aliases) {
    switch (kind) {
        case AnswerKind::numeric: {
            if (auto v = parse_number(raw)) return render_number(*v);
            return text::trim(raw);
        }
        case AnswerKind::yes_no:
            return first_token_normalized(raw);
        case AnswerKind::text:
            return normalized_string_form(raw, aliases);
    }
    return std::string(raw);
}

bool match_answers(std::string_view pred, std::string_view gold, AnswerKind kind,
                   const AliasTable& aliases) {
    switch (kind) {
        case AnswerKind::numeric: {
            auto p = parse_number(pred);
            auto g = parse_number(gold);
            return p && g && std::fabs(*p - *g) < 1e-9;
        }
        case AnswerKind::yes_no: {
            std::string p = first_token_normalized(pred);
            return !p.empty() && p == first_token_normalized(gold);
        }
        case AnswerKind::text: {
            std::string p = normalized_string_form(pred, aliases);
            return !p.empty() && p == normalized_string_form(gold, aliases);
        }
    }
    return false;
}

}  // namespace dualmode
