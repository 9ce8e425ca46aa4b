#include "dualmode/text.hpp"

#include <cctype>

namespace dualmode::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

namespace {

bool boundary_match_at(std::string_view hay, std::string_view needle, size_t pos) {
    if (pos > 0 && is_word_char(hay[pos - 1])) return false;
    size_t end = pos + needle.size();
    if (end < hay.size() && is_word_char(hay[end])) return false;
    return true;
}

}  // namespace

int count_word(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    int count = 0;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        if (boundary_match_at(haystack, needle, pos)) {
            ++count;
            pos += needle.size();
        } else {
            ++pos;
        }
    }
    return count;
}

bool contains_word(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        if (boundary_match_at(haystack, needle, pos)) return true;
        ++pos;
    }
    return false;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    size_t start = 0;
    auto flush = [&](size_t end_exclusive) {
        std::string seg = trim(s.substr(start, end_exclusive - start));
        if (!seg.empty()) out.push_back(std::move(seg));
    };
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c != '.' && c != '!' && c != '?') continue;
        size_t j = i + 1;
        if (j < s.size() && !is_space(s[j])) continue;  // "3.5" stays intact
        while (j < s.size() && is_space(s[j])) ++j;
        const bool at_end = (j == s.size());
        bool terminates;
        if (c == '.') {
            terminates = at_end || std::isupper(static_cast<unsigned char>(s[j])) != 0;
        } else {
            terminates = true;
        }
        if (terminates) {
            flush(i + 1);
            start = i + 1;
        }
    }
    if (start < s.size()) flush(s.size());
    return out;
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        size_t b = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i == b) break;
        std::string_view raw = s.substr(b, i - b);
        size_t tb = 0;
        size_t te = raw.size();
        while (tb < te && !is_word_char(raw[tb])) ++tb;
        while (te > tb && !is_word_char(raw[te - 1])) --te;
        if (te > tb) out.emplace_back(raw.substr(tb, te - tb));
    }
    return out;
}

}  // namespace dualmode::text
