#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small ASCII text helpers shared by the analyzer, the event splitter and
// the answer normalizers. All functions are pure.
namespace dualmode::text {

std::string lower(std::string_view s);
std::string trim(std::string_view s);

bool is_word_char(char c);

// Whole-word containment: the match must not touch word characters on either
// side. Multi-word needles ("picked up") match as contiguous substrings with
// the same boundary rule at both ends.
bool contains_word(std::string_view haystack, std::string_view needle);

// Number of non-overlapping whole-word occurrences.
int count_word(std::string_view haystack, std::string_view needle);

// Sentence segmentation. '!' and '?' terminate when followed by whitespace or
// end of text; '.' additionally requires the next non-space character to be
// uppercase (or end of text) so decimals like "3.5" survive. Segments are
// trimmed, empties dropped, order preserved.
std::vector<std::string> split_sentences(std::string_view s);

// Whitespace-split tokens with non-alphanumeric characters stripped from both
// edges (interior punctuation is kept).
std::vector<std::string> tokens(std::string_view s);

}  // namespace dualmode::text
