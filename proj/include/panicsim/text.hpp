#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace panicsim {

/// Strips URLs and a leading "RT @handle:" marker, collapses every run of
/// non-alphanumeric characters to one space and trims. Bytes outside ASCII
/// count as non-alphanumeric. Idempotent.
std::string sanitize_text(std::string_view text);

/// Whitespace-delimited tokens.
std::vector<std::string> split_whitespace(std::string_view text);

std::string to_lower(std::string_view text);

/// Tokens with at least two alphabetic characters.
int meaningful_token_count(std::string_view text);

/// Lowercased word tokens: maximal runs of ASCII letters, digits and
/// apostrophes. Used for lexicon lookups on unsanitized text.
std::vector<std::string> word_tokens(std::string_view text);

/// Cosine similarity of raw term-frequency vectors over lowercased
/// whitespace tokens. Two empty texts have similarity 1.
double tf_cosine(std::string_view a, std::string_view b);

/// True iff tf_cosine(a, b) strictly exceeds threshold.
bool near_duplicate(std::string_view a, std::string_view b, double threshold);

std::string trim(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

bool starts_with_icase(std::string_view text, std::string_view prefix);

}  // namespace panicsim
