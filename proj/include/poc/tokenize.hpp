#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace poc {

// Splits text into tokens: within each whitespace-delimited run, the span
// from the first to the last word character is one token (so apostrophes and
// hyphens stay word-internal) and every leading/trailing punctuation
// character becomes its own token. Deterministic and total; empty text
// yields an empty list.
std::vector<std::string> tokenize(std::string_view text);

// True when the token contains at least one word character (ASCII
// alphanumeric or any non-ASCII byte).
bool is_word_token(std::string_view token);

// Number of word tokens in the text. Length gates and truncation operate on
// this count, not the raw token list.
std::size_t count_word_tokens(std::string_view text);

// Word tokens only, capped at max_tokens (0 = no cap).
std::vector<std::string> word_tokens(std::string_view text, std::size_t max_tokens = 0);

}  // namespace poc
