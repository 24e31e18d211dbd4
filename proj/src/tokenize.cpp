#include "poc/tokenize.hpp"

#include <cctype>

namespace poc {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Word characters: ASCII alphanumerics plus any non-ASCII byte, so UTF-8
// sequences stay inside words.
bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        std::size_t run_end = i;
        while (run_end < n && !is_space(static_cast<unsigned char>(text[run_end]))) ++run_end;

        // Locate the word core of the run, if any.
        std::size_t first = i;
        while (first < run_end && !is_word_char(static_cast<unsigned char>(text[first]))) ++first;
        if (first == run_end) {
            // Punctuation-only run: one token per character.
            for (std::size_t p = i; p < run_end; ++p) tokens.emplace_back(1, text[p]);
        } else {
            std::size_t last = run_end - 1;
            while (!is_word_char(static_cast<unsigned char>(text[last]))) --last;
            for (std::size_t p = i; p < first; ++p) tokens.emplace_back(1, text[p]);
            tokens.emplace_back(text.substr(first, last - first + 1));
            for (std::size_t p = last + 1; p < run_end; ++p) tokens.emplace_back(1, text[p]);
        }
        i = run_end;
    }
    return tokens;
}

bool is_word_token(std::string_view token) {
    for (char c : token) {
        if (is_word_char(static_cast<unsigned char>(c))) return true;
    }
    return false;
}

std::size_t count_word_tokens(std::string_view text) {
    std::size_t count = 0;
    for (const auto& token : tokenize(text)) {
        if (is_word_token(token)) ++count;
    }
    return count;
}

std::vector<std::string> word_tokens(std::string_view text, std::size_t max_tokens) {
    std::vector<std::string> out;
    for (auto& token : tokenize(text)) {
        if (!is_word_token(token)) continue;
        out.push_back(std::move(token));
        if (max_tokens && out.size() >= max_tokens) break;
    }
    return out;
}

}  // namespace poc
