#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "idecoder/token.hpp"

namespace idecoder::syntax {

// Replaces \r\n with \n. Applied to every source before lexing.
std::string normalize_newlines(std::string_view source);

// Lexes Python source into a token stream ending in one EndMarker token.
// Emits synthetic indent/dedent tokens from the indentation automaton and a
// newline token per logical line; physical newlines inside brackets and
// backslash joins become trivia. Comments are retained as tokens.
// Throws LexError on unterminated strings, invalid characters, and
// tab/space-mixed indentation.
std::vector<Token> tokenize(std::string_view source);

}  // namespace idecoder::syntax
