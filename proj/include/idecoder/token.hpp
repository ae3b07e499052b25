#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace idecoder::syntax {

enum class TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Operator,
    Punct,
    Newline,
    Indent,
    Dedent,
    Comment,
    EndMarker,
};

std::string_view to_string(TokenKind kind);

// One lexical token. `text` is the exact source slice; synthetic tokens
// (indent/dedent/end marker and the end-of-file newline) carry empty text.
// `trivia` is the skipped whitespace and line joins immediately before the
// token, so concatenating trivia+text over the stream reproduces the
// (newline-normalized) input byte for byte.
struct Token {
    TokenKind kind = TokenKind::EndMarker;
    std::string text;
    int line = 1;  // 1-based
    int col = 1;   // 1-based
    std::size_t offset = 0;  // byte offset of `text` in the normalized source
    std::string trivia;

    bool is(TokenKind k) const { return kind == k; }
    bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
};

bool is_python_keyword(std::string_view word);

}  // namespace idecoder::syntax
