#include "idecoder/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "idecoder/errors.hpp"

namespace idecoder::syntax {

namespace {

const std::unordered_set<std::string_view> kKeywords = {
    "False",  "None",   "True",    "and",    "as",     "assert", "async",
    "await",  "break",  "class",   "continue", "def",  "del",    "elif",
    "else",   "except", "finally", "for",    "from",   "global", "if",
    "import", "in",     "is",      "lambda", "nonlocal", "not",  "or",
    "pass",   "raise",  "return",  "try",    "while",  "with",   "yield",
};

// Multi-character operators and puncts, longest first.
const std::array<std::string_view, 24> kMultiOps = {
    "**=", "//=", ">>=", "<<=", "...", "!=", ">=", "<=", "==", "->", ":=", "+=",
    "-=",  "*=",  "/=",  "%=",  "@=",  "&=", "|=", "^=", "**", "//", ">>", "<<",
};

constexpr std::string_view kSingleOps = "+-*/%@&|^~<>=";
constexpr std::string_view kPuncts = "()[]{},:.;";

bool is_ident_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_ident_cont(unsigned char c) {
    return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_string_prefix(std::string_view word) {
    if (word.empty() || word.size() > 2) return false;
    for (char c : word) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'f' && l != 'u') return false;
    }
    return true;
}

class Lexer {
public:
    explicit Lexer(std::string src) : src_(std::move(src)) {}

    std::vector<Token> run() {
        indents_.push_back(0);
        at_line_start_ = true;
        while (pos_ < src_.size()) {
            if (at_line_start_ && bracket_depth_ == 0) {
                handle_line_start();
                if (pos_ >= src_.size()) break;
            }
            lex_one();
        }
        finish();
        return std::move(tokens_);
    }

private:
    std::string src_;
    std::vector<Token> tokens_;
    std::string trivia_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    int bracket_depth_ = 0;
    bool at_line_start_ = true;
    bool line_has_token_ = false;
    std::vector<int> indents_;

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_to_trivia(std::size_t n) {
        trivia_.append(src_, pos_, n);
        advance(n);
    }

    void emit(TokenKind kind, std::size_t len) {
        Token t;
        t.kind = kind;
        t.line = line_;
        t.col = col_;
        t.offset = pos_;
        t.text = src_.substr(pos_, len);
        t.trivia = std::move(trivia_);
        trivia_.clear();
        tokens_.push_back(std::move(t));
        advance(len);
        line_has_token_ = true;
    }

    void emit_synthetic(TokenKind kind) {
        Token t;
        t.kind = kind;
        t.line = line_;
        t.col = col_;
        t.offset = pos_;
        t.trivia = std::move(trivia_);
        trivia_.clear();
        tokens_.push_back(std::move(t));
    }

    // Measures indentation of the line starting at pos_; emits indent/dedent
    // tokens unless the line is blank or comment-only.
    void handle_line_start() {
        std::size_t start = pos_;
        bool saw_space = false;
        bool saw_tab = false;
        int width = 0;
        while (pos_ < src_.size() &&
               (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\f')) {
            if (src_[pos_] == ' ') {
                saw_space = true;
                ++width;
            } else if (src_[pos_] == '\t') {
                saw_tab = true;
                width += 8 - width % 8;
            }
            // form feeds are whitespace and contribute no indentation
            ++pos_;
            ++col_;
        }
        trivia_.append(src_, start, pos_ - start);
        if (pos_ >= src_.size() || src_[pos_] == '\n' || src_[pos_] == '#') {
            // Blank or comment-only line: no indentation change.
            at_line_start_ = false;
            return;
        }
        if (saw_space && saw_tab) {
            throw LexError(line_, 1, "mixed tabs and spaces in indentation");
        }
        if (width > indents_.back()) {
            indents_.push_back(width);
            Token t;
            t.kind = TokenKind::Indent;
            t.line = line_;
            t.col = 1;
            t.offset = start;
            t.trivia = std::move(trivia_);
            trivia_.clear();
            tokens_.push_back(std::move(t));
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                Token t;
                t.kind = TokenKind::Dedent;
                t.line = line_;
                t.col = 1;
                t.offset = start;
                t.trivia = std::move(trivia_);
                trivia_.clear();
                tokens_.push_back(std::move(t));
            }
            if (width != indents_.back()) {
                throw LexError(line_, 1, "unindent does not match any outer indentation level");
            }
        }
        at_line_start_ = false;
    }

    void lex_one() {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\f') {
            skip_to_trivia(1);
            return;
        }
        if (c == '\\') {
            if (peek(1) == '\n') {
                skip_to_trivia(2);  // explicit line join
                return;
            }
            throw LexError(line_, col_, "unexpected character '\\'");
        }
        if (c == '\n') {
            if (bracket_depth_ > 0) {
                skip_to_trivia(1);  // implicit line join inside brackets
            } else {
                emit(TokenKind::Newline, 1);
                at_line_start_ = true;
                line_has_token_ = false;
            }
            return;
        }
        if (c == '#') {
            std::size_t len = 0;
            while (pos_ + len < src_.size() && src_[pos_ + len] != '\n') ++len;
            emit(TokenKind::Comment, len);
            return;
        }
        if (is_ident_start(static_cast<unsigned char>(c))) {
            lex_word();
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            lex_number();
            return;
        }
        if (c == '"' || c == '\'') {
            lex_string(0);
            return;
        }
        for (std::string_view op : kMultiOps) {
            if (src_.compare(pos_, op.size(), op) == 0) {
                emit(op == "..." ? TokenKind::Punct : TokenKind::Operator, op.size());
                return;
            }
        }
        if (kPuncts.find(c) != std::string_view::npos) {
            if (c == '(' || c == '[' || c == '{') ++bracket_depth_;
            if (c == ')' || c == ']' || c == '}') bracket_depth_ = std::max(0, bracket_depth_ - 1);
            emit(TokenKind::Punct, 1);
            return;
        }
        if (kSingleOps.find(c) != std::string_view::npos) {
            emit(TokenKind::Operator, 1);
            return;
        }
        throw LexError(line_, col_, std::string("invalid character '") + c + "'");
    }

    void lex_word() {
        std::size_t len = 1;
        while (pos_ + len < src_.size() &&
               is_ident_cont(static_cast<unsigned char>(src_[pos_ + len])))
            ++len;
        std::string_view word(src_.data() + pos_, len);
        char next = peek(len);
        if ((next == '"' || next == '\'') && is_string_prefix(word)) {
            lex_string(len);
            return;
        }
        emit(kKeywords.count(word) ? TokenKind::Keyword : TokenKind::Identifier, len);
    }

    void lex_number() {
        std::size_t len = 0;
        auto at = [&](std::size_t i) { return peek(len + i); };
        if (peek() == '0' && (at(1) == 'x' || at(1) == 'X' || at(1) == 'o' || at(1) == 'O' ||
                              at(1) == 'b' || at(1) == 'B')) {
            len = 2;
            while (std::isalnum(static_cast<unsigned char>(at(0))) || at(0) == '_') ++len;
            emit(TokenKind::Number, len);
            return;
        }
        auto digits = [&] {
            while (std::isdigit(static_cast<unsigned char>(at(0))) || at(0) == '_') ++len;
        };
        digits();
        if (at(0) == '.') {
            ++len;
            digits();
        }
        if (at(0) == 'e' || at(0) == 'E') {
            char sign = at(1);
            if (std::isdigit(static_cast<unsigned char>(sign))) {
                ++len;
                digits();
            } else if ((sign == '+' || sign == '-') &&
                       std::isdigit(static_cast<unsigned char>(at(2)))) {
                len += 2;
                digits();
            }
        }
        if (at(0) == 'j' || at(0) == 'J') ++len;
        emit(TokenKind::Number, len);
    }

    // prefix_len covers a leading r/b/f/u prefix already scanned.
    void lex_string(std::size_t prefix_len) {
        std::size_t len = prefix_len;
        char quote = peek(len);
        bool triple = peek(len + 1) == quote && peek(len + 2) == quote;
        len += triple ? 3 : 1;
        for (;;) {
            char c = peek(len);
            if (c == '\0' && pos_ + len >= src_.size()) {
                throw LexError(line_, col_, "unterminated string literal");
            }
            if (c == '\\') {
                len += 2;
                continue;
            }
            if (!triple && c == '\n') {
                throw LexError(line_, col_, "unterminated string literal");
            }
            if (c == quote) {
                if (!triple) {
                    ++len;
                    break;
                }
                if (peek(len + 1) == quote && peek(len + 2) == quote) {
                    len += 3;
                    break;
                }
            }
            ++len;
        }
        emit(TokenKind::String, len);
    }

    void finish() {
        if (line_has_token_) {
            emit_synthetic(TokenKind::Newline);
            line_ += 1;
            col_ = 1;
        }
        while (indents_.back() > 0) {
            indents_.pop_back();
            emit_synthetic(TokenKind::Dedent);
        }
        emit_synthetic(TokenKind::EndMarker);
    }
};

}  // namespace

std::string normalize_newlines(std::string_view source) {
    std::string out;
    out.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source[i] == '\r' && i + 1 < source.size() && source[i + 1] == '\n') continue;
        out.push_back(source[i]);
    }
    return out;
}

std::vector<Token> tokenize(std::string_view source) {
    return Lexer(normalize_newlines(source)).run();
}

std::string_view to_string(TokenKind kind) {
    switch (kind) {
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Keyword: return "keyword";
        case TokenKind::Number: return "number";
        case TokenKind::String: return "string";
        case TokenKind::Operator: return "operator";
        case TokenKind::Punct: return "punct";
        case TokenKind::Newline: return "newline";
        case TokenKind::Indent: return "indent";
        case TokenKind::Dedent: return "dedent";
        case TokenKind::Comment: return "comment";
        case TokenKind::EndMarker: return "end";
    }
    return "?";
}

bool is_python_keyword(std::string_view word) { return kKeywords.count(word) > 0; }

}  // namespace idecoder::syntax
