#include "idecoder/body.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "idecoder/errors.hpp"
#include "idecoder/lexer.hpp"

namespace idecoder::syntax {

namespace {

using TK = TokenKind;

const std::array<std::string_view, 11> kCompoundKeywords = {
    "if", "elif", "else", "for", "while", "with", "try", "except", "finally", "def", "class",
};

bool is_compound_head(const Token& t) {
    if (t.kind != TK::Keyword) return false;
    return std::find(kCompoundKeywords.begin(), kCompoundKeywords.end(), t.text) !=
           kCompoundKeywords.end();
}

bool opens(const Token& t) {
    return t.kind == TK::Punct && (t.text == "(" || t.text == "[" || t.text == "{");
}
bool closes(const Token& t) {
    return t.kind == TK::Punct && (t.text == ")" || t.text == "]" || t.text == "}");
}

class BodyParser {
public:
    explicit BodyParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    BodyNode run() {
        BodyNode root{"body", "", {}};
        bool wrapped = false;
        if (peek().kind == TK::Indent) {
            get();
            wrapped = true;
        }
        parse_suite(root.children);
        if (wrapped && peek().kind == TK::Dedent) get();
        while (peek().kind == TK::Newline) get();
        if (!at_end()) fail("end of body");
        return root;
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(i_ + ahead, toks_.size() - 1)];
    }
    const Token& get() { return toks_[std::min(i_++, toks_.size() - 1)]; }
    bool at_end() const { return peek().kind == TK::EndMarker; }

    [[noreturn]] void fail(const std::string& expected) const {
        throw ParseError(peek().line, peek().col, expected);
    }

    void parse_suite(std::vector<BodyNode>& out) {
        for (;;) {
            while (peek().kind == TK::Newline) get();
            if (at_end() || peek().kind == TK::Dedent) return;
            out.push_back(parse_statement());
        }
    }

    BodyNode parse_statement() {
        const Token& head = peek();
        if (is_compound_head(head)) return parse_compound();
        if (head.is(TK::Keyword, "async") && is_compound_head(peek(1))) {
            get();
            return parse_compound();
        }
        return parse_simple();
    }

    // Statement kind from its significant tokens.
    static std::string classify(const std::vector<BodyNode>& leaves, const Token& head) {
        if (head.kind == TK::Keyword) return head.text;
        int depth = 0;
        bool saw_annotation = false;
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            const std::string& t = leaves[k].text;
            if (t == "(" || t == "[" || t == "{") ++depth;
            else if (t == ")" || t == "]" || t == "}") --depth;
            else if (depth == 0 && t == ":") saw_annotation = true;
            else if (depth == 0 && t == "=")
                return saw_annotation ? "ann_assign" : "assign";
            else if (depth == 0 && t.size() >= 2 && t.back() == '=' && t != "==" && t != "!=" &&
                     t != "<=" && t != ">=")
                return "aug_assign";
        }
        return "expr";
    }

    BodyNode parse_simple() {
        const Token head = peek();
        BodyNode node{"", "", {}};
        collect_leaves(node.children, /*stop_at_colon=*/false);
        node.kind = classify(node.children, head);
        if (peek().kind == TK::Newline) get();
        return node;
    }

    BodyNode parse_compound() {
        const Token head = peek();
        BodyNode node{head.text, "", {}};
        get();
        collect_leaves(node.children, /*stop_at_colon=*/true);
        if (!peek().is(TK::Punct, ":")) fail("':'");
        get();
        BodyNode suite{"suite", "", {}};
        if (peek().kind == TK::Newline) {
            get();
            while (peek().kind == TK::Newline) get();
            if (peek().kind != TK::Indent) fail("indented suite");
            get();
            parse_suite(suite.children);
            if (peek().kind != TK::Dedent) fail("dedent");
            get();
        } else {
            // inline suite: one or more ';'-separated simple statements
            for (;;) {
                suite.children.push_back(parse_inline_simple());
                if (peek().is(TK::Punct, ";")) {
                    get();
                    continue;
                }
                break;
            }
            if (peek().kind == TK::Newline) get();
        }
        node.children.push_back(std::move(suite));
        return node;
    }

    BodyNode parse_inline_simple() {
        const Token head = peek();
        BodyNode node{"", "", {}};
        int depth = 0;
        while (!at_end() && peek().kind != TK::Newline) {
            if (depth == 0 && peek().is(TK::Punct, ";")) break;
            append_leaf(node.children, depth);
        }
        node.kind = classify(node.children, head);
        return node;
    }

    // Leaves of one logical line; dotted identifier chains become one leaf.
    void collect_leaves(std::vector<BodyNode>& out, bool stop_at_colon) {
        int depth = 0;
        while (!at_end() && peek().kind != TK::Newline) {
            if (stop_at_colon && depth == 0 && peek().is(TK::Punct, ":")) return;
            if (peek().kind == TK::Dedent) return;
            append_leaf(out, depth);
        }
    }

    void append_leaf(std::vector<BodyNode>& out, int& depth) {
        const Token& t = peek();
        if (opens(t)) ++depth;
        if (closes(t)) --depth;
        if (t.kind == TK::Identifier) {
            std::string text = get().text;
            while (peek().is(TK::Punct, ".") && peek(1).kind == TK::Identifier) {
                get();
                text += "." + get().text;
            }
            out.push_back({"tok", std::move(text), {}});
            return;
        }
        out.push_back({"tok", get().text, {}});
    }
};

}  // namespace

std::string dedent(std::string_view body) {
    std::size_t common = std::string::npos;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        std::size_t len = (eol == std::string_view::npos ? body.size() : eol) - pos;
        std::string_view line = body.substr(pos, len);
        std::size_t indent = line.find_first_not_of(" \t");
        if (indent != std::string_view::npos) common = std::min(common, indent);
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    if (common == std::string::npos || common == 0) return std::string(body);
    std::string out;
    pos = 0;
    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        std::size_t len = (eol == std::string_view::npos ? body.size() : eol) - pos;
        std::string_view line = body.substr(pos, len);
        std::size_t indent = line.find_first_not_of(" \t");
        if (indent == std::string_view::npos)
            out.append(line);
        else
            out.append(line.substr(std::min(common, indent)));
        if (eol == std::string_view::npos) break;
        out.push_back('\n');
        pos = eol + 1;
    }
    return out;
}

BodyNode parse_body(std::string_view body) {
    std::vector<Token> toks = tokenize(dedent(body));
    std::vector<Token> filtered;
    filtered.reserve(toks.size());
    for (Token& t : toks)
        if (t.kind != TK::Comment) filtered.push_back(std::move(t));
    return BodyParser(std::move(filtered)).run();
}

std::vector<LogicalLine> logical_lines(std::string_view body) {
    std::vector<Token> toks = tokenize(dedent(body));
    std::vector<LogicalLine> lines;
    bool open = false;
    for (Token& t : toks) {
        if (t.kind == TK::Newline) {
            open = false;
            continue;
        }
        if (t.kind == TK::Indent || t.kind == TK::Dedent || t.kind == TK::Comment ||
            t.kind == TK::EndMarker)
            continue;
        if (!open) {
            lines.push_back({t.line, {}});
            open = true;
        }
        lines.back().tokens.push_back(std::move(t));
    }
    return lines;
}

}  // namespace idecoder::syntax
