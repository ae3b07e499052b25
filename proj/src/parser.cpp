#include "idecoder/parser.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "idecoder/errors.hpp"
#include "idecoder/lexer.hpp"

namespace idecoder::syntax {

namespace {

using TK = TokenKind;

bool is_open(const Token& t) {
    return t.kind == TK::Punct && (t.text == "(" || t.text == "[" || t.text == "{");
}
bool is_close(const Token& t) {
    return t.kind == TK::Punct && (t.text == ")" || t.text == "]" || t.text == "}");
}

std::string trim(std::string s) {
    auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\\'; };
    std::size_t b = 0, e = s.size();
    while (b < e && issp(s[b])) ++b;
    while (e > b && issp(s[e - 1])) --e;
    return s.substr(b, e - b);
}

class Parser {
public:
    Parser(std::string source, std::string path) {
        ast_.source = normalize_newlines(source);
        ast_.path = std::move(path);
        raw_ = tokenize(ast_.source);
        for (const Token& t : raw_)
            if (t.kind != TK::Comment) toks_.push_back(t);
    }

    ModuleAst run() {
        parse_suite_into(nullptr, /*module_level=*/true);
        dedupe();
        extract_occurrences();
        return std::move(ast_);
    }

private:
    ModuleAst ast_;
    std::vector<Token> raw_;    // full stream, comments included
    std::vector<Token> toks_;   // comments filtered out
    std::size_t i_ = 0;
    bool first_stmt_seen_ = false;
    std::vector<LineSpan> import_spans_;
    std::set<std::pair<int, int>> declared_positions_;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t idx = i_ + ahead;
        return toks_[std::min(idx, toks_.size() - 1)];
    }
    const Token& get() { return toks_[std::min(i_++, toks_.size() - 1)]; }
    bool at_end() const { return peek().kind == TK::EndMarker; }

    [[noreturn]] void fail(const std::string& expected) const {
        throw ParseError(peek().line, peek().col, expected);
    }

    void expect_punct(std::string_view text) {
        if (!peek().is(TK::Punct, text)) fail("'" + std::string(text) + "'");
        get();
    }

    void skip_blank_lines() {
        while (peek().kind == TK::Newline) get();
    }

    // Parses statements of one suite. `cls` is the enclosing class for class
    // bodies, null at module level. Caller has consumed the Indent for class
    // bodies; the matching Dedent is consumed here.
    void parse_suite_into(ClassDecl* cls, bool module_level) {
        for (;;) {
            skip_blank_lines();
            if (at_end()) {
                if (!module_level) fail("dedent");
                return;
            }
            if (peek().kind == TK::Dedent) {
                get();
                if (!module_level) return;
                continue;
            }
            parse_statement(cls);
        }
    }

    void parse_statement(ClassDecl* cls) {
        bool first = !first_stmt_seen_;
        first_stmt_seen_ = true;

        std::vector<std::string> decorators;
        while (peek().is(TK::Operator, "@")) decorators.push_back(parse_decorator());

        const Token& t = peek();
        if (t.is(TK::Keyword, "async") && peek(1).is(TK::Keyword, "def")) {
            get();
            add_function(parse_function(std::move(decorators), cls != nullptr), cls);
            return;
        }
        if (t.is(TK::Keyword, "def")) {
            add_function(parse_function(std::move(decorators), cls != nullptr), cls);
            return;
        }
        if (t.is(TK::Keyword, "class")) {
            ClassDecl inner = parse_class();
            if (cls)
                cls->nested_classes.push_back(std::move(inner));
            else
                ast_.classes.push_back(std::move(inner));
            return;
        }
        if (!decorators.empty()) {
            // Decorated non-declaration: treat the decorated statement as opaque.
            parse_opaque(cls);
            return;
        }
        if (t.is(TK::Keyword, "import")) {
            parse_plain_import();
            return;
        }
        if (t.is(TK::Keyword, "from")) {
            parse_from_import();
            return;
        }
        if (t.kind == TK::String && peek(1).kind == TK::Newline) {
            std::string value = string_literal_value(t.text);
            if (first)
                ast_.module_docstring = value;
            else if (cls && !cls->docstring && cls->methods.empty() && cls->attributes.empty())
                cls->docstring = value;
            get();
            get();
            return;
        }
        if (t.kind == TK::Identifier && peek(1).is(TK::Operator, "=")) {
            parse_variable(cls, /*annotated=*/false);
            return;
        }
        if (t.kind == TK::Identifier && peek(1).is(TK::Punct, ":")) {
            parse_variable(cls, /*annotated=*/true);
            return;
        }
        parse_opaque(cls);
    }

    std::string parse_decorator() {
        get();  // '@'
        std::string name = parse_dotted_name("decorator name");
        // Arguments and anything else on the decorator line are skipped.
        while (peek().kind != TK::Newline && !at_end()) get();
        if (peek().kind == TK::Newline) get();
        return name;
    }

    std::string parse_dotted_name(const std::string& what) {
        if (peek().kind != TK::Identifier) fail(what);
        std::string name = get().text;
        while (peek().is(TK::Punct, ".") && peek(1).kind == TK::Identifier) {
            get();
            name += "." + get().text;
        }
        return name;
    }

    void add_function(FunctionDecl fn, ClassDecl* cls) {
        if (cls) {
            fn.is_method = true;
            cls->methods.push_back(std::move(fn));
        } else {
            ast_.functions.push_back(std::move(fn));
        }
    }

    // Source text between two token offsets, trimmed.
    std::string slice(std::size_t begin, std::size_t end) const {
        if (end <= begin) return "";
        return trim(ast_.source.substr(begin, end - begin));
    }

    FunctionDecl parse_function(std::vector<std::string> decorators, bool is_method) {
        FunctionDecl fn;
        fn.decorators = std::move(decorators);
        fn.is_method = is_method;
        fn.def_line = peek().line;
        get();  // 'def'
        if (peek().kind != TK::Identifier) fail("function name");
        declared_positions_.insert({peek().line, peek().col});
        fn.name = get().text;
        expect_punct("(");
        parse_params(fn);
        if (peek().is(TK::Operator, "->")) {
            get();
            std::size_t begin = peek().offset;
            std::size_t end = begin;
            int depth = 0;
            while (!at_end()) {
                const Token& tok = peek();
                if (depth == 0 && tok.is(TK::Punct, ":")) break;
                if (tok.kind == TK::Newline) fail("':'");
                if (is_open(tok)) ++depth;
                if (is_close(tok)) --depth;
                end = tok.offset + tok.text.size();
                get();
            }
            fn.return_annotation = slice(begin, end);
        }
        if (!peek().is(TK::Punct, ":")) fail("':'");
        fn.signature_end_line = peek().line;
        get();
        parse_function_body(fn);
        return fn;
    }

    void parse_params(FunctionDecl& fn) {
        while (!peek().is(TK::Punct, ")")) {
            if (at_end() || peek().kind == TK::Newline) fail("')'");
            ParamKind kind = ParamKind::Normal;
            if (peek().is(TK::Operator, "**")) {
                get();
                kind = ParamKind::KwVarArg;
            } else if (peek().is(TK::Operator, "*")) {
                get();
                if (peek().is(TK::Punct, ",")) {  // bare * keyword-only marker
                    get();
                    continue;
                }
                if (peek().is(TK::Punct, ")")) break;
                kind = ParamKind::VarArg;
            } else if (peek().is(TK::Operator, "/")) {
                get();
                if (peek().is(TK::Punct, ",")) get();
                continue;
            }
            if (peek().kind != TK::Identifier) fail("parameter name");
            Parameter p;
            p.kind = kind;
            declared_positions_.insert({peek().line, peek().col});
            p.name = get().text;
            if (peek().is(TK::Punct, ":")) {
                get();
                p.annotation = collect_param_text(/*stop_at_eq=*/true);
            }
            if (peek().is(TK::Operator, "=")) {
                get();
                p.default_text = collect_param_text(/*stop_at_eq=*/false);
            }
            fn.params.push_back(std::move(p));
            if (peek().is(TK::Punct, ",")) get();
        }
        expect_punct(")");
    }

    // Text of an annotation or default inside a parameter list; stops at a
    // top-level ',' or the closing ')' (and '=' when requested).
    std::string collect_param_text(bool stop_at_eq) {
        std::size_t begin = peek().offset;
        std::size_t end = begin;
        int depth = 0;
        while (!at_end()) {
            const Token& tok = peek();
            if (depth == 0) {
                if (tok.is(TK::Punct, ",") || tok.is(TK::Punct, ")")) break;
                if (stop_at_eq && tok.is(TK::Operator, "=")) break;
            }
            if (tok.kind == TK::Newline) fail("')'");
            if (is_open(tok)) ++depth;
            if (is_close(tok)) {
                if (depth == 0) break;
                --depth;
            }
            end = tok.offset + tok.text.size();
            get();
        }
        return slice(begin, end);
    }

    void parse_function_body(FunctionDecl& fn) {
        if (peek().kind != TK::Newline) {
            // One-line body: def f(): return 1
            fn.body_span.first = fn.body_span.last = peek().line;
            consume_logical_line();
            return;
        }
        get();  // newline
        skip_blank_lines();
        if (peek().kind != TK::Indent) fail("indented body");
        get();
        fn.body_span.first = peek().line;
        // Docstring: first statement of the suite.
        if (peek().kind == TK::String &&
            (peek(1).kind == TK::Newline || peek(1).kind == TK::Dedent)) {
            fn.docstring = string_literal_value(peek().text);
        }
        int last = consume_block();
        fn.body_span.last = std::max(last, fn.body_span.first);
    }

    // Consumes a block opened by an already-consumed Indent through its
    // matching Dedent; returns the last line holding a content token.
    int consume_block() {
        int depth = 1;
        int last = peek().line;
        while (!at_end()) {
            const Token& tok = get();
            if (tok.kind == TK::Indent) ++depth;
            else if (tok.kind == TK::Dedent) {
                if (--depth == 0) break;
            } else if (tok.kind != TK::Newline) {
                last = tok.line;
            }
        }
        return last;
    }

    void consume_logical_line() {
        while (peek().kind != TK::Newline && !at_end()) get();
        if (peek().kind == TK::Newline) get();
    }

    ClassDecl parse_class() {
        ClassDecl cls;
        cls.def_line = peek().line;
        cls.span.first = cls.def_line;
        get();  // 'class'
        if (peek().kind != TK::Identifier) fail("class name");
        declared_positions_.insert({peek().line, peek().col});
        cls.name = get().text;
        if (peek().is(TK::Punct, "(")) {
            get();
            while (!peek().is(TK::Punct, ")")) {
                if (at_end() || peek().kind == TK::Newline) fail("')'");
                if (peek().kind == TK::Identifier) {
                    // keyword arguments (metaclass=...) are consumed, not recorded
                    if (peek(1).is(TK::Operator, "=")) {
                        skip_base_entry();
                    } else {
                        cls.bases.push_back(parse_dotted_name("base class name"));
                        if (!peek().is(TK::Punct, ",") && !peek().is(TK::Punct, ")"))
                            skip_base_entry();
                    }
                } else {
                    skip_base_entry();
                }
                if (peek().is(TK::Punct, ",")) get();
            }
            get();  // ')'
        }
        if (!peek().is(TK::Punct, ":")) fail("':'");
        get();
        if (peek().kind != TK::Newline) {
            // One-line class body degrades to an opaque remainder.
            cls.span.last = peek().line;
            consume_logical_line();
            return cls;
        }
        get();
        skip_blank_lines();
        if (peek().kind != TK::Indent) fail("indented body");
        get();
        std::size_t before = i_;
        parse_suite_into(&cls, /*module_level=*/false);
        cls.span.last = cls.def_line;
        for (std::size_t k = before; k < i_ && k < toks_.size(); ++k) {
            const Token& tok = toks_[k];
            if (tok.kind != TK::Newline && tok.kind != TK::Indent && tok.kind != TK::Dedent &&
                tok.kind != TK::EndMarker)
                cls.span.last = std::max(cls.span.last, tok.line);
        }
        return cls;
    }

    void skip_base_entry() {
        int depth = 0;
        while (!at_end()) {
            const Token& tok = peek();
            if (depth == 0 && (tok.is(TK::Punct, ",") || tok.is(TK::Punct, ")"))) return;
            if (tok.kind == TK::Newline) fail("')'");
            if (is_open(tok)) ++depth;
            if (is_close(tok)) --depth;
            get();
        }
    }

    void parse_plain_import() {
        int first_line = peek().line;
        get();  // 'import'
        for (;;) {
            ImportDecl decl;
            decl.is_from = false;
            decl.line = peek().line;
            decl.col = peek().col;
            decl.module_path = parse_dotted_name("module name");
            if (peek().is(TK::Keyword, "as")) {
                get();
                if (peek().kind != TK::Identifier) fail("import alias");
                decl.module_alias = get().text;
            }
            ast_.imports.push_back(std::move(decl));
            if (!peek().is(TK::Punct, ",")) break;
            get();
        }
        if (peek().kind != TK::Newline && !at_end()) fail("newline");
        import_spans_.push_back({first_line, peek().line});
        if (peek().kind == TK::Newline) get();
    }

    void parse_from_import() {
        ImportDecl decl;
        decl.is_from = true;
        decl.line = peek().line;
        decl.col = peek().col;
        int first_line = peek().line;
        get();  // 'from'
        while (peek().is(TK::Punct, ".") || peek().is(TK::Punct, "...")) {
            decl.relative_dots += peek().text == "..." ? 3 : 1;
            get();
        }
        if (peek().kind == TK::Identifier) decl.module_path = parse_dotted_name("module name");
        if (decl.relative_dots == 0 && decl.module_path.empty()) fail("module name");
        if (!peek().is(TK::Keyword, "import")) fail("'import'");
        get();
        if (peek().is(TK::Operator, "*")) {
            get();
            decl.imported_names.emplace_back("*", std::nullopt);
        } else {
            bool parens = peek().is(TK::Punct, "(");
            if (parens) get();
            for (;;) {
                if (peek().kind != TK::Identifier) fail("imported name");
                std::string name = get().text;
                std::optional<std::string> alias;
                if (peek().is(TK::Keyword, "as")) {
                    get();
                    if (peek().kind != TK::Identifier) fail("import alias");
                    alias = get().text;
                }
                decl.imported_names.emplace_back(std::move(name), std::move(alias));
                if (peek().is(TK::Punct, ",")) {
                    get();
                    if (parens && peek().is(TK::Punct, ")")) break;
                    continue;
                }
                break;
            }
            if (parens) expect_punct(")");
        }
        if (peek().kind != TK::Newline && !at_end()) fail("newline");
        import_spans_.push_back({first_line, peek().line});
        if (peek().kind == TK::Newline) get();
        ast_.imports.push_back(std::move(decl));
    }

    void parse_variable(ClassDecl* cls, bool annotated) {
        VariableDecl var;
        var.line = peek().line;
        declared_positions_.insert({peek().line, peek().col});
        var.name = get().text;
        if (annotated) {
            get();  // ':'
            std::size_t begin = peek().offset;
            std::size_t end = begin;
            int depth = 0;
            while (!at_end()) {
                const Token& tok = peek();
                if (depth == 0 && (tok.is(TK::Operator, "=") || tok.kind == TK::Newline)) break;
                if (is_open(tok)) ++depth;
                if (is_close(tok)) --depth;
                end = tok.offset + tok.text.size();
                get();
            }
            var.annotation = slice(begin, end);
        }
        if (peek().is(TK::Operator, "=")) {
            get();
            if (peek().kind == TK::Identifier) {
                std::size_t save = i_;
                std::string callee = parse_dotted_name("name");
                if (peek().is(TK::Punct, "(")) var.constructor = callee;
                i_ = save;
            }
        }
        consume_logical_line();
        if (cls)
            cls->attributes.push_back(std::move(var));
        else
            ast_.variables.push_back(std::move(var));
    }

    // Anything outside the supported subset: records the statement's line
    // span, including any indented suite hanging off it.
    void parse_opaque(ClassDecl*) {
        LineSpan span{peek().line, peek().line};
        while (peek().kind != TK::Newline && !at_end()) {
            span.last = peek().line;
            get();
        }
        if (peek().kind == TK::Newline) get();
        skip_blank_lines();
        if (peek().kind == TK::Indent) {
            get();
            span.last = std::max(span.last, consume_block());
            // elif/else/except/finally continuations belong to the same span.
            while (peek().is(TK::Keyword, "elif") || peek().is(TK::Keyword, "else") ||
                   peek().is(TK::Keyword, "except") || peek().is(TK::Keyword, "finally")) {
                while (peek().kind != TK::Newline && !at_end()) {
                    span.last = peek().line;
                    get();
                }
                if (peek().kind == TK::Newline) get();
                skip_blank_lines();
                if (peek().kind == TK::Indent) {
                    get();
                    span.last = std::max(span.last, consume_block());
                }
            }
        }
        ast_.opaque_statements.push_back(span);
    }

    // Last definition wins; the survivor keeps its final source position.
    template <typename T>
    static void dedupe_by_name(std::vector<T>& items) {
        std::vector<T> kept;
        for (std::size_t k = 0; k < items.size(); ++k) {
            bool redefined_later = false;
            for (std::size_t j = k + 1; j < items.size() && !redefined_later; ++j)
                redefined_later = items[j].name == items[k].name;
            if (!redefined_later) kept.push_back(std::move(items[k]));
        }
        items = std::move(kept);
    }

    void dedupe() {
        dedupe_by_name(ast_.functions);
        dedupe_by_name(ast_.variables);
        dedupe_by_name(ast_.classes);
        for (ClassDecl& cls : ast_.classes) dedupe_class(cls);
    }

    static void dedupe_class(ClassDecl& cls) {
        dedupe_by_name(cls.methods);
        dedupe_by_name(cls.attributes);
        dedupe_by_name(cls.nested_classes);
        for (ClassDecl& inner : cls.nested_classes) dedupe_class(inner);
    }

    bool in_import_line(int line) const {
        for (const LineSpan& s : import_spans_)
            if (s.contains(line)) return true;
        return false;
    }

    // Token-wise identifier chains NAME (DOT NAME)*, skipping declaration
    // names, import statements, keyword-argument labels, assignment targets
    // and lambda parameter lists.
    void extract_occurrences() {
        int bracket_depth = 0;
        bool line_start = true;
        int lambda_depth = -1;
        for (std::size_t k = 0; k < raw_.size(); ++k) {
            const Token& t = raw_[k];
            if (is_open(t)) ++bracket_depth;
            if (is_close(t)) bracket_depth = std::max(0, bracket_depth - 1);
            if (t.kind == TK::Newline || t.kind == TK::Indent || t.kind == TK::Dedent) {
                line_start = true;
                continue;
            }
            if (t.kind == TK::Comment) continue;
            if (t.is(TK::Keyword, "lambda")) lambda_depth = bracket_depth;
            if (lambda_depth >= 0) {
                if (t.is(TK::Punct, ":") && bracket_depth == lambda_depth) lambda_depth = -1;
                line_start = false;
                continue;
            }
            bool at_line_start = line_start;
            line_start = false;
            if (t.kind != TK::Identifier) continue;
            if (in_import_line(t.line)) continue;
            if (declared_positions_.count({t.line, t.col})) continue;
            if (k > 0 && (raw_[k - 1].is(TK::Keyword, "def") || raw_[k - 1].is(TK::Keyword, "class")))
                continue;

            IdentifierOccurrence occ;
            occ.line = t.line;
            occ.col = t.col;
            occ.chain.push_back(t.text);
            std::size_t j = k;
            while (j + 2 < raw_.size() && raw_[j + 1].is(TK::Punct, ".") &&
                   raw_[j + 2].kind == TK::Identifier) {
                occ.chain.push_back(raw_[j + 2].text);
                j += 2;
            }
            bool next_is_assign = j + 1 < raw_.size() && raw_[j + 1].is(TK::Operator, "=");
            if (occ.chain.size() == 1 && next_is_assign &&
                (at_line_start || bracket_depth > 0)) {
                // assignment target or keyword-argument label
                k = j;
                continue;
            }
            if (occ.chain.size() == 1 && at_line_start && j + 1 < raw_.size() &&
                raw_[j + 1].is(TK::Punct, ":") && bracket_depth == 0) {
                // annotated assignment target
                k = j;
                continue;
            }
            ast_.occurrences.push_back(std::move(occ));
            k = j;
        }
    }
};

}  // namespace

ModuleAst parse_module(std::string_view source, std::string path) {
    return Parser(std::string(source), std::move(path)).run();
}

int function_line_count(const FunctionDecl& decl) { return decl.body_span.length(); }

std::string string_literal_value(std::string_view text) {
    std::size_t i = 0;
    bool raw = false;
    while (i < text.size() && text[i] != '"' && text[i] != '\'') {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
        if (l == 'r') raw = true;
        ++i;
    }
    if (i >= text.size()) return std::string(text);
    char quote = text[i];
    std::size_t quotes = 1;
    if (i + 2 < text.size() && text[i + 1] == quote && text[i + 2] == quote) quotes = 3;
    std::size_t begin = i + quotes;
    std::size_t end = text.size() >= begin + quotes ? text.size() - quotes : begin;
    std::string out;
    for (std::size_t k = begin; k < end; ++k) {
        char c = text[k];
        if (c == '\\' && !raw && k + 1 < end) {
            char n = text[++k];
            switch (n) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '\\': out.push_back('\\'); break;
                case '\'': out.push_back('\''); break;
                case '"': out.push_back('"'); break;
                case '\n': break;
                default:
                    out.push_back('\\');
                    out.push_back(n);
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string ImportDecl::bound_name() const {
    if (is_from) return "";
    if (module_alias) return *module_alias;
    auto dot = module_path.find('.');
    return dot == std::string::npos ? module_path : module_path.substr(0, dot);
}

}  // namespace idecoder::syntax
