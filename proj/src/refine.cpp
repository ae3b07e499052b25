#include "idecoder/refine.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "idecoder/body.hpp"
#include "idecoder/errors.hpp"
#include "idecoder/lexer.hpp"

namespace idecoder::refine {

using index::RepoIndex;
using index::Symbol;
using index::SymbolKind;
using syntax::Token;
using syntax::TokenKind;

namespace {

const std::unordered_set<std::string_view> kBuiltins = {
    "abs",        "all",       "any",       "ascii",     "bin",          "bool",
    "bytearray",  "bytes",     "callable",  "chr",       "classmethod",  "compile",
    "complex",    "delattr",   "dict",      "dir",       "divmod",       "enumerate",
    "eval",       "exec",      "filter",    "float",     "format",       "frozenset",
    "getattr",    "globals",   "hasattr",   "hash",      "hex",          "id",
    "input",      "int",       "isinstance", "issubclass", "iter",       "len",
    "list",       "locals",    "map",       "max",       "memoryview",   "min",
    "next",       "object",    "oct",       "open",      "ord",          "pow",
    "print",      "property",  "range",     "repr",      "reversed",     "round",
    "set",        "setattr",   "slice",     "sorted",    "staticmethod", "str",
    "sum",        "super",     "tuple",     "type",      "vars",         "zip",
    "Exception",  "BaseException", "ValueError", "TypeError", "KeyError", "IndexError",
    "RuntimeError", "StopIteration", "AttributeError", "NotImplementedError", "OSError",
    "IOError",    "ZeroDivisionError", "ArithmeticError", "NameError", "LookupError",
    "__name__",   "__file__",  "__doc__",
};

struct ChainUse {
    std::vector<std::string> chain;
    std::vector<std::pair<int, int>> positions;  // (line, col) per element
    bool called = false;       // chain immediately followed by '('
    std::size_t call_token = 0;  // token index of that '('
};

// Identifier chains of a completion body, with enough shape kept for the
// arity scan. Mirrors the module parser's occurrence rules.
std::vector<ChainUse> extract_chains(const std::vector<Token>& toks) {
    std::vector<ChainUse> out;
    int depth = 0;
    bool line_start = true;
    int lambda_depth = -1;
    bool import_line = false;
    for (std::size_t k = 0; k < toks.size(); ++k) {
        const Token& t = toks[k];
        if (t.kind == TokenKind::Punct &&
            (t.text == "(" || t.text == "[" || t.text == "{"))
            ++depth;
        if (t.kind == TokenKind::Punct &&
            (t.text == ")" || t.text == "]" || t.text == "}"))
            depth = std::max(0, depth - 1);
        if (t.kind == TokenKind::Newline || t.kind == TokenKind::Indent ||
            t.kind == TokenKind::Dedent) {
            line_start = true;
            import_line = false;
            continue;
        }
        if (t.kind == TokenKind::Comment) continue;
        if (line_start && (t.is(TokenKind::Keyword, "import") || t.is(TokenKind::Keyword, "from")))
            import_line = true;
        if (t.is(TokenKind::Keyword, "lambda")) lambda_depth = depth;
        if (lambda_depth >= 0) {
            if (t.is(TokenKind::Punct, ":") && depth == lambda_depth) lambda_depth = -1;
            line_start = false;
            continue;
        }
        bool at_line_start = line_start;
        line_start = false;
        if (t.kind != TokenKind::Identifier || import_line) continue;
        if (k > 0 && (toks[k - 1].is(TokenKind::Keyword, "def") ||
                      toks[k - 1].is(TokenKind::Keyword, "class")))
            continue;

        ChainUse use;
        use.chain.push_back(t.text);
        use.positions.emplace_back(t.line, t.col);
        std::size_t j = k;
        while (j + 2 < toks.size() && toks[j + 1].is(TokenKind::Punct, ".") &&
               toks[j + 2].kind == TokenKind::Identifier) {
            use.chain.push_back(toks[j + 2].text);
            use.positions.emplace_back(toks[j + 2].line, toks[j + 2].col);
            j += 2;
        }
        bool next_is_assign = j + 1 < toks.size() && toks[j + 1].is(TokenKind::Operator, "=");
        if (use.chain.size() == 1 && next_is_assign && (at_line_start || depth > 0)) {
            k = j;
            continue;
        }
        if (use.chain.size() == 1 && at_line_start && depth == 0 && j + 1 < toks.size() &&
            toks[j + 1].is(TokenKind::Punct, ":")) {
            k = j;
            continue;
        }
        if (j + 1 < toks.size() && toks[j + 1].is(TokenKind::Punct, "(")) {
            use.called = true;
            use.call_token = j + 1;
        }
        out.push_back(std::move(use));
        k = j;
    }
    return out;
}

// Local names bound by the completion itself: assignment targets, loop and
// context-manager targets.
std::set<std::string> completion_locals(const std::vector<Token>& toks) {
    std::set<std::string> names;
    bool line_start = true;
    int depth = 0;
    for (std::size_t k = 0; k < toks.size(); ++k) {
        const Token& t = toks[k];
        if (t.kind == TokenKind::Punct && (t.text == "(" || t.text == "[" || t.text == "{")) ++depth;
        if (t.kind == TokenKind::Punct && (t.text == ")" || t.text == "]" || t.text == "}"))
            depth = std::max(0, depth - 1);
        if (t.kind == TokenKind::Newline || t.kind == TokenKind::Indent ||
            t.kind == TokenKind::Dedent) {
            line_start = true;
            continue;
        }
        if (t.kind == TokenKind::Comment) continue;
        bool at_start = line_start;
        line_start = false;
        if (t.kind != TokenKind::Identifier) continue;
        bool next_assign = k + 1 < toks.size() && (toks[k + 1].is(TokenKind::Operator, "=") ||
                                                   toks[k + 1].is(TokenKind::Punct, ":"));
        if (at_start && depth == 0 && next_assign) names.insert(t.text);
        if (k > 0 && (toks[k - 1].is(TokenKind::Keyword, "for") ||
                      toks[k - 1].is(TokenKind::Keyword, "as")))
            names.insert(t.text);
        // tuple loop targets: for a, b in ...
        if (k + 1 < toks.size() && toks[k + 1].is(TokenKind::Punct, ",") && k > 1 &&
            (toks[k - 1].is(TokenKind::Punct, ",")))
            for (std::size_t b = k; b-- > 0;) {
                if (toks[b].is(TokenKind::Keyword, "for")) {
                    names.insert(t.text);
                    break;
                }
                if (toks[b].kind == TokenKind::Newline || toks[b].is(TokenKind::Keyword, "in"))
                    break;
            }
        // aug-assign target also binds
        if (at_start && depth == 0 && k + 1 < toks.size() &&
            toks[k + 1].kind == TokenKind::Operator && toks[k + 1].text.size() >= 2 &&
            toks[k + 1].text.back() == '=' && toks[k + 1].text != "==" &&
            toks[k + 1].text != "!=" && toks[k + 1].text != "<=" && toks[k + 1].text != ">=")
            names.insert(t.text);
    }
    return names;
}

// Classes bound to completion locals via `x = ClassName(...)`.
std::map<std::string, Symbol> completion_constructor_types(
    const std::vector<syntax::LogicalLine>& lines, const std::string& module,
    const RepoIndex& idx) {
    std::map<std::string, Symbol> types;
    for (const auto& ll : lines) {
        const auto& t = ll.tokens;
        if (t.size() < 4 || t[0].kind != TokenKind::Identifier) continue;
        std::size_t eq = 1;
        if (t[1].is(TokenKind::Punct, ":")) {
            while (eq < t.size() && !t[eq].is(TokenKind::Operator, "=")) ++eq;
        }
        if (eq >= t.size() || !t[eq].is(TokenKind::Operator, "=")) continue;
        std::vector<std::string> chain;
        std::size_t j = eq + 1;
        while (j < t.size() && t[j].kind == TokenKind::Identifier) {
            chain.push_back(t[j].text);
            if (j + 2 < t.size() && t[j + 1].is(TokenKind::Punct, ".") &&
                t[j + 2].kind == TokenKind::Identifier)
                j += 2;
            else
                break;
        }
        if (chain.empty() || j + 1 >= t.size() || !t[j + 1].is(TokenKind::Punct, "(")) continue;
        auto sym = index::resolve_name(chain, {module, ""}, idx);
        if (sym && sym->kind == SymbolKind::Class) types[t[0].text] = *sym;
    }
    return types;
}

struct LintEnv {
    const RepoIndex& idx;
    const context::CompletionPoint& point;
    std::string enclosing_class;  // qualified, empty unless method
    const syntax::ModuleAst* ast = nullptr;
    const syntax::FunctionDecl* fn = nullptr;
    std::set<std::string> locals;
    std::map<std::string, Symbol> local_types;  // completion + parameter types
    std::set<std::string> edit_imports;         // names made visible by accepted edits
};

bool head_resolves(const LintEnv& env, const std::string& head) {
    if (kBuiltins.count(head)) return true;
    if (env.locals.count(head)) return true;
    if (env.local_types.count(head)) return true;
    if (env.edit_imports.count(head)) return true;
    if (env.fn)
        for (const auto& p : env.fn->params)
            if (p.name == head) return true;
    if (head == "self" && !env.enclosing_class.empty()) return true;
    if (!env.enclosing_class.empty()) {
        if (const Symbol* cls = env.idx.find_symbol(env.enclosing_class)) {
            try {
                if (lookup_member(*cls, head, env.idx)) return true;
            } catch (const CycleError&) {
            }
        }
    }
    std::string prefix = env.point.module.empty() ? "" : env.point.module + ".";
    if (env.idx.find_symbol(prefix + head)) return true;
    if (env.ast) {
        for (const auto& decl : env.ast->imports) {
            if (!decl.is_from) {
                if (decl.bound_name() == head) return true;
            } else {
                for (const auto& [name, alias] : decl.imported_names)
                    if ((alias ? *alias : name) == head || name == "*") return true;
            }
        }
    }
    return false;
}

// Alphabetically-first module defining a top-level class/function `name`.
std::optional<std::string> unimported_source_module(const LintEnv& env, const std::string& name) {
    for (const auto& [qname, sym] : env.idx.symbols) {
        if (sym.kind != SymbolKind::Class && sym.kind != SymbolKind::Function) continue;
        if (sym.module == env.point.module || sym.module.empty()) continue;
        std::string expect = sym.module + "." + name;
        if (qname == expect) return sym.module;
    }
    return std::nullopt;
}

const Symbol* chain_head_class(const LintEnv& env, const std::string& head,
                               std::optional<Symbol>& storage) {
    auto it = env.local_types.find(head);
    if (it != env.local_types.end()) {
        storage = it->second;
        return &*storage;
    }
    if (head == "self" && !env.enclosing_class.empty())
        return env.idx.find_symbol(env.enclosing_class);
    return nullptr;
}

// Final symbol a called chain denotes, for the arity check.
std::optional<Symbol> resolve_called_chain(const LintEnv& env, const ChainUse& use) {
    std::optional<Symbol> storage;
    const Symbol* head_cls = chain_head_class(env, use.chain.front(), storage);
    if (head_cls && use.chain.size() >= 2) {
        const Symbol* cls = head_cls;
        for (std::size_t i = 1; i < use.chain.size(); ++i) {
            std::optional<Symbol> member;
            try {
                member = lookup_member(*cls, use.chain[i], env.idx);
            } catch (const CycleError&) {
                return std::nullopt;
            }
            if (!member) return std::nullopt;
            if (i + 1 == use.chain.size()) return member;
            return std::nullopt;  // deeper walks are outside the countable subset
        }
    }
    if (head_cls) return std::nullopt;
    index::Scope scope{env.point.module, ""};
    auto sym = index::resolve_name(use.chain, scope, env.idx);
    if (sym) return sym;
    if (!env.enclosing_class.empty() && use.chain.size() == 1) {
        if (const Symbol* cls = env.idx.find_symbol(env.enclosing_class)) {
            try {
                return lookup_member(*cls, use.chain.front(), env.idx);
            } catch (const CycleError&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

struct ArgCount {
    bool countable = false;
    int count = 0;
};

ArgCount count_call_args(const std::vector<Token>& toks, std::size_t open_paren) {
    ArgCount result;
    int depth = 0;
    int args = 0;
    bool any_token = false;
    for (std::size_t k = open_paren; k < toks.size(); ++k) {
        const Token& t = toks[k];
        if (t.kind == TokenKind::Punct && (t.text == "(" || t.text == "[" || t.text == "{")) {
            ++depth;
            continue;
        }
        if (t.kind == TokenKind::Punct && (t.text == ")" || t.text == "]" || t.text == "}")) {
            --depth;
            if (depth == 0) {
                result.countable = true;
                result.count = any_token ? args + 1 : 0;
                return result;
            }
            continue;
        }
        if (depth == 1) {
            if (t.is(TokenKind::Operator, "*") || t.is(TokenKind::Operator, "**") ||
                t.is(TokenKind::Keyword, "lambda"))
                return result;  // not countable
            if (t.is(TokenKind::Punct, ",")) {
                // trailing comma: peek the next significant token
                if (k + 1 < toks.size() && toks[k + 1].is(TokenKind::Punct, ")")) continue;
                ++args;
                continue;
            }
            if (t.kind == TokenKind::Newline || t.kind == TokenKind::EndMarker) return result;
            any_token = true;
        }
        if (t.kind == TokenKind::EndMarker) return result;
    }
    return result;
}

struct Arity {
    int min = 0;
    int max = 0;  // INT_MAX with *args / **kwargs
};

std::optional<Arity> declared_arity(const LintEnv& env, const Symbol& sym) {
    if (sym.kind == SymbolKind::Class) {
        std::optional<Symbol> init;
        try {
            init = lookup_member(sym, "__init__", env.idx);
        } catch (const CycleError&) {
            return std::nullopt;
        }
        if (!init) return std::nullopt;
        return declared_arity(env, *init);
    }
    if (sym.kind != SymbolKind::Function && sym.kind != SymbolKind::Method) return std::nullopt;
    const syntax::FunctionDecl* fn = index::find_function(env.idx, sym.module, sym.qualified_name);
    if (!fn) return std::nullopt;
    Arity arity;
    bool skip_first = fn->is_method;
    for (const auto& p : fn->params) {
        if (skip_first) {
            skip_first = false;
            continue;
        }
        if (p.kind != syntax::ParamKind::Normal) {
            arity.max = INT_MAX;
            continue;
        }
        if (!p.default_text) ++arity.min;
        if (arity.max != INT_MAX) ++arity.max;
    }
    return arity;
}

std::vector<Diagnostic> lint_impl(const std::string& completion,
                                  const context::CompletionPoint& point, const RepoIndex& idx,
                                  const std::vector<ImportEdit>& accepted_edits) {
    std::vector<Diagnostic> diags;
    int completion_lines =
        1 + static_cast<int>(std::count(completion.begin(), completion.end(), '\n'));

    // (1) must parse as a function body under the subset
    try {
        syntax::parse_body(completion);
    } catch (const SourceError& e) {
        Diagnostic d;
        d.kind = DiagnosticKind::SyntaxErrorD;
        d.line = std::clamp(e.line, 1, completion_lines);
        d.col = std::max(1, e.col);
        d.message = e.what();
        diags.push_back(std::move(d));
        return diags;
    }

    LintEnv env{idx, point};
    env.ast = idx.find_module(point.module);
    env.fn = index::find_function(idx, point.module, point.function);
    if (env.fn && env.fn->is_method) {
        std::string rest = point.function;
        std::string prefix = point.module + ".";
        if (rest.compare(0, prefix.size(), prefix) == 0) rest = rest.substr(prefix.size());
        auto dot = rest.rfind('.');
        if (dot != std::string::npos)
            env.enclosing_class = prefix + rest.substr(0, dot);
    }
    for (const ImportEdit& edit : accepted_edits) {
        // "from X import Y" makes Y visible
        auto import_kw = edit.text.rfind(" import ");
        if (import_kw != std::string::npos) {
            std::string name = edit.text.substr(import_kw + 8);
            while (!name.empty() && (name.back() == ' ' || name.back() == '\n')) name.pop_back();
            env.edit_imports.insert(name);
        }
    }

    std::string dedented = syntax::dedent(completion);
    std::vector<Token> toks = syntax::tokenize(dedented);
    env.locals = completion_locals(toks);
    auto lines = syntax::logical_lines(completion);
    env.local_types = completion_constructor_types(lines, point.module, idx);
    if (env.fn) {
        for (const auto& p : env.fn->params) {
            if (env.local_types.count(p.name)) continue;  // completion assignment wins
            auto cls = index::local_binding_class(p.name, *env.fn, point.module, idx);
            if (cls) env.local_types[p.name] = *cls;
        }
    }

    std::vector<ChainUse> chains = extract_chains(toks);

    // (2) heads must resolve in scope
    for (const ChainUse& use : chains) {
        const std::string& head = use.chain.front();
        if (head_resolves(env, head)) continue;
        Diagnostic d;
        d.line = use.positions.front().first;
        d.col = use.positions.front().second;
        if (auto module = unimported_source_module(env, head)) {
            d.kind = DiagnosticKind::UnimportedUsage;
            d.message = "'" + head + "' is defined in " + *module + " but not imported";
            d.suggested_fix = "from " + *module + " import " + head;
        } else {
            d.kind = DiagnosticKind::UndefinedName;
            d.message = "name '" + head + "' is not defined";
        }
        diags.push_back(std::move(d));
    }

    // (3) literal-call arity against declared parameters
    for (const ChainUse& use : chains) {
        if (!use.called || !head_resolves(env, use.chain.front())) continue;
        auto sym = resolve_called_chain(env, use);
        if (!sym) continue;
        auto arity = declared_arity(env, *sym);
        if (!arity) continue;
        ArgCount args = count_call_args(toks, use.call_token);
        if (!args.countable) continue;
        if (args.count < arity->min || args.count > arity->max) {
            Diagnostic d;
            d.kind = DiagnosticKind::ArityMismatch;
            d.line = use.positions.back().first;
            d.col = use.positions.back().second;
            std::string expect = arity->max == INT_MAX
                                     ? "at least " + std::to_string(arity->min)
                                     : (arity->min == arity->max
                                            ? std::to_string(arity->min)
                                            : std::to_string(arity->min) + ".." +
                                                  std::to_string(arity->max));
            d.message = "'" + use.chain.back() + "' takes " + expect + " argument(s), got " +
                        std::to_string(args.count);
            diags.push_back(std::move(d));
        }
    }

    // (4) attribute access on locals of known class type
    for (const ChainUse& use : chains) {
        if (use.chain.size() < 2) continue;
        std::optional<Symbol> storage;
        const Symbol* cls = chain_head_class(env, use.chain.front(), storage);
        if (!cls) continue;
        for (std::size_t i = 1; i < use.chain.size(); ++i) {
            std::optional<Symbol> member;
            try {
                member = lookup_member(*cls, use.chain[i], env.idx);
            } catch (const CycleError&) {
                break;
            }
            if (!member) {
                Diagnostic d;
                d.kind = DiagnosticKind::UnknownAttribute;
                d.line = use.positions[i].first;
                d.col = use.positions[i].second;
                d.message = "'" + cls->qualified_name + "' has no attribute '" + use.chain[i] + "'";
                diags.push_back(std::move(d));
                break;
            }
            if (i + 1 == use.chain.size()) break;
            // continue only through attributes with a known class type
            if (member->kind != SymbolKind::Variable) break;
            auto next = index::member_value_class(*member, idx);
            if (!next) break;
            storage = std::move(next);
            cls = &*storage;
        }
    }

    return diags;
}

}  // namespace

std::string_view to_string(DiagnosticKind kind) {
    switch (kind) {
        case DiagnosticKind::SyntaxErrorD: return "SyntaxError";
        case DiagnosticKind::UndefinedName: return "UndefinedName";
        case DiagnosticKind::UnimportedUsage: return "UnimportedUsage";
        case DiagnosticKind::ArityMismatch: return "ArityMismatch";
        case DiagnosticKind::UnknownAttribute: return "UnknownAttribute";
    }
    return "?";
}

std::string Diagnostic::render() const {
    return std::string(to_string(kind)) + " at " + std::to_string(line) + ":" +
           std::to_string(col) + ": " + message;
}

std::vector<Diagnostic> lint_completion(const std::string& completion,
                                        const context::CompletionPoint& point,
                                        const RepoIndex& index) {
    return lint_impl(completion, point, index, {});
}

std::vector<Diagnostic> lint_completion(const std::string& completion,
                                        const context::CompletionPoint& point,
                                        const RepoIndex& index,
                                        const std::vector<ImportEdit>& accepted_edits) {
    return lint_impl(completion, point, index, accepted_edits);
}

std::pair<std::vector<ImportEdit>, std::vector<Diagnostic>> auto_import(
    const std::string& completion, const std::vector<Diagnostic>& diagnostics,
    const context::CompletionPoint& point, const index::RepoIndex& idx) {
    (void)completion;
    std::vector<ImportEdit> edits;
    std::vector<Diagnostic> remaining;
    int last_import_line = 0;
    if (const syntax::ModuleAst* ast = idx.find_module(point.module))
        for (const auto& decl : ast->imports) last_import_line = std::max(last_import_line, decl.line);
    for (const Diagnostic& d : diagnostics) {
        if (d.kind != DiagnosticKind::UnimportedUsage || !d.suggested_fix) {
            remaining.push_back(d);
            continue;
        }
        bool dup = false;
        for (const ImportEdit& e : edits) dup |= e.text == *d.suggested_fix;
        if (!dup) edits.push_back({last_import_line, *d.suggested_fix});
    }
    return {std::move(edits), std::move(remaining)};
}

RefineTrace refine_loop(const context::CompletionPoint& point, const prompt::PromptPlan& plan,
                        const llm::BackendConfig& backend, const index::RepoIndex& idx,
                        int max_iters) {
    RefineTrace trace;
    std::string prompt_text = plan.realized;

    auto call_backend = [&](int iteration) {
        try {
            return llm::complete(prompt_text, backend);
        } catch (const TransportError& e) {
            throw TransportError("iteration " + std::to_string(iteration) + ": " + e.what());
        } catch (const ProtocolError& e) {
            throw ProtocolError("iteration " + std::to_string(iteration) + ": " + e.what());
        }
    };

    auto merge_edits = [&](std::vector<ImportEdit> edits) {
        for (ImportEdit& e : edits) {
            bool dup = false;
            for (const ImportEdit& have : trace.import_edits) dup |= have.text == e.text;
            if (!dup) trace.import_edits.push_back(std::move(e));
        }
    };

    int iteration = 0;
    std::string completion = call_backend(iteration);
    auto diags = lint_completion(completion, point, idx, trace.import_edits);
    auto [edits, remaining] = auto_import(completion, diags, point, idx);
    merge_edits(std::move(edits));
    trace.iterations.push_back({completion, remaining, prompt_text});

    while (!trace.iterations.back().diagnostics.empty() && iteration < max_iters) {
        ++iteration;
        std::string rendered;
        for (const Diagnostic& d : trace.iterations.back().diagnostics)
            rendered += d.render() + "\n";
        prompt_text = trace.iterations.back().prompt_used +
                      "## Linter found these issues:\n" + rendered +
                      "## Return the corrected function body:\n";
        completion = call_backend(iteration);
        diags = lint_completion(completion, point, idx, trace.import_edits);
        auto [more_edits, now_remaining] = auto_import(completion, diags, point, idx);
        merge_edits(std::move(more_edits));
        trace.iterations.push_back({completion, now_remaining, prompt_text});
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.iterations.size(); ++i)
        if (trace.iterations[i].diagnostics.size() < trace.iterations[best].diagnostics.size())
            best = i;
    trace.final_completion = trace.iterations[best].completion;
    trace.converged = trace.iterations[best].diagnostics.empty();
    return trace;
}

}  // namespace idecoder::refine
