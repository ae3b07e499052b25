#include "idecoder/context.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "idecoder/body.hpp"
#include "idecoder/errors.hpp"
#include "idecoder/lexer.hpp"

namespace idecoder::context {

using index::RepoIndex;
using index::Symbol;
using index::SymbolKind;
using syntax::ClassDecl;
using syntax::FunctionDecl;
using syntax::ImportDecl;
using syntax::ModuleAst;

namespace {

// Names mentioned by a function: occurrence-chain elements inside its span
// plus identifiers in its own parameter/return annotations.
std::set<std::string> function_reference_names(const FunctionDecl& fn, const ModuleAst& ast) {
    std::set<std::string> names;
    int first = fn.def_line;
    int last = std::max(fn.body_span.last, fn.signature_end_line);
    for (const auto& occ : ast.occurrences)
        if (occ.line >= first && occ.line <= last)
            for (const std::string& part : occ.chain) names.insert(part);
    auto add_annotation_idents = [&](const std::string& text) {
        std::string word;
        for (char c : text) {
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                word.push_back(c);
            } else {
                if (!word.empty() && !syntax::is_python_keyword(word)) names.insert(word);
                word.clear();
            }
        }
        if (!word.empty() && !syntax::is_python_keyword(word)) names.insert(word);
    };
    for (const auto& p : fn.params)
        if (p.annotation) add_annotation_idents(*p.annotation);
    if (fn.return_annotation) add_annotation_idents(*fn.return_annotation);
    return names;
}

std::set<std::string> file_reference_names_outside(const FunctionDecl& fn, const ModuleAst& ast) {
    std::set<std::string> names;
    int first = fn.def_line;
    int last = std::max(fn.body_span.last, fn.signature_end_line);
    for (const auto& occ : ast.occurrences)
        if (occ.line < first || occ.line > last)
            for (const std::string& part : occ.chain) names.insert(part);
    return names;
}

std::string last_component(const std::string& qualified) {
    auto dot = qualified.rfind('.');
    return dot == std::string::npos ? qualified : qualified.substr(dot + 1);
}

const ClassDecl* find_class_decl(const ModuleAst& ast, const std::string& qname_rest) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : qname_rest) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else
            cur.push_back(c);
    }
    parts.push_back(cur);
    const std::vector<ClassDecl>* level = &ast.classes;
    const ClassDecl* found = nullptr;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        found = nullptr;
        for (const ClassDecl& cls : *level)
            if (cls.name == parts[i]) found = &cls;
        if (!found) return nullptr;
        level = &found->nested_classes;
    }
    return found;
}

// signature + docstring; classes additionally carry member signatures,
// alphabetically first `member_cap` of them.
std::string render_symbol_payload(const Symbol& sym, const RepoIndex& idx, int member_cap) {
    std::string out = sym.signature_text.value_or(sym.qualified_name);
    if (sym.docstring && !sym.docstring->empty()) out += "\n    \"\"\"" + *sym.docstring + "\"\"\"";
    if (sym.kind != SymbolKind::Class) return out;
    const ModuleAst* ast = idx.find_module(sym.module);
    if (!ast) return out;
    std::string rest = sym.qualified_name;
    std::string prefix = sym.module.empty() ? "" : sym.module + ".";
    if (rest.compare(0, prefix.size(), prefix) == 0) rest = rest.substr(prefix.size());
    const ClassDecl* cls = find_class_decl(*ast, rest);
    if (!cls) return out;
    std::vector<std::string> sigs;
    for (const syntax::FunctionDecl& m : cls->methods)
        if (const Symbol* ms = idx.find_symbol(sym.qualified_name + "." + m.name))
            if (ms->signature_text) sigs.push_back(*ms->signature_text);
    std::sort(sigs.begin(), sigs.end());
    if (member_cap >= 0 && static_cast<int>(sigs.size()) > member_cap) sigs.resize(member_cap);
    for (const std::string& sig : sigs) out += "\n    " + sig;
    return out;
}

std::string item_sort_name(const ContextItem& item) {
    if (item.source_symbol) return *item.source_symbol;
    return std::string(to_string(item.kind)) + ":" + item.payload;
}

}  // namespace

std::string_view to_string(ItemKind kind) {
    switch (kind) {
        case ItemKind::FileRole: return "file_role";
        case ItemKind::ModuleDependency: return "module_dependency";
        case ItemKind::UserSymbol: return "user_symbol";
        case ItemKind::LocalType: return "local_type";
        case ItemKind::ThirdParty: return "third_party";
    }
    return "?";
}

std::string summarize_file_role(const ModuleAst& module) {
    if (module.module_docstring && !module.module_docstring->empty())
        return *module.module_docstring;
    std::vector<std::string> names;
    for (const ClassDecl& cls : module.classes) names.push_back(cls.name);
    for (const FunctionDecl& fn : module.functions) names.push_back(fn.name);
    if (names.empty()) return "Defines: (nothing)";
    std::string out = "Defines: ";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

CompletionPoint make_completion_point(const RepoIndex& idx, const std::string& module,
                                      const std::string& function) {
    const ModuleAst* ast = idx.find_module(module);
    if (!ast) throw PointError("module not indexed: " + module);
    const FunctionDecl* fn = index::find_function(idx, module, function);
    if (!fn) throw PointError("function not indexed: " + function + " in " + module);

    CompletionPoint point;
    point.module = module;
    point.function = function.rfind(module + ".", 0) == 0 ? function : module + "." + function;
    point.cursor_line = fn->signature_end_line + 1;
    point.cursor_col = 1;
    std::istringstream src(ast->source);
    std::string line;
    for (int n = 1; std::getline(src, line) && n <= fn->signature_end_line; ++n)
        point.prefix += line + "\n";
    return point;
}

std::map<std::string, std::string> infer_local_types(const FunctionDecl& function,
                                                     const ModuleAst& module,
                                                     const RepoIndex& idx) {
    std::map<std::string, std::string> out;
    for (const auto& p : function.params)
        if (p.annotation) out[p.name] = *p.annotation;
    if (function.body_span.first > 0) {
        std::istringstream src(module.source);
        std::string line, body;
        for (int n = 1; std::getline(src, line); ++n)
            if (function.body_span.contains(n)) body += line + "\n";
        try {
            for (const auto& ll : syntax::logical_lines(body)) {
                const auto& t = ll.tokens;
                if (t.size() < 4 || t[0].kind != syntax::TokenKind::Identifier) continue;
                if (!t[1].is(syntax::TokenKind::Operator, "=")) continue;
                std::string callee;
                std::size_t j = 2;
                while (j < t.size() && t[j].kind == syntax::TokenKind::Identifier) {
                    callee += callee.empty() ? t[j].text : "." + t[j].text;
                    if (j + 2 < t.size() && t[j + 1].is(syntax::TokenKind::Punct, ".") &&
                        t[j + 2].kind == syntax::TokenKind::Identifier)
                        j += 2;
                    else
                        break;
                }
                if (callee.empty() || j + 1 >= t.size() ||
                    !t[j + 1].is(syntax::TokenKind::Punct, "("))
                    continue;
                // Resolve the callee in module scope; only classes count.
                std::vector<std::string> chain;
                std::stringstream cs(callee);
                std::string part;
                while (std::getline(cs, part, '.')) chain.push_back(part);
                std::string dotted_module = index::dotted_module_path(module.path);
                auto sym = index::resolve_name(chain, {dotted_module, ""}, idx);
                if (sym && sym->kind == SymbolKind::Class) out[t[0].text] = callee;
            }
        } catch (const SourceError&) {
        }
    }
    return out;
}

void rank_relevance(std::vector<ContextItem>& items, const CompletionPoint& point,
                    const RepoIndex& idx, const RelevanceWeights& weights) {
    const ModuleAst* ast = idx.find_module(point.module);
    const FunctionDecl* fn = ast ? index::find_function(idx, point.module, point.function) : nullptr;
    std::set<std::string> in_fn, elsewhere;
    if (ast && fn) {
        in_fn = function_reference_names(*fn, *ast);
        elsewhere = file_reference_names_outside(*fn, *ast);
    }
    // aliased imports reference their symbol under the local alias
    std::map<std::string, std::set<std::string>> aliases;
    if (ast) {
        for (const ImportDecl& decl : ast->imports) {
            if (!decl.is_from) continue;
            auto res = index::resolve_import(decl, point.module, idx);
            const auto* ud = std::get_if<index::UserDefined>(&res);
            if (!ud) continue;
            for (const auto& [name, alias] : decl.imported_names)
                if (alias) aliases[ud->module_path + "." + name].insert(*alias);
        }
    }
    auto referenced = [&](const std::set<std::string>& pool, const std::string& name,
                          const std::optional<std::string>& symbol) {
        if (pool.count(name)) return true;
        if (!symbol) return false;
        auto it = aliases.find(*symbol);
        if (it == aliases.end()) return false;
        for (const std::string& alias : it->second)
            if (pool.count(alias)) return true;
        return false;
    };
    for (ContextItem& item : items) {
        std::string name;
        bool user_defined = false;
        switch (item.kind) {
            case ItemKind::FileRole:
                item.relevance = 0.0;
                continue;
            case ItemKind::UserSymbol:
                name = item.source_symbol ? last_component(*item.source_symbol) : item.payload;
                user_defined = true;
                break;
            case ItemKind::LocalType: {
                auto colon = item.payload.find(':');
                std::string type_text =
                    colon == std::string::npos ? item.payload : item.payload.substr(colon + 1);
                name = last_component(type_text);
                while (!name.empty() && name.front() == ' ') name.erase(name.begin());
                user_defined = item.source_symbol.has_value();
                break;
            }
            case ItemKind::ModuleDependency: {
                name = last_component(item.payload);
                user_defined = item.source_symbol.has_value();
                break;
            }
            case ItemKind::ThirdParty: {
                auto eq = item.payload.find("==");
                name = eq == std::string::npos ? item.payload : item.payload.substr(0, eq);
                break;
            }
        }
        double score = 0.0;
        if (referenced(in_fn, name, item.source_symbol)) score += weights.referenced_in_function;
        if (user_defined) score += weights.user_defined;
        if (referenced(elsewhere, name, item.source_symbol)) score += weights.referenced_elsewhere;
        if (item.kind == ItemKind::ThirdParty) score = std::min(score, weights.third_party_cap);
        item.relevance = score;
    }
    std::stable_sort(items.begin(), items.end(), [](const ContextItem& a, const ContextItem& b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        return item_sort_name(a) < item_sort_name(b);
    });
}

CrossFileContext identify_context(const CompletionPoint& point, const RepoIndex& idx,
                                  const ContextOptions& options) {
    const ModuleAst* ast = idx.find_module(point.module);
    if (!ast) throw PointError("module not indexed: " + point.module);
    const FunctionDecl* fn = index::find_function(idx, point.module, point.function);
    if (!fn) throw PointError("function not indexed: " + point.function);

    CrossFileContext ctx;
    ctx.point = point;

    ctx.items.push_back({ItemKind::FileRole, summarize_file_role(*ast), std::nullopt, 0.0});

    std::set<std::string>seen_symbols;
    auto add_user_symbol = [&](const Symbol& sym) {
        const Symbol* target = &sym;
        // Methods fold into their owning class so its full surface is shown.
        if (sym.kind == SymbolKind::Method) {
            auto dot = sym.qualified_name.rfind('.');
            if (const Symbol* cls = idx.find_symbol(sym.qualified_name.substr(0, dot)))
                target = cls;
        }
        if (target->kind != SymbolKind::Class && target->kind != SymbolKind::Function) return;
        if (target->module == point.module) return;  // cross-file context only
        if (!seen_symbols.insert(target->qualified_name).second) return;
        ctx.items.push_back({ItemKind::UserSymbol,
                             render_symbol_payload(*target, idx, options.class_member_cap),
                             target->qualified_name, 0.0});
    };

    for (const ImportDecl& decl : ast->imports) {
        auto res = index::resolve_import(decl, point.module, idx);
        if (const auto* ud = std::get_if<index::UserDefined>(&res)) {
            std::string dep = ud->module_path;
            ctx.items.push_back({ItemKind::ModuleDependency, dep, dep, 0.0});
            if (decl.is_from) {
                for (const auto& [name, alias] : decl.imported_names) {
                    if (name == "*") continue;
                    if (const Symbol* s = idx.find_symbol(ud->module_path + "." + name))
                        add_user_symbol(*s);
                }
            } else {
                const ModuleAst* target = idx.find_module(ud->module_path);
                if (target) {
                    std::string prefix = ud->module_path.empty() ? "" : ud->module_path + ".";
                    for (const ClassDecl& cls : target->classes)
                        if (const Symbol* s = idx.find_symbol(prefix + cls.name))
                            add_user_symbol(*s);
                    for (const FunctionDecl& f : target->functions)
                        if (const Symbol* s = idx.find_symbol(prefix + f.name))
                            add_user_symbol(*s);
                }
            }
        } else if (const auto* tp = std::get_if<index::ThirdParty>(&res)) {
            std::string dep = decl.module_path.empty() ? tp->package : decl.module_path;
            ctx.items.push_back({ItemKind::ModuleDependency, dep, std::nullopt, 0.0});
            std::string payload = tp->package;
            if (tp->version) payload += "==" + *tp->version;
            bool dup = false;
            for (const ContextItem& item : ctx.items)
                dup |= item.kind == ItemKind::ThirdParty && item.payload == payload;
            if (!dup) ctx.items.push_back({ItemKind::ThirdParty, payload, std::nullopt, 0.0});
        }
    }

    // Symbols referenced from the target function's occurrence chains.
    int first = fn->def_line;
    int last = std::max(fn->body_span.last, fn->signature_end_line);
    index::Scope scope{point.module, point.function};
    for (const auto& occ : ast->occurrences) {
        if (occ.line < first || occ.line > last) continue;
        auto sym = index::resolve_name(occ.chain, scope, idx);
        if (sym) add_user_symbol(*sym);
    }

    auto locals = infer_local_types(*fn, *ast, idx);
    for (const auto& [name, type_text] : locals) {
        ContextItem item{ItemKind::LocalType, name + ": " + type_text, std::nullopt, 0.0};
        std::vector<std::string> chain;
        std::stringstream cs(type_text);
        std::string part;
        while (std::getline(cs, part, '.')) chain.push_back(part);
        if (!chain.empty()) {
            auto sym = index::resolve_name(chain, {point.module, ""}, idx);
            if (sym && sym->kind == SymbolKind::Class) item.source_symbol = sym->qualified_name;
        }
        ctx.items.push_back(std::move(item));
    }

    rank_relevance(ctx.items, point, idx, options.weights);
    return ctx;
}

std::string context_json(const CrossFileContext& ctx) {
    nlohmann::ordered_json doc;
    doc["point"] = {{"module", ctx.point.module},
                    {"function", ctx.point.function},
                    {"line", ctx.point.cursor_line},
                    {"col", ctx.point.cursor_col}};
    doc["items"] = nlohmann::ordered_json::array();
    for (const ContextItem& item : ctx.items) {
        nlohmann::ordered_json j;
        j["kind"] = std::string(to_string(item.kind));
        j["payload"] = item.payload;
        j["symbol"] = item.source_symbol ? nlohmann::ordered_json(*item.source_symbol)
                                         : nlohmann::ordered_json(nullptr);
        j["score"] = item.relevance;
        doc["items"].push_back(std::move(j));
    }
    return doc.dump(2);
}

}  // namespace idecoder::context
