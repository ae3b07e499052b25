#include "idecoder/index.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "idecoder/body.hpp"
#include "idecoder/errors.hpp"
#include "idecoder/lexer.hpp"
#include "idecoder/parser.hpp"

namespace fs = std::filesystem;

namespace idecoder::index {

using syntax::ClassDecl;
using syntax::FunctionDecl;
using syntax::ImportDecl;
using syntax::ModuleAst;
using syntax::Parameter;
using syntax::VariableDecl;

namespace {

const std::vector<std::string> kDefaultIgnore = {".git", "__pycache__", "venv", ".venv"};

// Minimal fnmatch: '*' and '?' wildcards, matched against one path component.
bool match_glob(std::string_view pattern, std::string_view name) {
    std::size_t p = 0, n = 0, star = std::string_view::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

bool ignored_component(const std::string& name, const std::vector<std::string>& ignore) {
    for (const std::string& pat : kDefaultIgnore)
        if (match_glob(pat, name)) return true;
    for (const std::string& pat : ignore)
        if (match_glob(pat, name)) return true;
    return false;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string dotted_path_for(const fs::path& rel) {
    fs::path noext = rel;
    noext.replace_extension();
    std::string dotted;
    for (const fs::path& part : noext) {
        if (!dotted.empty()) dotted += ".";
        dotted += part.string();
    }
    const std::string init_suffix = ".__init__";
    if (dotted == "__init__") return "";
    if (dotted.size() > init_suffix.size() &&
        dotted.compare(dotted.size() - init_suffix.size(), init_suffix.size(), init_suffix) == 0)
        dotted.resize(dotted.size() - init_suffix.size());
    return dotted;
}

std::string render_signature(const FunctionDecl& fn) {
    std::string out = "def " + fn.name + "(";
    bool first = true;
    for (const Parameter& p : fn.params) {
        if (!first) out += ", ";
        first = false;
        if (p.kind == syntax::ParamKind::VarArg) out += "*";
        if (p.kind == syntax::ParamKind::KwVarArg) out += "**";
        out += p.name;
        if (p.annotation) out += ": " + *p.annotation;
        if (p.default_text) out += p.annotation ? " = " + *p.default_text : "=" + *p.default_text;
    }
    out += ")";
    if (fn.return_annotation) out += " -> " + *fn.return_annotation;
    return out;
}

std::string render_class_signature(const ClassDecl& cls) {
    std::string out = "class " + cls.name;
    if (!cls.bases.empty()) {
        out += "(";
        for (std::size_t i = 0; i < cls.bases.size(); ++i) {
            if (i) out += ", ";
            out += cls.bases[i];
        }
        out += ")";
    }
    return out;
}

void register_class(RepoIndex& idx, const std::string& module, const std::string& prefix,
                    const ClassDecl& cls) {
    std::string qname = prefix + cls.name;
    Symbol sym;
    sym.qualified_name = qname;
    sym.kind = SymbolKind::Class;
    sym.module = module;
    sym.declaration = cls.span;
    sym.signature_text = render_class_signature(cls);
    sym.docstring = cls.docstring;
    idx.symbols[qname] = std::move(sym);

    for (const FunctionDecl& m : cls.methods) {
        Symbol ms;
        ms.qualified_name = qname + "." + m.name;
        ms.kind = SymbolKind::Method;
        ms.module = module;
        ms.declaration = {m.def_line, m.body_span.last};
        ms.signature_text = render_signature(m);
        ms.docstring = m.docstring;
        idx.symbols[ms.qualified_name] = std::move(ms);
    }
    for (const VariableDecl& a : cls.attributes) {
        Symbol as;
        as.qualified_name = qname + "." + a.name;
        as.kind = SymbolKind::Variable;
        as.module = module;
        as.declaration = {a.line, a.line};
        idx.symbols[as.qualified_name] = std::move(as);
    }
    for (const ClassDecl& inner : cls.nested_classes)
        register_class(idx, module, qname + ".", inner);
}

void register_module_symbols(RepoIndex& idx, const std::string& dotted, const ModuleAst& ast) {
    Symbol mod;
    mod.qualified_name = dotted;
    mod.kind = SymbolKind::Module;
    mod.module = dotted;
    int lines = 1 + static_cast<int>(std::count(ast.source.begin(), ast.source.end(), '\n'));
    mod.declaration = {1, lines};
    mod.docstring = ast.module_docstring;
    if (!dotted.empty()) idx.symbols[dotted] = std::move(mod);

    std::string prefix = dotted.empty() ? "" : dotted + ".";
    for (const FunctionDecl& fn : ast.functions) {
        Symbol fs;
        fs.qualified_name = prefix + fn.name;
        fs.kind = SymbolKind::Function;
        fs.module = dotted;
        fs.declaration = {fn.def_line, fn.body_span.last};
        fs.signature_text = render_signature(fn);
        fs.docstring = fn.docstring;
        idx.symbols[fs.qualified_name] = std::move(fs);
    }
    for (const VariableDecl& v : ast.variables) {
        Symbol vs;
        vs.qualified_name = prefix + v.name;
        vs.kind = SymbolKind::Variable;
        vs.module = dotted;
        vs.declaration = {v.line, v.line};
        idx.symbols[vs.qualified_name] = std::move(vs);
    }
    for (const ClassDecl& cls : ast.classes) register_class(idx, dotted, prefix, cls);
}

// Strips a quoted forward reference and a trailing [...] generic argument.
std::string annotation_base(std::string text) {
    if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
        text.back() == text.front())
        text = text.substr(1, text.size() - 2);
    auto bracket = text.find('[');
    if (bracket != std::string::npos) text = text.substr(0, bracket);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.pop_back();
    return text;
}

bool is_dotted_name(std::string_view text) {
    if (text.empty()) return false;
    bool expect_part = true;
    for (char c : text) {
        if (c == '.') {
            if (expect_part) return false;
            expect_part = true;
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            expect_part = false;
        } else {
            return false;
        }
    }
    return !expect_part;
}

// Resolves a dotted type/base name written in `module` to a class symbol.
const Symbol* resolve_class_reference(const std::string& dotted, const std::string& module,
                                      const RepoIndex& idx);

std::vector<std::string> split_dotted(const std::string& dotted) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : dotted) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

// The module-scope binding for `name` introduced by imports, as a qualified
// prefix usable for symbol lookup ("" when unbound).
std::string import_binding(const std::string& name, const ModuleAst& ast,
                           const std::string& module, const RepoIndex& idx) {
    for (auto it = ast.imports.rbegin(); it != ast.imports.rend(); ++it) {
        const ImportDecl& decl = *it;
        if (!decl.is_from) {
            if (decl.bound_name() != name) continue;
            if (decl.module_alias) {
                auto res = resolve_import(decl, module, idx);
                if (const auto* ud = std::get_if<UserDefined>(&res)) return ud->module_path;
                return "";
            }
            return split_dotted(decl.module_path).front();
        }
        for (const auto& [imported, alias] : decl.imported_names) {
            if ((alias ? *alias : imported) != name) continue;
            auto res = resolve_import(decl, module, idx);
            if (const auto* ud = std::get_if<UserDefined>(&res)) {
                const std::string& target = ud->module_path;
                // `from pkg import mod` may resolve straight to the module.
                auto parts = split_dotted(target);
                if (!parts.empty() && parts.back() == imported) return target;
                return target + "." + imported;
            }
            return "";
        }
    }
    return "";
}

const Symbol* resolve_class_reference(const std::string& dotted, const std::string& module,
                                      const RepoIndex& idx) {
    if (!is_dotted_name(dotted)) return nullptr;
    std::vector<std::string> parts = split_dotted(dotted);

    // Same-module class, possibly nested (A or A.Inner).
    std::string local = module.empty() ? dotted : module + "." + dotted;
    if (const Symbol* s = idx.find_symbol(local); s && s->kind == SymbolKind::Class) return s;

    // Through an import binding of the first component.
    if (const ModuleAst* ast = idx.find_module(module)) {
        std::string bound = import_binding(parts.front(), *ast, module, idx);
        if (!bound.empty()) {
            std::string qualified = bound;
            for (std::size_t i = 1; i < parts.size(); ++i) qualified += "." + parts[i];
            if (const Symbol* s = idx.find_symbol(qualified); s && s->kind == SymbolKind::Class)
                return s;
        }
    }

    // Absolute reference.
    if (const Symbol* s = idx.find_symbol(dotted); s && s->kind == SymbolKind::Class) return s;
    return nullptr;
}

// Left-to-right depth-first linearization with duplicate pruning. A base on
// the active stack means a cycle; every class above it is flagged cyclic.
struct Linearizer {
    const std::map<std::string, std::vector<std::string>>& direct_bases;

    std::vector<std::string> order;
    std::set<std::string> visited;
    std::vector<std::string> stack;
    bool cyclic = false;

    void dfs(const std::string& cls) {
        if (std::find(stack.begin(), stack.end(), cls) != stack.end()) {
            cyclic = true;
            return;
        }
        if (visited.count(cls)) return;
        visited.insert(cls);
        order.push_back(cls);
        stack.push_back(cls);
        auto it = direct_bases.find(cls);
        if (it != direct_bases.end())
            for (const std::string& base : it->second) dfs(base);
        stack.pop_back();
    }
};

const ClassDecl* find_class_decl_in(const std::vector<ClassDecl>& classes,
                                    const std::vector<std::string>& parts, std::size_t at) {
    for (const ClassDecl& cls : classes) {
        if (cls.name != parts[at]) continue;
        if (at + 1 == parts.size()) return &cls;
        return find_class_decl_in(cls.nested_classes, parts, at + 1);
    }
    return nullptr;
}

}  // namespace

std::string dotted_module_path(const std::string& rel_path) {
    return dotted_path_for(fs::path(rel_path));
}

const ModuleAst* RepoIndex::find_module(const std::string& dotted) const {
    auto it = modules.find(dotted);
    return it == modules.end() ? nullptr : &it->second;
}

const Symbol* RepoIndex::find_symbol(const std::string& qualified) const {
    auto it = symbols.find(qualified);
    return it == symbols.end() ? nullptr : &it->second;
}

bool RepoIndex::is_package(const std::string& dotted) const {
    const ModuleAst* ast = find_module(dotted);
    return ast && ast->path.size() >= 11 &&
           ast->path.compare(ast->path.size() - 11, 11, "__init__.py") == 0;
}

std::map<std::string, std::string> third_party_versions(const std::string& root) {
    std::map<std::string, std::string> out;
    fs::path req = fs::path(root) / "requirements.txt";
    std::ifstream in(req);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find("==");
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string name = trim(line.substr(0, eq));
        std::string version = trim(line.substr(eq + 2));
        // A second '=' means some other comparator, not a pin.
        if (name.empty() || version.empty() || name.find('=') != std::string::npos) continue;
        if (!is_dotted_name(name) && name.find('-') == std::string::npos) continue;
        out[name] = version;
    }
    return out;
}

RepoIndex build_repo_index(const std::string& root, const std::vector<std::string>& ignore) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError(root, "not a readable directory");

    RepoIndex idx;
    idx.root = root;
    idx.third_party = third_party_versions(root);

    // Deterministic file order regardless of directory iteration order.
    std::vector<fs::path> files;
    std::vector<fs::path> pending = {fs::path(root)};
    while (!pending.empty()) {
        fs::path dir = pending.back();
        pending.pop_back();
        std::vector<fs::path> entries;
        for (const auto& entry : fs::directory_iterator(dir, ec)) entries.push_back(entry.path());
        std::sort(entries.begin(), entries.end());
        for (const fs::path& p : entries) {
            std::string name = p.filename().string();
            if (fs::is_directory(p, ec)) {
                if (!ignored_component(name, ignore)) pending.push_back(p);
            } else if (p.extension() == ".py") {
                files.push_back(p);
            }
        }
    }
    std::sort(files.begin(), files.end());

    struct ParseResult {
        std::string dotted;
        std::string rel;
        ModuleAst ast;
        std::string error;
    };
    auto parse_one = [&](const fs::path& file) {
        ParseResult r;
        r.rel = fs::relative(file, root).generic_string();
        r.dotted = dotted_path_for(fs::relative(file, root));
        try {
            r.ast = syntax::parse_module(read_file(file), r.rel);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    };

    std::vector<ParseResult> results(files.size());
    if (files.size() > 8) {
        std::vector<std::future<ParseResult>> futures;
        futures.reserve(files.size());
        for (const fs::path& f : files)
            futures.push_back(std::async(std::launch::async, parse_one, f));
        for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < files.size(); ++i) results[i] = parse_one(files[i]);
    }

    for (ParseResult& r : results) {
        if (!r.error.empty()) {
            idx.errors.push_back({r.rel, r.error});
            continue;
        }
        idx.modules[r.dotted] = std::move(r.ast);
    }
    for (const auto& [dotted, ast] : idx.modules) register_module_symbols(idx, dotted, ast);

    // Hierarchy: resolve direct bases first, then linearize per class.
    std::map<std::string, std::vector<std::string>> direct;
    for (const auto& [dotted, ast] : idx.modules) {
        std::vector<std::pair<std::string, const ClassDecl*>> stack;
        std::string prefix = dotted.empty() ? "" : dotted + ".";
        for (const ClassDecl& cls : ast.classes) stack.emplace_back(prefix + cls.name, &cls);
        while (!stack.empty()) {
            auto [qname, cls] = stack.back();
            stack.pop_back();
            std::vector<std::string> bases;
            for (const std::string& base : cls->bases)
                if (const Symbol* s = resolve_class_reference(base, dotted, idx))
                    bases.push_back(s->qualified_name);
            direct[qname] = std::move(bases);
            for (const ClassDecl& inner : cls->nested_classes)
                stack.emplace_back(qname + "." + inner.name, &inner);
        }
    }
    for (const auto& [qname, bases] : direct) {
        Linearizer lin{direct, {}, {}, {}, false};
        lin.dfs(qname);
        if (lin.cyclic) {
            idx.cyclic_classes.insert(qname);
        } else {
            lin.order.erase(lin.order.begin());  // drop the class itself
            idx.hierarchy[qname] = std::move(lin.order);
        }
    }
    return idx;
}

ImportResolution resolve_import(const ImportDecl& decl, const std::string& importing_module,
                                const RepoIndex& idx) {
    std::vector<std::string> base;
    if (decl.relative_dots > 0) {
        base = importing_module.empty() ? std::vector<std::string>{}
                                        : split_dotted(importing_module);
        int drops = decl.relative_dots - (idx.is_package(importing_module) ? 1 : 0);
        for (int i = 0; i < drops && !base.empty(); ++i) base.pop_back();
    }
    std::string target;
    for (const std::string& part : base) target += target.empty() ? part : "." + part;
    if (!decl.module_path.empty())
        target += target.empty() ? decl.module_path : "." + decl.module_path;

    if (!target.empty() && idx.modules.count(target)) return UserDefined{target};
    if (decl.is_from && !decl.imported_names.empty()) {
        const std::string& first = decl.imported_names.front().first;
        if (first != "*") {
            std::string extended = target.empty() ? first : target + "." + first;
            if (idx.modules.count(extended)) return UserDefined{extended};
        }
    }

    std::string package;
    if (!decl.module_path.empty() && decl.relative_dots == 0)
        package = split_dotted(decl.module_path).front();
    else if (!target.empty())
        package = split_dotted(target).front();
    else if (decl.is_from && !decl.imported_names.empty() &&
             decl.imported_names.front().first != "*" && decl.relative_dots == 0)
        package = decl.imported_names.front().first;
    if (package.empty()) return Unresolved{};

    auto it = idx.third_party.find(package);
    if (it != idx.third_party.end()) return ThirdParty{package, it->second};
    return ThirdParty{package, std::nullopt};
}

const FunctionDecl* find_function(const RepoIndex& idx, const std::string& module,
                                  const std::string& qualified_function) {
    const ModuleAst* ast = idx.find_module(module);
    if (!ast) return nullptr;
    std::string rest = qualified_function;
    std::string module_prefix = module + ".";
    if (rest.compare(0, module_prefix.size(), module_prefix) == 0)
        rest = rest.substr(module_prefix.size());
    std::vector<std::string> parts = split_dotted(rest);
    if (parts.size() == 1) {
        for (const FunctionDecl& fn : ast->functions)
            if (fn.name == parts[0]) return &fn;
        return nullptr;
    }
    std::vector<std::string> class_parts(parts.begin(), parts.end() - 1);
    const ClassDecl* cls = find_class_decl_in(ast->classes, class_parts, 0);
    if (!cls) return nullptr;
    for (const FunctionDecl& m : cls->methods)
        if (m.name == parts.back()) return &m;
    return nullptr;
}

std::optional<Symbol> lookup_member(const Symbol& class_symbol, const std::string& member,
                                    const RepoIndex& idx) {
    if (idx.cyclic_classes.count(class_symbol.qualified_name))
        throw CycleError(class_symbol.qualified_name);
    if (const Symbol* s = idx.find_symbol(class_symbol.qualified_name + "." + member))
        return *s;
    auto it = idx.hierarchy.find(class_symbol.qualified_name);
    if (it == idx.hierarchy.end()) return std::nullopt;
    for (const std::string& base : it->second) {
        if (idx.cyclic_classes.count(base)) throw CycleError(base);
        if (const Symbol* s = idx.find_symbol(base + "." + member)) return *s;
    }
    return std::nullopt;
}

std::optional<Symbol> local_binding_class(const std::string& name, const FunctionDecl& function,
                                          const std::string& module_path, const RepoIndex& idx) {
    const ModuleAst* ast = idx.find_module(module_path);
    // Constructor assignments in the body override parameter annotations.
    if (ast && function.body_span.first > 0) {
        std::istringstream src(ast->source);
        std::string line, body;
        for (int n = 1; std::getline(src, line); ++n)
            if (function.body_span.contains(n)) body += line + "\n";
        try {
            auto lines = syntax::logical_lines(body);
            const Symbol* found = nullptr;
            for (const auto& ll : lines) {
                const auto& t = ll.tokens;
                if (t.size() < 4 || t[0].kind != syntax::TokenKind::Identifier ||
                    t[0].text != name)
                    continue;
                std::size_t eq = 1;
                if (t[1].is(syntax::TokenKind::Punct, ":")) {
                    while (eq < t.size() && !t[eq].is(syntax::TokenKind::Operator, "=")) ++eq;
                } else if (!t[1].is(syntax::TokenKind::Operator, "=")) {
                    continue;
                }
                if (eq >= t.size() || !t[eq].is(syntax::TokenKind::Operator, "=")) continue;
                std::string callee;
                std::size_t j = eq + 1;
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
                if (const Symbol* s = resolve_class_reference(callee, module_path, idx)) found = s;
            }
            if (found) return *found;
        } catch (const SourceError&) {
            // Unlexable body lines contribute no bindings.
        }
    }
    for (const Parameter& p : function.params) {
        if (p.name != name || !p.annotation) continue;
        std::string base = annotation_base(*p.annotation);
        if (const Symbol* s = resolve_class_reference(base, module_path, idx)) return *s;
        return std::nullopt;
    }
    return std::nullopt;
}

namespace {

// Chain-walking state: either a concrete symbol or "instance of class".
struct Entity {
    const Symbol* symbol = nullptr;  // class/function/method/variable/module
    const Symbol* instance_of = nullptr;
};

std::optional<Symbol> walk_chain(Entity entity, const std::vector<std::string>& chain,
                                 std::size_t from, const RepoIndex& idx);

// The class symbol a variable/method symbol leads to when the chain continues.
const Symbol* value_class_of(const Symbol& sym, const RepoIndex& idx) {
    const ModuleAst* ast = idx.find_module(sym.module);
    if (!ast) return nullptr;
    std::string prefix = sym.module.empty() ? "" : sym.module + ".";
    std::string rest = sym.qualified_name.substr(prefix.size());
    auto rest_parts = split_dotted(rest);
    if (sym.kind == SymbolKind::Method || sym.kind == SymbolKind::Function) {
        const FunctionDecl* fn = find_function(idx, sym.module, sym.qualified_name);
        if (fn && fn->return_annotation)
            return resolve_class_reference(annotation_base(*fn->return_annotation), sym.module,
                                           idx);
        return nullptr;
    }
    if (sym.kind != SymbolKind::Variable) return nullptr;
    const VariableDecl* decl = nullptr;
    if (rest_parts.size() == 1) {
        for (const VariableDecl& v : ast->variables)
            if (v.name == rest_parts[0]) decl = &v;
    } else {
        std::vector<std::string> class_parts(rest_parts.begin(), rest_parts.end() - 1);
        if (const ClassDecl* cls = find_class_decl_in(ast->classes, class_parts, 0))
            for (const VariableDecl& a : cls->attributes)
                if (a.name == rest_parts.back()) decl = &a;
    }
    if (!decl) return nullptr;
    if (decl->annotation)
        if (const Symbol* s =
                resolve_class_reference(annotation_base(*decl->annotation), sym.module, idx))
            return s;
    if (decl->constructor)
        return resolve_class_reference(*decl->constructor, sym.module, idx);
    return nullptr;
}

std::optional<Symbol> walk_chain(Entity entity, const std::vector<std::string>& chain,
                                 std::size_t from, const RepoIndex& idx) {
    for (std::size_t i = from; i < chain.size(); ++i) {
        const std::string& part = chain[i];
        bool last = i + 1 == chain.size();
        if (entity.instance_of) {
            std::optional<Symbol> member;
            try {
                member = lookup_member(*entity.instance_of, part, idx);
            } catch (const CycleError&) {
                return std::nullopt;
            }
            if (!member) return std::nullopt;
            if (last) return member;
            const Symbol* next = value_class_of(*member, idx);
            if (!next) return std::nullopt;
            entity = {nullptr, next};
            continue;
        }
        const Symbol& sym = *entity.symbol;
        if (sym.kind == SymbolKind::Class) {
            std::optional<Symbol> member;
            try {
                member = lookup_member(sym, part, idx);
            } catch (const CycleError&) {
                return std::nullopt;
            }
            if (!member) return std::nullopt;
            if (last) return *member;
            if (member->kind == SymbolKind::Class) {
                Symbol m = *member;
                entity = {idx.find_symbol(m.qualified_name), nullptr};
                continue;
            }
            const Symbol* next = value_class_of(*member, idx);
            if (!next) return std::nullopt;
            entity = {nullptr, next};
            continue;
        }
        if (sym.kind == SymbolKind::Module) {
            std::string qualified = sym.qualified_name + "." + part;
            if (idx.modules.count(qualified)) {
                if (last) return *idx.find_symbol(qualified);
                entity = {idx.find_symbol(qualified), nullptr};
                continue;
            }
            const Symbol* s = idx.find_symbol(qualified);
            if (!s) return std::nullopt;
            if (last) return *s;
            if (s->kind == SymbolKind::Class) {
                entity = {s, nullptr};
                continue;
            }
            const Symbol* next = value_class_of(*s, idx);
            if (!next) return std::nullopt;
            entity = {nullptr, next};
            continue;
        }
        // functions/methods/variables: follow annotations when available
        const Symbol* next = value_class_of(sym, idx);
        if (!next) return std::nullopt;
        entity = {nullptr, next};
        --i;  // re-handle this part against the instance
    }
    if (entity.symbol) return *entity.symbol;
    if (entity.instance_of) return *entity.instance_of;
    return std::nullopt;
}

}  // namespace

std::optional<Symbol> member_value_class(const Symbol& member, const RepoIndex& idx) {
    const Symbol* cls = value_class_of(member, idx);
    if (!cls) return std::nullopt;
    return *cls;
}

namespace {

std::set<std::string> assigned_local_names(const FunctionDecl& fn, const ModuleAst& ast) {
    std::set<std::string> names;
    if (fn.body_span.first <= 0) return names;
    std::istringstream src(ast.source);
    std::string line, body;
    for (int n = 1; std::getline(src, line); ++n)
        if (fn.body_span.contains(n)) body += line + "\n";
    try {
        for (const auto& ll : syntax::logical_lines(body)) {
            const auto& t = ll.tokens;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i].kind != syntax::TokenKind::Identifier) continue;
                bool target = false;
                if (i == 0 && i + 1 < t.size() &&
                    (t[i + 1].is(syntax::TokenKind::Operator, "=") ||
                     t[i + 1].is(syntax::TokenKind::Punct, ":")))
                    target = true;
                if (i > 0 && t[i - 1].is(syntax::TokenKind::Keyword, "for")) target = true;
                if (i > 0 && t[i - 1].is(syntax::TokenKind::Keyword, "as")) target = true;
                if (target) names.insert(t[i].text);
            }
        }
    } catch (const SourceError&) {
    }
    return names;
}

}  // namespace

std::optional<Symbol> resolve_name(const std::vector<std::string>& chain, const Scope& scope,
                                   const RepoIndex& idx) {
    if (chain.empty()) return std::nullopt;
    const ModuleAst* ast = idx.find_module(scope.module);
    if (!ast) return std::nullopt;
    const std::string& head = chain.front();

    const FunctionDecl* fn =
        scope.function.empty() ? nullptr : find_function(idx, scope.module, scope.function);
    std::string enclosing_class;
    if (fn && fn->is_method) {
        std::string rest = scope.function;
        std::string prefix = scope.module + ".";
        if (rest.compare(0, prefix.size(), prefix) == 0) rest = rest.substr(prefix.size());
        auto parts = split_dotted(rest);
        enclosing_class = scope.module + ".";
        for (std::size_t i = 0; i + 1 < parts.size(); ++i)
            enclosing_class += (i ? "." : "") + parts[i];
    }

    if (fn) {
        // self binds to the enclosing class instance.
        if (head == "self" && !enclosing_class.empty()) {
            if (const Symbol* cls = idx.find_symbol(enclosing_class))
                return walk_chain({nullptr, cls}, chain, 1, idx);
            return std::nullopt;
        }
        bool is_param = std::any_of(fn->params.begin(), fn->params.end(),
                                    [&](const Parameter& p) { return p.name == head; });
        bool is_local = assigned_local_names(*fn, *ast).count(head) > 0;
        if (is_param || is_local) {
            auto cls = local_binding_class(head, *fn, scope.module, idx);
            if (!cls) return std::nullopt;  // local with unknown type shadows outer scopes
            if (chain.size() == 1) return cls;
            Symbol owned = *cls;
            const Symbol* stable = idx.find_symbol(owned.qualified_name);
            return walk_chain({nullptr, stable}, chain, 1, idx);
        }
        // enclosing class members by bare name
        if (!enclosing_class.empty()) {
            if (const Symbol* cls = idx.find_symbol(enclosing_class)) {
                std::optional<Symbol> member;
                try {
                    member = lookup_member(*cls, head, idx);
                } catch (const CycleError&) {
                    member = std::nullopt;
                }
                if (member) {
                    if (chain.size() == 1) return member;
                    const Symbol* stable = idx.find_symbol(member->qualified_name);
                    return walk_chain({stable, nullptr}, chain, 1, idx);
                }
            }
        }
    }

    // module-level declarations
    std::string prefix = scope.module.empty() ? "" : scope.module + ".";
    if (const Symbol* s = idx.find_symbol(prefix + head)) {
        if (chain.size() == 1) return *s;
        return walk_chain({s, nullptr}, chain, 1, idx);
    }

    // imports, following aliases
    std::string bound = import_binding(head, *ast, scope.module, idx);
    if (!bound.empty()) {
        if (const Symbol* s = idx.find_symbol(bound)) {
            if (chain.size() == 1) return *s;
            return walk_chain({s, nullptr}, chain, 1, idx);
        }
        // Unaliased `import pkg.mod` binds the top package, which may not be
        // an indexed module itself; extend the dotted prefix until it is.
        if (chain.size() > 1) {
            std::string qualified = bound;
            std::size_t i = 1;
            while (i < chain.size() && idx.modules.count(qualified + "." + chain[i]) > 0) {
                qualified += "." + chain[i];
                ++i;
            }
            if (const Symbol* s = idx.find_symbol(qualified)) {
                if (i == chain.size()) return *s;
                return walk_chain({s, nullptr}, chain, i, idx);
            }
        }
    }
    return std::nullopt;
}

std::string_view to_string(SymbolKind kind) {
    switch (kind) {
        case SymbolKind::Class: return "class";
        case SymbolKind::Function: return "function";
        case SymbolKind::Method: return "method";
        case SymbolKind::Variable: return "variable";
        case SymbolKind::Module: return "module";
    }
    return "?";
}

std::string symbol_table_json(const RepoIndex& idx) {
    nlohmann::ordered_json doc;
    doc["root"] = idx.root;
    doc["modules"] = nlohmann::ordered_json::array();
    for (const auto& [dotted, ast] : idx.modules)
        doc["modules"].push_back({{"module", dotted}, {"path", ast.path}});
    doc["symbols"] = nlohmann::ordered_json::array();
    for (const auto& [qname, sym] : idx.symbols) {
        nlohmann::ordered_json s;
        s["name"] = qname;
        s["kind"] = std::string(to_string(sym.kind));
        s["module"] = sym.module;
        s["line"] = sym.declaration.first;
        if (sym.signature_text) s["signature"] = *sym.signature_text;
        if (sym.docstring) s["docstring"] = *sym.docstring;
        doc["symbols"].push_back(std::move(s));
    }
    doc["third_party"] = nlohmann::ordered_json::object();
    for (const auto& [pkg, ver] : idx.third_party) doc["third_party"][pkg] = ver;
    doc["errors"] = nlohmann::ordered_json::array();
    for (const IndexError& e : idx.errors)
        doc["errors"].push_back({{"path", e.path}, {"message", e.message}});
    return doc.dump(2);
}

}  // namespace idecoder::index
