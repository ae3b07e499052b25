#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "idecoder/ast.hpp"

namespace idecoder::index {

enum class SymbolKind { Class, Function, Method, Variable, Module };

std::string_view to_string(SymbolKind kind);

struct Symbol {
    std::string qualified_name;
    SymbolKind kind = SymbolKind::Variable;
    std::string module;  // dotted module path of the declaration site
    syntax::LineSpan declaration;
    std::optional<std::string> signature_text;  // present for class/function/method
    std::optional<std::string> docstring;
};

struct UserDefined {
    std::string module_path;
};
struct ThirdParty {
    std::string package;
    std::optional<std::string> version;
};
struct Unresolved {};
using ImportResolution = std::variant<UserDefined, ThirdParty, Unresolved>;

struct IndexError {
    std::string path;
    std::string message;
};

// Immutable repository-wide view. Build once, share freely across threads.
struct RepoIndex {
    std::string root;
    std::map<std::string, syntax::ModuleAst> modules;  // dotted path -> AST
    std::map<std::string, Symbol> symbols;             // qualified name -> symbol
    std::map<std::string, std::vector<std::string>> hierarchy;  // class -> linearized bases
    std::set<std::string> cyclic_classes;
    std::map<std::string, std::string> third_party;  // package -> version
    std::vector<IndexError> errors;

    const syntax::ModuleAst* find_module(const std::string& dotted) const;
    const Symbol* find_symbol(const std::string& qualified) const;
    bool is_package(const std::string& dotted) const;
};

// Scope of a name lookup: the module plus an optional enclosing function
// (its qualified name, e.g. "app.main.log_state" or "app.service.Service.run").
struct Scope {
    std::string module;
    std::string function;  // empty for module level
};

RepoIndex build_repo_index(const std::string& root, const std::vector<std::string>& ignore = {});

ImportResolution resolve_import(const syntax::ImportDecl& decl, const std::string& importing_module,
                                const RepoIndex& index);

// Resolves a dotted identifier chain in a scope. Resolution order: local
// parameters/assignments, enclosing class members, module-level declarations,
// imports (following aliases). Returns nullopt for Unresolved; never throws.
std::optional<Symbol> resolve_name(const std::vector<std::string>& chain, const Scope& scope,
                                   const RepoIndex& index);

// First match over the class and its linearized bases (left-to-right
// depth-first, duplicates pruned). Throws CycleError on a cyclic hierarchy.
std::optional<Symbol> lookup_member(const Symbol& class_symbol, const std::string& member,
                                    const RepoIndex& index);

// requirements.txt `name==version` lines; anything else is ignored.
std::map<std::string, std::string> third_party_versions(const std::string& root);

// Dotted module path for a repo-relative .py file path; `pkg/__init__.py`
// maps to `pkg`.
std::string dotted_module_path(const std::string& rel_path);

// Exposed for resolve_name and the context module: the class a local name is
// known to have in `function`, from parameter annotations and direct
// constructor assignments. Returns the class symbol, or nullopt.
std::optional<Symbol> local_binding_class(const std::string& name,
                                          const syntax::FunctionDecl& function,
                                          const std::string& module_path, const RepoIndex& index);

// Finds the FunctionDecl for a qualified function name ("mod.fn" or
// "mod.Class.fn"); nullptr when absent.
const syntax::FunctionDecl* find_function(const RepoIndex& index, const std::string& module,
                                          const std::string& qualified_function);

// The class a variable's annotation/constructor (or a function's return
// annotation) resolves to; nullopt outside the conservative subset.
std::optional<Symbol> member_value_class(const Symbol& member, const RepoIndex& index);

std::string symbol_table_json(const RepoIndex& index);

}  // namespace idecoder::index
