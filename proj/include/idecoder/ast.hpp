#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace idecoder::syntax {

// Inclusive 1-based line range.
struct LineSpan {
    int first = 0;
    int last = 0;
    bool contains(int line) const { return line >= first && line <= last; }
    int length() const { return last >= first ? last - first + 1 : 0; }
};

enum class ParamKind { Normal, VarArg, KwVarArg };

struct Parameter {
    std::string name;
    std::optional<std::string> annotation;    // source text
    std::optional<std::string> default_text;  // source text
    ParamKind kind = ParamKind::Normal;
};

struct FunctionDecl {
    std::string name;
    std::vector<Parameter> params;
    std::optional<std::string> return_annotation;
    std::optional<std::string> docstring;
    LineSpan body_span;          // body lines only, trailing blank lines trimmed
    int def_line = 0;            // line of the `def` keyword
    int signature_end_line = 0;  // line holding the signature's terminating `:`
    std::vector<std::string> decorators;  // dotted names, not evaluated
    bool is_method = false;
};

// name = value / name: annotation [= value], at module or class level.
struct VariableDecl {
    std::string name;
    std::optional<std::string> annotation;
    // Dotted callee text when the value is a direct constructor call `Name(...)`.
    std::optional<std::string> constructor;
    int line = 0;
};

struct ClassDecl {
    std::string name;
    std::vector<std::string> bases;  // dotted names as written
    std::optional<std::string> docstring;
    std::vector<FunctionDecl> methods;
    std::vector<VariableDecl> attributes;
    std::vector<ClassDecl> nested_classes;
    LineSpan span;
    int def_line = 0;
};

struct ImportDecl {
    bool is_from = false;
    std::string module_path;  // dotted name, without leading relative dots
    int relative_dots = 0;
    // (name, alias) pairs; empty for the plain form.
    std::vector<std::pair<std::string, std::optional<std::string>>> imported_names;
    std::optional<std::string> module_alias;  // plain `import X as A`
    int line = 0;
    int col = 0;

    // The name the import binds in module scope.
    std::string bound_name() const;
};

// A dotted identifier chain read token-wise, e.g. svc.get_service_state.
struct IdentifierOccurrence {
    std::vector<std::string> chain;
    int line = 0;
    int col = 0;
};

struct ModuleAst {
    std::string path;    // repo-relative file path
    std::string source;  // newline-normalized source text
    std::optional<std::string> module_docstring;
    std::vector<ImportDecl> imports;
    std::vector<ClassDecl> classes;
    std::vector<FunctionDecl> functions;
    std::vector<VariableDecl> variables;
    std::vector<LineSpan> opaque_statements;
    std::vector<IdentifierOccurrence> occurrences;
};

}  // namespace idecoder::syntax
