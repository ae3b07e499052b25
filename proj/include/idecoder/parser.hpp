#pragma once

#include <string>
#include <string_view>

#include "idecoder/ast.hpp"

namespace idecoder::syntax {

// Parses one source file into a ModuleAst. Declarations outside the supported
// subset degrade to opaque_statements spans; malformed declarations inside the
// subset throw ParseError, and lexical problems throw LexError.
ModuleAst parse_module(std::string_view source, std::string path);

// Body line count per the dataset filter: span length with trailing blank
// lines already trimmed by the parser, signature line excluded.
int function_line_count(const FunctionDecl& decl);

// Docstring value of a string literal token (prefix and quotes stripped,
// simple escapes decoded).
std::string string_literal_value(std::string_view token_text);

}  // namespace idecoder::syntax
