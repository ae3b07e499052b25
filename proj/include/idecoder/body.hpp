#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "idecoder/token.hpp"

namespace idecoder::syntax {

// Statement-level tree over a function body: statement-kind nodes with
// token-chain leaves (dotted identifier chains collapse into one leaf).
// Compound statements own a trailing `suite` child.
struct BodyNode {
    std::string kind;  // "body", "suite", "tok", or a statement kind
    std::string text;  // leaf token text, empty for interior nodes
    std::vector<BodyNode> children;

    bool operator==(const BodyNode& other) const = default;
};

// Parses a function body (relative indentation, leading common indent
// allowed). Throws LexError / ParseError when the text is not a well-formed
// suite under the subset.
BodyNode parse_body(std::string_view body);

// Strips the common leading whitespace of all non-blank lines.
std::string dedent(std::string_view body);

// Flattened view of the logical lines of a body: per line, its 1-based
// starting line number and its significant tokens (comments, newlines and
// indent structure removed). Used by dataflow extraction and linting.
struct LogicalLine {
    int line = 0;
    std::vector<Token> tokens;
};
std::vector<LogicalLine> logical_lines(std::string_view body);

}  // namespace idecoder::syntax
