#pragma once

#include <stdexcept>
#include <string>

namespace idecoder {

// Position-carrying analysis error. line/col are 1-based.
class SourceError : public std::runtime_error {
public:
    SourceError(std::string what, int line, int col)
        : std::runtime_error(std::move(what)), line(line), col(col) {}
    int line;
    int col;
};

class LexError : public SourceError {
public:
    LexError(int line, int col, const std::string& reason)
        : SourceError("lex error at " + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + reason,
                      line, col) {}
};

class ParseError : public SourceError {
public:
    ParseError(int line, int col, const std::string& expected)
        : SourceError("parse error at " + std::to_string(line) + ":" + std::to_string(col) +
                          ": expected " + expected,
                      line, col),
          expected(expected) {}
    std::string expected;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& path, const std::string& detail = "")
        : std::runtime_error("io error: " + path + (detail.empty() ? "" : ": " + detail)),
          path(path) {}
    std::string path;
};

// Base-class cycle detected while linearizing a class hierarchy.
class CycleError : public std::runtime_error {
public:
    explicit CycleError(const std::string& class_name)
        : std::runtime_error("base class cycle through " + class_name) {}
};

// Completion point does not identify an indexed function.
class PointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AuthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed dataset line; carries the 1-based line number.
class FormatError : public std::runtime_error {
public:
    FormatError(int line, const std::string& detail)
        : std::runtime_error("format error at line " + std::to_string(line) + ": " + detail),
          line(line) {}
    int line;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace idecoder
