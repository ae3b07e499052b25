"""Repository-level code completion toolkit: static indexing, cross-file
context extraction, budgeted prompt assembly, lint-driven refinement, and
code-similarity metrics."""

from idecoder._core import (
    BudgetError,
    LexError,
    ParseError,
    PointError,
    RepoIndex,
    codebleu,
    complete_with_mock,
    dataflow_match,
    exact_match,
    function_line_count,
    ngram_bleu,
    parse_module,
    syntax_match,
    tokenize,
)

__all__ = [
    "BudgetError",
    "LexError",
    "ParseError",
    "PointError",
    "RepoIndex",
    "codebleu",
    "complete_with_mock",
    "dataflow_match",
    "exact_match",
    "function_line_count",
    "ngram_bleu",
    "parse_module",
    "syntax_match",
    "tokenize",
]
