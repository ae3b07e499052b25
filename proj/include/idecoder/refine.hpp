#pragma once

#include <optional>
#include <string>
#include <vector>

#include "idecoder/context.hpp"
#include "idecoder/llm.hpp"
#include "idecoder/prompt.hpp"

namespace idecoder::refine {

enum class DiagnosticKind {
    SyntaxErrorD,
    UndefinedName,
    UnimportedUsage,
    ArityMismatch,
    UnknownAttribute,
};

std::string_view to_string(DiagnosticKind kind);

struct Diagnostic {
    DiagnosticKind kind = DiagnosticKind::SyntaxErrorD;
    int line = 1;  // within the completion text, 1-based
    int col = 1;
    std::string message;
    std::optional<std::string> suggested_fix;  // import line for UnimportedUsage

    // Fixed rendering used in refine prompts: "<kind> at <line>:<col>: <message>"
    std::string render() const;
};

// An import line to insert after the file's last existing import.
struct ImportEdit {
    int insert_after_line = 0;  // 0 = top of file
    std::string text;
};

struct Iteration {
    std::string completion;
    std::vector<Diagnostic> diagnostics;
    std::string prompt_used;
};

struct RefineTrace {
    std::vector<Iteration> iterations;
    std::string final_completion;  // iteration with fewest diagnostics, earliest on ties
    bool converged = false;        // zero diagnostics reached
    std::vector<ImportEdit> import_edits;
};

// Static checks over a generated function body, in order: splice-parse
// (SyntaxErrorD stops the scan), identifier-chain head resolution
// (UndefinedName / UnimportedUsage with a suggested import), literal-call
// arity, and attribute lookup on locals of known class type.
std::vector<Diagnostic> lint_completion(const std::string& completion,
                                        const context::CompletionPoint& point,
                                        const index::RepoIndex& index);

// Variant used inside the refine loop: names covered by already-accepted
// import edits resolve as imported.
std::vector<Diagnostic> lint_completion(const std::string& completion,
                                        const context::CompletionPoint& point,
                                        const index::RepoIndex& index,
                                        const std::vector<ImportEdit>& accepted_edits);

// Emits one deduplicated import edit per UnimportedUsage and returns the
// remaining diagnostics.
std::pair<std::vector<ImportEdit>, std::vector<Diagnostic>> auto_import(
    const std::string& completion, const std::vector<Diagnostic>& diagnostics,
    const context::CompletionPoint& point, const index::RepoIndex& index);

// Bounded resend loop: complete, lint, auto-import; while diagnostics remain
// and fewer than max_iters refinements ran, append the rendered diagnostics
// to the previous prompt and ask again. Backend errors propagate annotated
// with the iteration number.
RefineTrace refine_loop(const context::CompletionPoint& point, const prompt::PromptPlan& plan,
                        const llm::BackendConfig& backend, const index::RepoIndex& index,
                        int max_iters);

}  // namespace idecoder::refine
