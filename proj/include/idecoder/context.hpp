#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idecoder/index.hpp"

namespace idecoder::context {

// A function body completion task location. `prefix` is the file text up to
// and including the signature line of the target function; the cursor sits
// immediately after that line's newline.
struct CompletionPoint {
    std::string module;
    std::string function;  // qualified, e.g. "app.main.log_state"
    int cursor_line = 0;
    int cursor_col = 1;
    std::string prefix;
};

enum class ItemKind { FileRole, ModuleDependency, UserSymbol, LocalType, ThirdParty };

std::string_view to_string(ItemKind kind);

struct ContextItem {
    ItemKind kind = ItemKind::FileRole;
    std::string payload;
    std::optional<std::string> source_symbol;
    double relevance = 0.0;
};

struct CrossFileContext {
    CompletionPoint point;
    std::vector<ContextItem> items;  // relevance-descending, name-ascending
};

struct RelevanceWeights {
    double referenced_in_function = 3.0;
    double user_defined = 2.0;
    double referenced_elsewhere = 1.0;
    double third_party_cap = 1.0;
};

struct ContextOptions {
    RelevanceWeights weights;
    int class_member_cap = 10;  // member signatures rendered per class
};

// Builds the completion point for a function; throws PointError when the
// module or function is not indexed.
CompletionPoint make_completion_point(const index::RepoIndex& index, const std::string& module,
                                      const std::string& function);

CrossFileContext identify_context(const CompletionPoint& point, const index::RepoIndex& index,
                                  const ContextOptions& options = {});

// Scores items in place and sorts (relevance desc, symbol-or-payload asc).
void rank_relevance(std::vector<ContextItem>& items, const CompletionPoint& point,
                    const index::RepoIndex& index, const RelevanceWeights& weights = {});

std::map<std::string, std::string> infer_local_types(const syntax::FunctionDecl& function,
                                                     const syntax::ModuleAst& module,
                                                     const index::RepoIndex& index);

std::string summarize_file_role(const syntax::ModuleAst& module);

std::string context_json(const CrossFileContext& ctx);

}  // namespace idecoder::context
