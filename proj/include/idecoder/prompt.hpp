#pragma once

#include <string>
#include <vector>

#include "idecoder/context.hpp"

namespace idecoder::prompt {

enum class Strategy { InFile, AllImport, Rag, IdeCoder };

Strategy strategy_from_name(const std::string& name);
std::string_view to_string(Strategy strategy);

struct Budget {
    int max_chars = 8000;
    int reserved_for_prefix = 1000;
};

struct Section {
    std::string label;
    std::string text;
    bool droppable = true;
    double relevance = 0.0;
};

struct PromptPlan {
    Strategy strategy = Strategy::IdeCoder;
    std::vector<Section> sections;  // kept sections, in realized order
    std::string realized;
};

struct RagOptions {
    int k = 3;
    int chunk_lines = 12;
};

// Realizes a prompt under the budget. Section order for IdeCoder: file role,
// module dependencies, third-party packages, user symbols (relevance
// descending), local types, instruction, in-file prefix. Over-budget plans
// drop droppable sections lowest-relevance-first (the final removal keeps a
// tail-truncated remnant when slack allows); if only the instruction and
// prefix remain, the prefix is cut from the front so its suffix nearest the
// cursor survives. Throws BudgetError when instruction + reserved prefix
// cannot fit.
PromptPlan build_prompt(const context::CrossFileContext& ctx, Strategy strategy,
                        const Budget& budget, const index::RepoIndex& repo,
                        const RagOptions& rag = {});

// The fixed instruction section text.
std::string_view instruction_text();

}  // namespace idecoder::prompt
