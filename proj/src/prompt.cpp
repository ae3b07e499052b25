#include "idecoder/prompt.hpp"

#include <algorithm>
#include <numeric>

#include "idecoder/errors.hpp"
#include "idecoder/eval.hpp"

namespace idecoder::prompt {

using context::ContextItem;
using context::CrossFileContext;
using context::ItemKind;

namespace {

constexpr std::string_view kInstruction = "## Complete the function body:\n";

constexpr std::string_view kRoleHeader = "## Role of current file\n";
constexpr std::string_view kDepsHeader = "## Project dependencies\n";
constexpr std::string_view kThirdHeader = "## Third-party packages\n";
constexpr std::string_view kApisHeader = "## Available APIs\n";
constexpr std::string_view kLocalsHeader = "## Local variable types\n";
constexpr std::string_view kRagHeader = "## Retrieved snippets\n";
constexpr std::string_view kImportsHeader = "## Imported module sources\n";

std::string assemble(const std::vector<Section>& sections) {
    std::string out;
    for (const Section& s : sections) out += s.text;
    return out;
}

double max_relevance(const std::vector<const ContextItem*>& items) {
    double best = 0.0;
    for (const ContextItem* item : items) best = std::max(best, item->relevance);
    return best;
}

}  // namespace

Strategy strategy_from_name(const std::string& name) {
    if (name == "in_file" || name == "in-file") return Strategy::InFile;
    if (name == "all_import" || name == "all-import") return Strategy::AllImport;
    if (name == "rag") return Strategy::Rag;
    if (name == "idecoder") return Strategy::IdeCoder;
    throw ConfigError("unknown strategy: " + name);
}

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::InFile: return "in_file";
        case Strategy::AllImport: return "all_import";
        case Strategy::Rag: return "rag";
        case Strategy::IdeCoder: return "idecoder";
    }
    return "?";
}

std::string_view instruction_text() { return kInstruction; }

PromptPlan build_prompt(const CrossFileContext& ctx, Strategy strategy, const Budget& budget,
                        const index::RepoIndex& repo, const RagOptions& rag) {
    if (static_cast<int>(kInstruction.size()) + budget.reserved_for_prefix > budget.max_chars)
        throw BudgetError("budget cannot hold the instruction and the reserved prefix");

    std::vector<Section> sections;

    if (strategy == Strategy::IdeCoder) {
        std::vector<const ContextItem*> role, deps, third, users, locals_;
        for (const ContextItem& item : ctx.items) {
            switch (item.kind) {
                case ItemKind::FileRole: role.push_back(&item); break;
                case ItemKind::ModuleDependency: deps.push_back(&item); break;
                case ItemKind::ThirdParty: third.push_back(&item); break;
                case ItemKind::UserSymbol: users.push_back(&item); break;
                case ItemKind::LocalType: locals_.push_back(&item); break;
            }
        }
        if (!role.empty()) {
            std::string text(kRoleHeader);
            text += role.front()->payload + "\n\n";
            sections.push_back({"file_role", std::move(text), true, max_relevance(role)});
        }
        if (!deps.empty()) {
            std::string text(kDepsHeader);
            for (const ContextItem* item : deps) text += "- " + item->payload + "\n";
            text += "\n";
            sections.push_back({"module_dependencies", std::move(text), true, max_relevance(deps)});
        }
        if (!third.empty()) {
            std::string text(kThirdHeader);
            for (const ContextItem* item : third) text += "- " + item->payload + "\n";
            text += "\n";
            sections.push_back({"third_party", std::move(text), true, max_relevance(third)});
        }
        // ctx.items is relevance-ordered already; one section per symbol so
        // budget pressure sheds the least relevant API first.
        for (std::size_t i = 0; i < users.size(); ++i) {
            std::string text = i == 0 ? std::string(kApisHeader) : "";
            text += users[i]->payload + "\n\n";
            sections.push_back({"user_symbol:" + users[i]->source_symbol.value_or("?"),
                                std::move(text), true, users[i]->relevance});
        }
        if (!locals_.empty()) {
            std::string text(kLocalsHeader);
            for (const ContextItem* item : locals_) text += "- " + item->payload + "\n";
            text += "\n";
            sections.push_back({"local_types", std::move(text), true, max_relevance(locals_)});
        }
    } else if (strategy == Strategy::AllImport) {
        const syntax::ModuleAst* ast = repo.find_module(ctx.point.module);
        std::vector<std::string> seen;
        if (ast) {
            bool first = true;
            for (const syntax::ImportDecl& decl : ast->imports) {
                auto res = index::resolve_import(decl, ctx.point.module, repo);
                const auto* ud = std::get_if<index::UserDefined>(&res);
                if (!ud) continue;
                if (std::find(seen.begin(), seen.end(), ud->module_path) != seen.end()) continue;
                seen.push_back(ud->module_path);
                const syntax::ModuleAst* imported = repo.find_module(ud->module_path);
                if (!imported) continue;
                std::string text = first ? std::string(kImportsHeader) : "";
                first = false;
                text += "# module: " + ud->module_path + "\n" + imported->source + "\n";
                sections.push_back({"all_import:" + ud->module_path, std::move(text), true, 0.0});
            }
        }
    } else if (strategy == Strategy::Rag) {
        auto chunks =
            eval::retrieve_chunks(repo, ctx.point.prefix, ctx.point.module, rag.k, rag.chunk_lines);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            std::string text = i == 0 ? std::string(kRagHeader) : "";
            text += "# " + chunks[i].file + ":" + std::to_string(chunks[i].start_line) + "\n" +
                    chunks[i].text;
            if (text.back() != '\n') text += "\n";
            text += "\n";
            sections.push_back({"rag_chunk:" + chunks[i].file + ":" +
                                    std::to_string(chunks[i].start_line),
                                std::move(text), true, chunks[i].score});
        }
    }

    sections.push_back({"instruction", std::string(kInstruction), false, 0.0});
    sections.push_back({"prefix", ctx.point.prefix, false, 0.0});

    // Shrink to budget: drop droppables lowest-relevance-first (ties: latest
    // position). When removing a section overshoots, keep its head instead.
    auto over = [&] {
        return static_cast<int>(assemble(sections).size()) - budget.max_chars;
    };
    int excess = over();
    while (excess > 0) {
        std::size_t victim = sections.size();
        for (std::size_t i = 0; i < sections.size(); ++i) {
            if (!sections[i].droppable) continue;
            if (victim == sections.size() || sections[i].relevance <= sections[victim].relevance)
                victim = i;
        }
        if (victim == sections.size()) break;
        int len = static_cast<int>(sections[victim].text.size());
        if (len > excess) {
            sections[victim].text.resize(static_cast<std::size_t>(len - excess));
            excess = over();
        } else {
            sections.erase(sections.begin() + static_cast<std::ptrdiff_t>(victim));
            excess = over();
        }
    }
    if (excess > 0) {
        // Only instruction + prefix left: cut the prefix front, keep the suffix.
        Section& prefix = sections.back();
        std::size_t cut = std::min(prefix.text.size(), static_cast<std::size_t>(excess));
        prefix.text.erase(0, cut);
    }

    PromptPlan plan;
    plan.strategy = strategy;
    plan.realized = assemble(sections);
    plan.sections = std::move(sections);
    return plan;
}

}  // namespace idecoder::prompt
