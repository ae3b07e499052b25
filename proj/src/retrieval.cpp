#include <algorithm>
#include <cctype>
#include <set>

#include "idecoder/errors.hpp"
#include "idecoder/eval.hpp"
#include "idecoder/lexer.hpp"

namespace idecoder::eval {

namespace {

// Identifier set of a text. Lexes when possible; a plain character scan is
// the total fallback for text the lexer rejects.
std::set<std::string> identifier_set(const std::string& text) {
    std::set<std::string> out;
    try {
        for (const syntax::Token& t : syntax::tokenize(text))
            if (t.kind == syntax::TokenKind::Identifier) out.insert(t.text);
        return out;
    } catch (const SourceError&) {
        out.clear();
    }
    std::string word;
    for (char c : text + " ") {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            word.push_back(c);
        } else {
            if (!word.empty() && !std::isdigit(static_cast<unsigned char>(word[0])) &&
                !syntax::is_python_keyword(word))
                out.insert(word);
            word.clear();
        }
    }
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const std::string& s : a) inter += b.count(s);
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

std::vector<Chunk> retrieve_chunks(const index::RepoIndex& idx, const std::string& query,
                                   const std::string& exclude_module, int k, int chunk_lines) {
    std::set<std::string> query_ids = identifier_set(query);
    int stride = (chunk_lines + 1) / 2;

    std::vector<std::pair<std::string, const syntax::ModuleAst*>> files;
    for (const auto& [dotted, ast] : idx.modules)
        if (dotted != exclude_module) files.emplace_back(ast.path, &ast);
    std::sort(files.begin(), files.end());

    std::vector<Chunk> chunks;
    for (const auto& [path, ast] : files) {
        std::vector<std::string> lines;
        std::string cur;
        for (char c : ast->source) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) lines.push_back(cur);
        for (int start = 0; start < static_cast<int>(lines.size()); start += stride) {
            int end = std::min(start + chunk_lines, static_cast<int>(lines.size()));
            std::string text;
            for (int i = start; i < end; ++i) text += lines[i] + "\n";
            Chunk chunk;
            chunk.file = path;
            chunk.start_line = start + 1;
            chunk.text = std::move(text);
            chunk.score = jaccard(query_ids, identifier_set(chunk.text));
            chunks.push_back(std::move(chunk));
            if (end == static_cast<int>(lines.size())) break;
        }
    }
    std::stable_sort(chunks.begin(), chunks.end(), [](const Chunk& a, const Chunk& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.file != b.file) return a.file < b.file;
        return a.start_line < b.start_line;
    });
    if (static_cast<int>(chunks.size()) > k) chunks.resize(static_cast<std::size_t>(k));
    return chunks;
}

}  // namespace idecoder::eval
