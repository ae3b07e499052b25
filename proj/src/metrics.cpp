#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "idecoder/body.hpp"
#include "idecoder/errors.hpp"
#include "idecoder/eval.hpp"
#include "idecoder/lexer.hpp"

namespace idecoder::eval {

using syntax::BodyNode;
using syntax::Token;
using syntax::TokenKind;

namespace {

void serialize_node(const BodyNode& node, std::string& out) {
    out += "(";
    out += node.kind;
    out += "|";
    out += node.text;
    for (const BodyNode& child : node.children) serialize_node(child, out);
    out += ")";
}

std::string serialize(const BodyNode& node) {
    std::string out;
    serialize_node(node, out);
    return out;
}

void collect_serializations(const BodyNode& node, std::vector<std::string>& out) {
    out.push_back(serialize(node));
    for (const BodyNode& child : node.children) collect_serializations(child, out);
}

// ---- dataflow ----

struct DefEvent {
    std::string name;
    int line;
};

struct DataflowEdges {
    std::set<std::tuple<int, int, int>> edges;  // (normalized var, def line, use line)
};

bool is_aug_assign(const Token& t) {
    return t.kind == TokenKind::Operator && t.text.size() >= 2 && t.text.back() == '=' &&
           t.text != "==" && t.text != "!=" && t.text != "<=" && t.text != ">=";
}

DataflowEdges extract_edges(const std::string& text) {
    DataflowEdges out;
    std::vector<syntax::LogicalLine> lines;
    try {
        lines = syntax::logical_lines(text);
    } catch (const SourceError&) {
        return out;
    }

    // Definition events and, per line, the token indices that are targets.
    std::vector<DefEvent> defs;
    std::map<std::size_t, std::set<std::size_t>> target_positions;  // line idx -> token idx
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto& t = lines[li].tokens;
        // leading NAME (, NAME)* ... (=|:...=) forms define their targets
        std::size_t k = 0;
        std::vector<std::size_t> head_names;
        while (k < t.size() && t[k].kind == TokenKind::Identifier) {
            head_names.push_back(k);
            if (k + 1 < t.size() && t[k + 1].is(TokenKind::Punct, ",")) {
                k += 2;
                continue;
            }
            ++k;
            break;
        }
        if (!head_names.empty() && k < t.size()) {
            bool plain_eq = t[k].is(TokenKind::Operator, "=");
            bool annotated = t[k].is(TokenKind::Punct, ":");
            if (annotated) {
                int depth = 0;
                std::size_t j = k;
                plain_eq = false;
                for (; j < t.size(); ++j) {
                    if (t[j].kind == TokenKind::Punct &&
                        (t[j].text == "(" || t[j].text == "[" || t[j].text == "{"))
                        ++depth;
                    if (t[j].kind == TokenKind::Punct &&
                        (t[j].text == ")" || t[j].text == "]" || t[j].text == "}"))
                        --depth;
                    if (depth == 0 && t[j].is(TokenKind::Operator, "=")) {
                        plain_eq = true;
                        break;
                    }
                }
            }
            bool aug = head_names.size() == 1 && is_aug_assign(t[k]);
            if (plain_eq || aug) {
                for (std::size_t idx : head_names) {
                    defs.push_back({t[idx].text, lines[li].line});
                    if (!aug) target_positions[li].insert(idx);  // aug targets also read
                }
            }
        }
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (t[i].kind != TokenKind::Identifier) continue;
            if (t[i - 1].is(TokenKind::Keyword, "for") || t[i - 1].is(TokenKind::Keyword, "as")) {
                defs.push_back({t[i].text, lines[li].line});
                target_positions[li].insert(i);
                // tuple loop targets: for a, b in ...
                std::size_t j = i;
                while (t[i - 1].is(TokenKind::Keyword, "for") && j + 2 < t.size() &&
                       t[j + 1].is(TokenKind::Punct, ",") &&
                       t[j + 2].kind == TokenKind::Identifier) {
                    defs.push_back({t[j + 2].text, lines[li].line});
                    target_positions[li].insert(j + 2);
                    j += 2;
                }
            }
        }
    }

    // Normalized ids in first-definition order.
    std::map<std::string, int> var_id;
    for (const DefEvent& d : defs)
        if (!var_id.count(d.name)) var_id[d.name] = static_cast<int>(var_id.size());

    for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto& t = lines[li].tokens;
        int line_no = lines[li].line;
        const auto& targets = target_positions[li];
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i].kind != TokenKind::Identifier) continue;
            if (targets.count(i)) continue;
            // attribute positions x.ATTR are not variable reads
            if (i > 0 && t[i - 1].is(TokenKind::Punct, ".")) continue;
            auto it = var_id.find(t[i].text);
            if (it == var_id.end()) continue;
            int best = -1;
            for (const DefEvent& d : defs)
                if (d.name == t[i].text && d.line < line_no) best = std::max(best, d.line);
            if (best >= 0) out.edges.insert({it->second, best, line_no});
        }
    }
    return out;
}

// ---- n-grams ----

double token_weight(const CodeToken& t, double keyword_weight) {
    return t.keyword ? keyword_weight : 1.0;
}

}  // namespace

std::string normalize_completion(const std::string& text) {
    std::string normalized = syntax::normalize_newlines(text);
    std::vector<std::string> lines;
    std::string cur;
    for (char c : normalized) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    lines.push_back(cur);
    for (std::string& line : lines) {
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
    }
    std::size_t first = 0, last = lines.size();
    while (first < last && lines[first].empty()) ++first;
    while (last > first && lines[last - 1].empty()) --last;
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (i > first) out.push_back('\n');
        out += lines[i];
    }
    return out;
}

int exact_match(const std::string& pred, const std::string& gold) {
    return normalize_completion(pred) == normalize_completion(gold) ? 1 : 0;
}

double syntax_match(const std::string& pred, const std::string& gold) {
    if (exact_match(pred, gold)) return 1.0;
    BodyNode pred_tree, gold_tree;
    try {
        pred_tree = syntax::parse_body(pred);
    } catch (const SourceError&) {
        return 0.0;
    }
    try {
        gold_tree = syntax::parse_body(gold);
    } catch (const SourceError&) {
        return 0.0;
    }
    std::vector<std::string> gold_subtrees;
    collect_serializations(gold_tree, gold_subtrees);
    std::vector<std::string> pred_list;
    collect_serializations(pred_tree, pred_list);
    std::set<std::string> pred_set(pred_list.begin(), pred_list.end());
    std::size_t matched = 0;
    for (const std::string& s : gold_subtrees) matched += pred_set.count(s);
    return static_cast<double>(matched) / static_cast<double>(gold_subtrees.size());
}

std::vector<CodeToken> metric_tokens(const std::string& text) {
    std::vector<CodeToken> out;
    std::vector<Token> toks;
    try {
        toks = syntax::tokenize(text);
    } catch (const SourceError&) {
        return out;
    }
    for (const Token& t : toks) {
        switch (t.kind) {
            case TokenKind::Identifier:
            case TokenKind::Number:
            case TokenKind::String:
            case TokenKind::Operator:
            case TokenKind::Punct:
                out.push_back({t.text, false});
                break;
            case TokenKind::Keyword:
                out.push_back({t.text, true});
                break;
            default:
                break;  // layout and comments carry no content
        }
    }
    return out;
}

double ngram_bleu(const std::vector<CodeToken>& pred, const std::vector<CodeToken>& gold,
                  int max_n, double keyword_weight) {
    if (pred.empty()) return 0.0;
    int usable = std::min<int>(max_n, static_cast<int>(pred.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= usable; ++n) {
        // gold n-gram counts
        std::map<std::vector<std::string>, int> gold_counts;
        for (std::size_t i = 0; i + n <= gold.size(); ++i) {
            std::vector<std::string> gram;
            for (int j = 0; j < n; ++j) gram.push_back(gold[i + j].text);
            ++gold_counts[gram];
        }
        std::map<std::vector<std::string>, int> pred_counts;
        std::map<std::vector<std::string>, double> gram_weight;
        double total_weight = 0.0;
        for (std::size_t i = 0; i + n <= pred.size(); ++i) {
            std::vector<std::string> gram;
            double w = 0.0;
            for (int j = 0; j < n; ++j) {
                gram.push_back(pred[i + j].text);
                w += token_weight(pred[i + j], keyword_weight);
            }
            w /= n;  // mean token weight, so an unweighted gram counts 1
            ++pred_counts[gram];
            gram_weight[gram] = w;
            total_weight += w;
        }
        double matched_weight = 0.0;
        for (const auto& [gram, count] : pred_counts) {
            auto it = gold_counts.find(gram);
            int clipped = it == gold_counts.end() ? 0 : std::min(count, it->second);
            matched_weight += clipped * gram_weight[gram];
        }
        double precision = matched_weight > 0.0 ? matched_weight / total_weight
                                                : 1.0 / (total_weight + 1.0);
        log_sum += std::log(precision);
    }
    double geo_mean = std::exp(log_sum / usable);
    double brevity = std::min(
        1.0, std::exp(1.0 - static_cast<double>(gold.size()) / static_cast<double>(pred.size())));
    return geo_mean * brevity;
}

double dataflow_match(const std::string& pred, const std::string& gold) {
    DataflowEdges gold_edges = extract_edges(gold);
    if (gold_edges.edges.empty()) return 1.0;
    DataflowEdges pred_edges = extract_edges(pred);
    std::size_t matched = 0;
    for (const auto& edge : gold_edges.edges) matched += pred_edges.edges.count(edge);
    return static_cast<double>(matched) / static_cast<double>(gold_edges.edges.size());
}

double codebleu(const std::string& pred, const std::string& gold, const CodeBleuConfig& config) {
    if (exact_match(pred, gold)) return 1.0;
    auto pred_tokens = metric_tokens(pred);
    auto gold_tokens = metric_tokens(gold);
    double plain = ngram_bleu(pred_tokens, gold_tokens, 4, 1.0);
    double weighted = ngram_bleu(pred_tokens, gold_tokens, 4, config.keyword_weight);
    double syntax_score = syntax_match(pred, gold);
    double dataflow = dataflow_match(pred, gold);
    return config.bleu_weight * plain + config.weighted_bleu_weight * weighted +
           config.syntax_weight * syntax_score + config.dataflow_weight * dataflow;
}

}  // namespace idecoder::eval
