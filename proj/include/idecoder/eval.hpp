#pragma once

#include <optional>
#include <string>
#include <vector>

#include "idecoder/context.hpp"
#include "idecoder/index.hpp"
#include "idecoder/llm.hpp"
#include "idecoder/prompt.hpp"

namespace idecoder::eval {

struct EvalTask {
    std::string repo;      // repository root path
    std::string module;    // dotted module path
    std::string function;  // qualified function name
    std::string gold_body;
};

struct DatasetLoad {
    std::vector<EvalTask> tasks;
    std::vector<std::string> warnings;  // tasks rejected by the <15-line filter
};

// JSONL, one task per line: {"repo","module","function","gold_body"}.
// Throws FormatError(line) on malformed JSON or missing fields.
DatasetLoad load_dataset(const std::string& path);

// ---- metrics ----

// Normalization: CRLF to LF, per-line trailing whitespace stripped, leading
// and trailing blank lines dropped.
std::string normalize_completion(const std::string& text);
int exact_match(const std::string& pred, const std::string& gold);

// Fraction of gold statement-tree subtrees structurally present in pred;
// unparseable pred scores 0.
double syntax_match(const std::string& pred, const std::string& gold);

struct CodeToken {
    std::string text;
    bool keyword = false;
    bool operator==(const CodeToken& other) const = default;
};

// Token texts for BLEU: comments and layout tokens removed.
std::vector<CodeToken> metric_tokens(const std::string& text);

// Geometric mean of modified n-gram precisions with add-one smoothing on
// zero counts, times brevity penalty min(1, exp(1 - |gold|/|pred|)).
// Empty pred yields 0.
double ngram_bleu(const std::vector<CodeToken>& pred, const std::vector<CodeToken>& gold,
                  int max_n = 4, double keyword_weight = 1.0);

// Def-use line edges with variables renamed var_0, var_1... in
// first-definition order; |gold ∩ pred| / |gold|, 1.0 when gold has none.
double dataflow_match(const std::string& pred, const std::string& gold);

struct CodeBleuConfig {
    double bleu_weight = 0.25;
    double weighted_bleu_weight = 0.25;
    double syntax_weight = 0.25;
    double dataflow_weight = 0.25;
    double keyword_weight = 4.0;
};

double codebleu(const std::string& pred, const std::string& gold,
                const CodeBleuConfig& config = {});

// ---- retrieval (RAG baseline) ----

struct Chunk {
    std::string file;  // repo-relative path
    int start_line = 1;
    std::string text;
    double score = 0.0;
};

// Sliding window of chunk_lines (stride = ceil(chunk_lines/2)) over every
// repo file except the excluded module, scored by Jaccard similarity of
// identifier sets against the query; ties break by path then start line.
std::vector<Chunk> retrieve_chunks(const index::RepoIndex& index, const std::string& query,
                                   const std::string& exclude_module, int k, int chunk_lines);

// ---- runner ----

struct TaskRow {
    int task_index = 0;
    std::string module;
    std::string function;
    double em = 0.0;
    double codebleu_score = 0.0;
    double syntax_match_score = 0.0;
    std::string error;  // nonempty when the backend failed for this task
};

struct MetricsReport {
    std::string strategy;
    int task_count = 0;
    double em_percent = 0.0;
    double codebleu_percent = 0.0;
    double syntax_match_percent = 0.0;
    int errors = 0;
    std::vector<TaskRow> rows;
};

struct RunOptions {
    prompt::Budget budget;
    prompt::RagOptions rag;
    context::ContextOptions context;
    int max_refine_iters = 2;
    CodeBleuConfig codebleu;
    std::vector<std::string> ignore;        // extra ignore globs for indexing
    std::optional<std::string> trace_path;  // per-task JSONL when set
};

MetricsReport run_eval(const std::vector<EvalTask>& dataset, prompt::Strategy strategy,
                       const llm::BackendConfig& backend, const RunOptions& options);

std::string report_json(const MetricsReport& report);

}  // namespace idecoder::eval
