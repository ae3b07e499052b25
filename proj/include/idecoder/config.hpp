#pragma once

#include <string>
#include <vector>

#include "idecoder/context.hpp"
#include "idecoder/eval.hpp"
#include "idecoder/llm.hpp"
#include "idecoder/prompt.hpp"

namespace idecoder::config {

struct Config {
    llm::BackendConfig backend;
    prompt::Budget budget;
    int max_refine_iters = 2;
    context::RelevanceWeights relevance;
    int class_member_cap = 10;
    prompt::RagOptions rag;
    eval::CodeBleuConfig codebleu;
    std::vector<std::string> ignore;
};

// Strict JSON config: unknown keys are rejected (ConfigError), numeric
// fields validated. Missing file or empty path yields the defaults.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);

}  // namespace idecoder::config
