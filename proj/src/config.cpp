#include "idecoder/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "idecoder/errors.hpp"

namespace idecoder::config {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!known.count(key)) throw ConfigError("unknown config key: " + where + key);
}

double number(const json& obj, const char* key, double fallback, double min_value,
              const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(where + key + " must be a number");
    double v = obj[key].get<double>();
    if (v < min_value)
        throw ConfigError(where + key + " must be >= " + std::to_string(min_value));
    return v;
}

std::string text(const json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<std::string>();
}

}  // namespace

Config parse_config(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config is not valid JSON");
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    Config cfg;
    reject_unknown(doc,
                   {"backend", "budget", "max_refine_iters", "relevance", "class_member_cap",
                    "rag", "codebleu", "ignore"},
                   "");

    if (doc.contains("backend")) {
        const json& b = doc["backend"];
        reject_unknown(
            b, {"kind", "endpoint", "model", "temperature", "timeout_seconds", "api_key_env",
                "mock_script"},
            "backend.");
        std::string kind = text(b, "kind", "mock");
        if (kind == "mock")
            cfg.backend.kind = llm::BackendKind::Mock;
        else if (kind == "http")
            cfg.backend.kind = llm::BackendKind::Http;
        else
            throw ConfigError("backend.kind must be \"http\" or \"mock\"");
        cfg.backend.endpoint = text(b, "endpoint", "");
        cfg.backend.model = text(b, "model", "");
        cfg.backend.temperature = number(b, "temperature", 0.0, 0.0, "backend.");
        cfg.backend.timeout_seconds = number(b, "timeout_seconds", 30.0, 0.0, "backend.");
        cfg.backend.api_key_env = text(b, "api_key_env", cfg.backend.api_key_env);
        if (b.contains("mock_script"))
            cfg.backend.mock = llm::load_mock_script(b["mock_script"].get<std::string>());
        if (cfg.backend.kind == llm::BackendKind::Http &&
            (cfg.backend.endpoint.empty() || cfg.backend.model.empty()))
            throw ConfigError("http backend requires endpoint and model");
    }
    if (doc.contains("budget")) {
        const json& b = doc["budget"];
        reject_unknown(b, {"max_chars", "max_tokens", "chars_per_token", "reserved_for_prefix"},
                       "budget.");
        if (b.contains("max_chars") && b.contains("max_tokens"))
            throw ConfigError("budget.max_chars and budget.max_tokens are mutually exclusive");
        if (b.contains("max_tokens")) {
            // token budgets calibrate to characters through chars_per_token
            double ratio = number(b, "chars_per_token", 4.0, 0.1, "budget.");
            cfg.budget.max_chars =
                static_cast<int>(number(b, "max_tokens", 2000, 1, "budget.") * ratio);
        } else {
            cfg.budget.max_chars = static_cast<int>(number(b, "max_chars", 8000, 1, "budget."));
        }
        cfg.budget.reserved_for_prefix =
            static_cast<int>(number(b, "reserved_for_prefix", 1000, 0, "budget."));
        if (cfg.budget.reserved_for_prefix > cfg.budget.max_chars)
            throw ConfigError("budget.reserved_for_prefix exceeds budget.max_chars");
    }
    if (doc.contains("max_refine_iters"))
        cfg.max_refine_iters = static_cast<int>(number(doc, "max_refine_iters", 2, 0, ""));
    if (doc.contains("relevance")) {
        const json& r = doc["relevance"];
        reject_unknown(
            r, {"referenced_weight", "user_defined_weight", "elsewhere_weight", "third_party_cap"},
            "relevance.");
        cfg.relevance.referenced_in_function = number(r, "referenced_weight", 3.0, 0.0, "relevance.");
        cfg.relevance.user_defined = number(r, "user_defined_weight", 2.0, 0.0, "relevance.");
        cfg.relevance.referenced_elsewhere = number(r, "elsewhere_weight", 1.0, 0.0, "relevance.");
        cfg.relevance.third_party_cap = number(r, "third_party_cap", 1.0, 0.0, "relevance.");
    }
    if (doc.contains("class_member_cap"))
        cfg.class_member_cap = static_cast<int>(number(doc, "class_member_cap", 10, 1, ""));
    if (doc.contains("rag")) {
        const json& r = doc["rag"];
        reject_unknown(r, {"k", "chunk_lines"}, "rag.");
        cfg.rag.k = static_cast<int>(number(r, "k", 3, 1, "rag."));
        cfg.rag.chunk_lines = static_cast<int>(number(r, "chunk_lines", 12, 1, "rag."));
    }
    if (doc.contains("codebleu")) {
        const json& c = doc["codebleu"];
        reject_unknown(c,
                       {"bleu_weight", "weighted_bleu_weight", "syntax_weight", "dataflow_weight",
                        "keyword_weight"},
                       "codebleu.");
        cfg.codebleu.bleu_weight = number(c, "bleu_weight", 0.25, 0.0, "codebleu.");
        cfg.codebleu.weighted_bleu_weight = number(c, "weighted_bleu_weight", 0.25, 0.0, "codebleu.");
        cfg.codebleu.syntax_weight = number(c, "syntax_weight", 0.25, 0.0, "codebleu.");
        cfg.codebleu.dataflow_weight = number(c, "dataflow_weight", 0.25, 0.0, "codebleu.");
        cfg.codebleu.keyword_weight = number(c, "keyword_weight", 4.0, 1.0, "codebleu.");
    }
    if (doc.contains("ignore")) {
        if (!doc["ignore"].is_array()) throw ConfigError("ignore must be an array of globs");
        for (const auto& g : doc["ignore"]) cfg.ignore.push_back(g.get<std::string>());
    }
    return cfg;
}

Config load_config(const std::string& path) {
    if (path.empty()) return Config{};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open config");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace idecoder::config
