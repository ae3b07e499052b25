#pragma once

#include <optional>
#include <string>
#include <vector>

namespace idecoder::llm {

// Deterministic scripted backend: the first rule whose required substrings
// all occur in the prompt wins, otherwise the fallback answers.
struct MockRule {
    std::vector<std::string> require;
    std::string completion;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::string fallback;
};

MockScript mock_script_from_json(const std::string& json_text);
MockScript load_mock_script(const std::string& path);

enum class BackendKind { Http, Mock };

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint;  // http kind: chat-completions URL
    std::string model;
    double temperature = 0.0;
    double timeout_seconds = 30.0;
    std::string api_key_env = "IDECODER_API_KEY";
    MockScript mock;
};

// One completion request. http: POST {model, messages:[{role:"user",
// content}], temperature}, answer read at choices[0].message.content; one
// retry on TransportError, none on ProtocolError. The mock never errors.
std::string complete(const std::string& prompt, const BackendConfig& config);

}  // namespace idecoder::llm
