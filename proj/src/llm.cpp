#include "idecoder/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "idecoder/errors.hpp"

namespace idecoder::llm {

namespace {

std::string answer_mock(const std::string& prompt, const MockScript& script) {
    for (const MockRule& rule : script.rules) {
        bool all = true;
        for (const std::string& needle : rule.require)
            all = all && prompt.find(needle) != std::string::npos;
        if (all) return rule.completion;
    }
    return script.fallback;
}

struct SplitUrl {
    std::string base;
    std::string path;
};

SplitUrl split_url(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw ProtocolError("endpoint is not a URL: " + endpoint);
    auto slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

std::string answer_http(const std::string& prompt, const BackendConfig& config) {
    if (config.endpoint.empty() || config.model.empty())
        throw ProtocolError("http backend requires endpoint and model");
    SplitUrl url = split_url(config.endpoint);

    nlohmann::json body;
    body["model"] = config.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = config.temperature;

    httplib::Client client(url.base);
    auto timeout = std::chrono::milliseconds(static_cast<long>(config.timeout_seconds * 1000));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    httplib::Headers headers;
    const char* key = config.api_key_env.empty() ? nullptr : std::getenv(config.api_key_env.c_str());
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

    auto post = [&]() -> httplib::Result {
        return client.Post(url.path, headers, body.dump(), "application/json");
    };
    httplib::Result res = post();
    if (!res) res = post();  // one retry on transport failure
    if (!res) throw TransportError("request to " + config.endpoint + " failed: " +
                                   httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
        throw AuthError("backend rejected credentials (" + std::to_string(res->status) + ")");
    if (res->status != 200)
        throw ProtocolError("backend returned status " + std::to_string(res->status));

    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) throw ProtocolError("response is not valid JSON");
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
        throw ProtocolError("response has no choices");
    const auto& message = doc["choices"][0];
    if (!message.contains("message") || !message["message"].contains("content") ||
        !message["message"]["content"].is_string())
        throw ProtocolError("response has no message content");
    return message["message"]["content"].get<std::string>();
}

}  // namespace

MockScript mock_script_from_json(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw ProtocolError("mock script is not valid JSON");
    MockScript script;
    if (doc.contains("fallback")) script.fallback = doc["fallback"].get<std::string>();
    if (doc.contains("rules")) {
        for (const auto& rule : doc["rules"]) {
            MockRule r;
            if (rule.contains("require"))
                for (const auto& needle : rule["require"]) r.require.push_back(needle.get<std::string>());
            r.completion = rule.value("completion", "");
            script.rules.push_back(std::move(r));
        }
    }
    return script;
}

MockScript load_mock_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open mock script");
    std::ostringstream buf;
    buf << in.rdbuf();
    return mock_script_from_json(buf.str());
}

std::string complete(const std::string& prompt, const BackendConfig& config) {
    if (config.kind == BackendKind::Mock) return answer_mock(prompt, config.mock);
    return answer_http(prompt, config);
}

}  // namespace idecoder::llm
