#include <fstream>

#include <json.hpp>

#include "idecoder/errors.hpp"
#include "idecoder/eval.hpp"

namespace idecoder::eval {

namespace {

int body_line_count(const std::string& body) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : body) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos)
        lines.pop_back();
    return static_cast<int>(lines.size());
}

}  // namespace

DatasetLoad load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open dataset");
    DatasetLoad load;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw FormatError(line_no, "invalid JSON");
        if (!doc.is_object() || !doc.contains("repo") || !doc.contains("module") ||
            !doc.contains("function") || !doc.contains("gold_body"))
            throw FormatError(line_no, "missing repo/module/function/gold_body");
        EvalTask task;
        try {
            task.repo = doc["repo"].get<std::string>();
            task.module = doc["module"].get<std::string>();
            task.function = doc["function"].get<std::string>();
            task.gold_body = doc["gold_body"].get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw FormatError(line_no, "field has wrong type");
        }
        int count = body_line_count(task.gold_body);
        if (count >= 15) {
            load.warnings.push_back("line " + std::to_string(line_no) + ": gold body has " +
                                    std::to_string(count) + " lines, dataset filter requires < 15");
            continue;
        }
        load.tasks.push_back(std::move(task));
    }
    return load;
}

}  // namespace idecoder::eval
