#pragma once

#include <filesystem>
#include <string>

namespace idecoder::test {

// Self-deleting temp directory for fixture repositories.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "idecoder");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& root, const std::string& rel,
                const std::string& content);
std::string read_file(const std::filesystem::path& path);

// The service/main fixture used across the suites: app/service.py defines
// Service with get_service_state, app/main.py imports it, app/util.py holds
// Helper, requirements.txt pins requests.
void build_service_repo(const std::filesystem::path& root);

// Inheritance fixture: diamond D(B, C), B(A), C(A) plus a cyclic pair.
void build_hierarchy_repo(const std::filesystem::path& root);

// Package fixture: pkg/ with __init__, relative imports, aliases, a module
// variable holding a constructor result, and single inheritance.
void build_package_repo(const std::filesystem::path& root);

// Synthetic ordering corpus: `count` one-repo tasks whose gold body calls a
// method defined in another file. Odd-numbered repos carry a decoy file that
// dominates lexical retrieval, starving the RAG baseline of the signature;
// the signature-gated mock answers the gold body only when the prompt shows
// the cross-file signature.
struct OrderingCorpus {
    std::filesystem::path dataset;  // JSONL dataset file
    std::string mock_script_json;   // signature-gated MockScript, as JSON
};
OrderingCorpus build_ordering_corpus(const std::filesystem::path& root, int count);

}  // namespace idecoder::test
