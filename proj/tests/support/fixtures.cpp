#include "support/fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;

namespace idecoder::test {

TempDir::TempDir(const std::string& tag) {
    std::random_device rd;
    for (int attempt = 0; attempt < 32; ++attempt) {
        fs::path candidate =
            fs::temp_directory_path() / (tag + "-" + std::to_string(rd() % 1000000));
        std::error_code ec;
        if (fs::create_directory(candidate, ec)) {
            path_ = candidate;
            return;
        }
    }
    throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& root, const std::string& rel, const std::string& content) {
    fs::path full = root / rel;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void build_service_repo(const fs::path& root) {
    write_file(root, "app/service.py",
               "\"\"\"Service layer.\"\"\"\n"
               "\n"
               "\n"
               "class Service:\n"
               "    \"\"\"Manages service lifecycle.\"\"\"\n"
               "\n"
               "    state: str = \"idle\"\n"
               "\n"
               "    def get_service_state(self) -> str:\n"
               "        return self.state\n"
               "\n"
               "    def restart(self, delay: int = 0) -> None:\n"
               "        self.state = \"restarting\"\n"
               "\n"
               "\n"
               "def make_service() -> Service:\n"
               "    return Service()\n");
    write_file(root, "app/util.py",
               "\"\"\"Utilities.\"\"\"\n"
               "\n"
               "\n"
               "class Helper:\n"
               "    \"\"\"Small helper.\"\"\"\n"
               "\n"
               "    def run(self) -> str:\n"
               "        return \"ok\"\n"
               "\n"
               "\n"
               "def format_state(state: str) -> str:\n"
               "    return \"[\" + state + \"]\"\n");
    write_file(root, "app/main.py",
               "\"\"\"Entry point.\"\"\"\n"
               "\n"
               "import requests\n"
               "from app.service import Service\n"
               "\n"
               "\n"
               "def log_state(svc: Service) -> str:\n"
               "    return svc.get_service_state()\n"
               "\n"
               "\n"
               "def start() -> str:\n"
               "    svc = Service()\n"
               "    return svc.get_service_state()\n");
    write_file(root, "requirements.txt",
               "requests==2.31.0\n"
               "numpy>=1.20\n");
}

OrderingCorpus build_ordering_corpus(const fs::path& root, int count) {
    OrderingCorpus corpus;
    corpus.dataset = root / "tasks.jsonl";
    std::ofstream dataset(corpus.dataset, std::ios::binary | std::ios::trunc);

    nlohmann::json script;
    script["fallback"] = "pass";
    script["rules"] = nlohmann::json::array();

    for (int i = 0; i < count; ++i) {
        std::string n = std::to_string(i);
        fs::path repo = root / ("repo_" + n);
        std::string signature = "def compute_value_" + n + "(self) -> str";

        write_file(repo, "lib_" + n + ".py",
                   "\"\"\"Widget library " + n + ".\"\"\"\n"
                   "\n"
                   "\n"
                   "class Widget" + n + ":\n"
                   "    \"\"\"Produces value " + n + ".\"\"\"\n"
                   "\n"
                   "    " + signature + ":\n"
                   "        return \"value-" + n + "\"\n");

        std::string gold = "w = Widget" + n + "()\nreturn w.compute_value_" + n + "()";
        write_file(repo, "main_" + n + ".py",
                   "\"\"\"Task " + n + " entry.\"\"\"\n"
                   "\n"
                   "from lib_" + n + " import Widget" + n + "\n"
                   "\n"
                   "\n"
                   "def run_" + n + "() -> str:\n"
                   "    w = Widget" + n + "()\n"
                   "    return w.compute_value_" + n + "()\n");

        if (i % 2 == 1) {
            // Decoy: every retrieval window shares the prefix identifier set
            // exactly, so its chunks outscore the library chunk.
            std::string decoy;
            for (int line = 0; line < 24; ++line)
                decoy += "lib_" + n + " = run_" + n + " = Widget" + n + " = str\n";
            write_file(repo, "aaa_decoy_" + n + ".py", decoy);
        }

        nlohmann::json task;
        task["repo"] = repo.string();
        task["module"] = "main_" + n;
        task["function"] = "run_" + n;
        task["gold_body"] = gold;
        dataset << task.dump() << "\n";

        nlohmann::json rule;
        rule["require"] = nlohmann::json::array({signature});
        rule["completion"] = gold;
        script["rules"].push_back(std::move(rule));
    }
    corpus.mock_script_json = script.dump();
    return corpus;
}

void build_package_repo(const fs::path& root) {
    write_file(root, "pkg/__init__.py", "");
    write_file(root, "pkg/models.py",
               "\"\"\"Data model layer.\"\"\"\n"
               "\n"
               "\n"
               "class Base:\n"
               "    def ident(self) -> str:\n"
               "        return \"base\"\n"
               "\n"
               "\n"
               "class Thing(Base):\n"
               "    \"\"\"A concrete thing.\"\"\"\n"
               "\n"
               "    label: str = \"thing\"\n"
               "\n"
               "    def act(self) -> \"Thing\":\n"
               "        return self\n");
    write_file(root, "pkg/store.py",
               "from . import models\n"
               "from .models import Thing as T\n"
               "\n"
               "current = models.Thing()\n"
               "\n"
               "\n"
               "def fetch() -> T:\n"
               "    return current\n"
               "\n"
               "\n"
               "def use_things():\n"
               "    t = T()\n"
               "    local = fetch()\n"
               "    return t.act()\n");
    write_file(root, "main.py",
               "import pkg.store\n"
               "from pkg.models import Base\n"
               "\n"
               "\n"
               "def run(base: Base):\n"
               "    thing = pkg.store.fetch()\n"
               "    return base.ident()\n");
}

void build_hierarchy_repo(const fs::path& root) {
    write_file(root, "shapes.py",
               "class A:\n"
               "    def f(self) -> str:\n"
               "        return \"a\"\n"
               "\n"
               "    def run(self) -> str:\n"
               "        return \"run\"\n"
               "\n"
               "\n"
               "class B(A):\n"
               "    pass\n"
               "\n"
               "\n"
               "class C(A):\n"
               "    def f(self) -> str:\n"
               "        return \"c\"\n"
               "\n"
               "\n"
               "class D(B, C):\n"
               "    pass\n");
    write_file(root, "loops.py",
               "class X(Y):\n"
               "    pass\n"
               "\n"
               "\n"
               "class Y(X):\n"
               "    pass\n");
}

}  // namespace idecoder::test
