#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "idecoder/body.hpp"
#include "idecoder/context.hpp"
#include "idecoder/errors.hpp"
#include "idecoder/eval.hpp"
#include "idecoder/index.hpp"
#include "idecoder/lexer.hpp"
#include "idecoder/llm.hpp"
#include "idecoder/parser.hpp"
#include "idecoder/prompt.hpp"
#include "idecoder/refine.hpp"

namespace py = pybind11;
using namespace idecoder;

namespace {

py::object json_to_py(const std::string& dumped) {
    return py::module_::import("json").attr("loads")(dumped);
}

py::list tokenize_py(const std::string& source) {
    py::list out;
    for (const syntax::Token& t : syntax::tokenize(source)) {
        py::dict d;
        d["kind"] = std::string(syntax::to_string(t.kind));
        d["text"] = t.text;
        d["line"] = t.line;
        d["col"] = t.col;
        out.append(std::move(d));
    }
    return out;
}

nlohmann::ordered_json function_to_json(const syntax::FunctionDecl& fn) {
    nlohmann::ordered_json j;
    j["name"] = fn.name;
    j["params"] = nlohmann::ordered_json::array();
    for (const auto& p : fn.params) {
        nlohmann::ordered_json pj;
        pj["name"] = p.name;
        if (p.annotation) pj["annotation"] = *p.annotation;
        if (p.default_text) pj["default"] = *p.default_text;
        j["params"].push_back(std::move(pj));
    }
    if (fn.return_annotation) j["return_annotation"] = *fn.return_annotation;
    if (fn.docstring) j["docstring"] = *fn.docstring;
    j["body_span"] = {fn.body_span.first, fn.body_span.last};
    j["is_method"] = fn.is_method;
    return j;
}

nlohmann::ordered_json class_to_json(const syntax::ClassDecl& cls) {
    nlohmann::ordered_json j;
    j["name"] = cls.name;
    j["bases"] = cls.bases;
    if (cls.docstring) j["docstring"] = *cls.docstring;
    j["methods"] = nlohmann::ordered_json::array();
    for (const auto& m : cls.methods) j["methods"].push_back(function_to_json(m));
    j["attributes"] = nlohmann::ordered_json::array();
    for (const auto& a : cls.attributes) {
        nlohmann::ordered_json aj;
        aj["name"] = a.name;
        if (a.annotation) aj["annotation"] = *a.annotation;
        j["attributes"].push_back(std::move(aj));
    }
    j["span"] = {cls.span.first, cls.span.last};
    for (const auto& inner : cls.nested_classes)
        j["classes"].push_back(class_to_json(inner));
    return j;
}

py::object parse_module_py(const std::string& source, const std::string& path) {
    syntax::ModuleAst ast = syntax::parse_module(source, path);
    nlohmann::ordered_json j;
    j["path"] = ast.path;
    if (ast.module_docstring) j["docstring"] = *ast.module_docstring;
    j["imports"] = nlohmann::ordered_json::array();
    for (const auto& imp : ast.imports) {
        nlohmann::ordered_json ij;
        ij["form"] = imp.is_from ? "from" : "plain";
        ij["module"] = imp.module_path;
        ij["dots"] = imp.relative_dots;
        ij["names"] = nlohmann::ordered_json::array();
        for (const auto& [name, alias] : imp.imported_names) {
            nlohmann::ordered_json nj;
            nj["name"] = name;
            if (alias) nj["alias"] = *alias;
            ij["names"].push_back(std::move(nj));
        }
        if (imp.module_alias) ij["alias"] = *imp.module_alias;
        j["imports"].push_back(std::move(ij));
    }
    j["classes"] = nlohmann::ordered_json::array();
    for (const auto& cls : ast.classes) j["classes"].push_back(class_to_json(cls));
    j["functions"] = nlohmann::ordered_json::array();
    for (const auto& fn : ast.functions) j["functions"].push_back(function_to_json(fn));
    j["opaque_statements"] = nlohmann::ordered_json::array();
    for (const auto& span : ast.opaque_statements)
        j["opaque_statements"].push_back({span.first, span.last});
    j["occurrences"] = nlohmann::ordered_json::array();
    for (const auto& occ : ast.occurrences) {
        nlohmann::ordered_json oj;
        oj["chain"] = occ.chain;
        oj["line"] = occ.line;
        oj["col"] = occ.col;
        j["occurrences"].push_back(std::move(oj));
    }
    return json_to_py(j.dump());
}

class PyRepoIndex {
public:
    PyRepoIndex(const std::string& root, const std::vector<std::string>& ignore)
        : index_(index::build_repo_index(root, ignore)) {}

    std::vector<std::string> module_paths() const {
        std::vector<std::string> out;
        for (const auto& [dotted, ast] : index_.modules) out.push_back(dotted);
        return out;
    }

    py::object symbol_table() const { return json_to_py(index::symbol_table_json(index_)); }

    py::object resolve(const std::vector<std::string>& chain, const std::string& module,
                       const std::string& function) const {
        auto sym = index::resolve_name(chain, {module, function}, index_);
        if (!sym) return py::none();
        py::dict d;
        d["qualified_name"] = sym->qualified_name;
        d["kind"] = std::string(index::to_string(sym->kind));
        if (sym->signature_text) d["signature"] = *sym->signature_text;
        return d;
    }

    py::object explain_context(const std::string& module, const std::string& function) const {
        auto point = context::make_completion_point(index_, module, function);
        auto ctx = context::identify_context(point, index_);
        return json_to_py(context::context_json(ctx));
    }

    std::string build_prompt_text(const std::string& module, const std::string& function,
                                  const std::string& strategy, int max_chars,
                                  int reserved_for_prefix) const {
        auto point = context::make_completion_point(index_, module, function);
        auto ctx = context::identify_context(point, index_);
        prompt::Budget budget{max_chars, reserved_for_prefix};
        auto plan =
            prompt::build_prompt(ctx, prompt::strategy_from_name(strategy), budget, index_);
        return plan.realized;
    }

    py::list lint(const std::string& module, const std::string& function,
                  const std::string& completion) const {
        auto point = context::make_completion_point(index_, module, function);
        py::list out;
        for (const auto& d : refine::lint_completion(completion, point, index_)) {
            py::dict j;
            j["kind"] = std::string(refine::to_string(d.kind));
            j["line"] = d.line;
            j["col"] = d.col;
            j["message"] = d.message;
            if (d.suggested_fix) j["suggested_fix"] = *d.suggested_fix;
            out.append(std::move(j));
        }
        return out;
    }

    py::list retrieve(const std::string& query, const std::string& exclude_module, int k,
                      int chunk_lines) const {
        py::list out;
        for (const auto& chunk : eval::retrieve_chunks(index_, query, exclude_module, k,
                                                       chunk_lines)) {
            py::dict j;
            j["file"] = chunk.file;
            j["start_line"] = chunk.start_line;
            j["text"] = chunk.text;
            j["score"] = chunk.score;
            out.append(std::move(j));
        }
        return out;
    }

private:
    index::RepoIndex index_;
};

std::string complete_with_mock(const std::string& prompt, const std::string& script_json) {
    llm::BackendConfig config;
    config.kind = llm::BackendKind::Mock;
    config.mock = llm::mock_script_from_json(script_json);
    return llm::complete(prompt, config);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Repository-level code completion: lexing, indexing, context, metrics";

    m.def("tokenize", &tokenize_py, py::arg("source"),
          "Lex Python source into (kind, text, line, col) token dicts");
    m.def("parse_module", &parse_module_py, py::arg("source"), py::arg("path") = "<memory>",
          "Parse one source file into a declaration-level dict");
    m.def("function_line_count", [](const std::string& source, const std::string& name) {
        syntax::ModuleAst ast = syntax::parse_module(source, "<memory>");
        for (const auto& fn : ast.functions)
            if (fn.name == name) return syntax::function_line_count(fn);
        throw PointError("no such function: " + name);
    });

    m.def("exact_match", &eval::exact_match, py::arg("pred"), py::arg("gold"));
    m.def("syntax_match", &eval::syntax_match, py::arg("pred"), py::arg("gold"));
    m.def("dataflow_match", &eval::dataflow_match, py::arg("pred"), py::arg("gold"));
    m.def(
        "codebleu",
        [](const std::string& pred, const std::string& gold) { return eval::codebleu(pred, gold); },
        py::arg("pred"), py::arg("gold"));
    m.def(
        "ngram_bleu",
        [](const std::string& pred, const std::string& gold, int max_n) {
            return eval::ngram_bleu(eval::metric_tokens(pred), eval::metric_tokens(gold), max_n);
        },
        py::arg("pred"), py::arg("gold"), py::arg("max_n") = 4);

    m.def("complete_with_mock", &complete_with_mock, py::arg("prompt"), py::arg("script_json"));

    py::class_<PyRepoIndex>(m, "RepoIndex")
        .def(py::init<const std::string&, const std::vector<std::string>&>(), py::arg("root"),
             py::arg("ignore") = std::vector<std::string>{})
        .def("module_paths", &PyRepoIndex::module_paths)
        .def("symbol_table", &PyRepoIndex::symbol_table)
        .def("resolve", &PyRepoIndex::resolve, py::arg("chain"), py::arg("module"),
             py::arg("function") = "")
        .def("explain_context", &PyRepoIndex::explain_context, py::arg("module"),
             py::arg("function"))
        .def("build_prompt", &PyRepoIndex::build_prompt_text, py::arg("module"),
             py::arg("function"), py::arg("strategy") = "idecoder", py::arg("max_chars") = 8000,
             py::arg("reserved_for_prefix") = 1000)
        .def("lint", &PyRepoIndex::lint, py::arg("module"), py::arg("function"),
             py::arg("completion"))
        .def("retrieve", &PyRepoIndex::retrieve, py::arg("query"), py::arg("exclude_module") = "",
             py::arg("k") = 3, py::arg("chunk_lines") = 12);

    py::register_exception<LexError>(m, "LexError");
    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<PointError>(m, "PointError");
    py::register_exception<BudgetError>(m, "BudgetError");
}
