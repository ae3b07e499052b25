#include <doctest.h>

#include <algorithm>
#include <string>

#include "idecoder/errors.hpp"
#include "idecoder/lexer.hpp"
#include "idecoder/parser.hpp"

using namespace idecoder;
using syntax::ModuleAst;

namespace {

const char* kServiceSource =
    "class Service:\n"
    "    \"\"\"Manages service lifecycle.\"\"\"\n"
    "    def get_service_state(self) -> str:\n"
    "        return self.state\n";

bool has_chain(const ModuleAst& ast, const std::vector<std::string>& chain) {
    for (const auto& occ : ast.occurrences)
        if (occ.chain == chain) return true;
    return false;
}

}  // namespace

TEST_CASE("class with docstring and annotated method") {
    ModuleAst ast = syntax::parse_module(kServiceSource, "app/service.py");
    REQUIRE(ast.classes.size() == 1);
    const auto& cls = ast.classes[0];
    CHECK(cls.name == "Service");
    REQUIRE(cls.docstring.has_value());
    CHECK(*cls.docstring == "Manages service lifecycle.");
    REQUIRE(cls.methods.size() == 1);
    const auto& method = cls.methods[0];
    CHECK(method.name == "get_service_state");
    CHECK(method.is_method);
    REQUIRE(method.return_annotation.has_value());
    CHECK(*method.return_annotation == "str");
    REQUIRE(method.params.size() == 1);
    CHECK(method.params[0].name == "self");
    CHECK(method.body_span.first == 4);
    CHECK(method.body_span.last == 4);
    CHECK(cls.span.first == 1);
    CHECK(cls.span.last == 4);
}

TEST_CASE("from import with alias") {
    ModuleAst ast = syntax::parse_module("from app.service import Service as S\n", "m.py");
    REQUIRE(ast.imports.size() == 1);
    const auto& imp = ast.imports[0];
    CHECK(imp.is_from);
    CHECK(imp.module_path == "app.service");
    CHECK(imp.relative_dots == 0);
    REQUIRE(imp.imported_names.size() == 1);
    CHECK(imp.imported_names[0].first == "Service");
    REQUIRE(imp.imported_names[0].second.has_value());
    CHECK(*imp.imported_names[0].second == "S");
}

TEST_CASE("relative and plain import forms") {
    ModuleAst ast = syntax::parse_module(
        "from . import service\n"
        "from ..pkg import thing\n"
        "import os.path as osp\n"
        "import a, b\n",
        "m.py");
    REQUIRE(ast.imports.size() == 5);
    CHECK(ast.imports[0].relative_dots == 1);
    CHECK(ast.imports[0].module_path.empty());
    CHECK(ast.imports[1].relative_dots == 2);
    CHECK(ast.imports[1].module_path == "pkg");
    CHECK(ast.imports[2].module_alias.value() == "osp");
    CHECK(ast.imports[2].bound_name() == "osp");
    CHECK(ast.imports[3].module_path == "a");
    CHECK(ast.imports[4].module_path == "b");
    CHECK(ast.imports[3].imported_names.empty());  // plain form carries no names
}

TEST_CASE("unsupported statement becomes an opaque span, neighbors still parse") {
    ModuleAst ast = syntax::parse_module(
        "class A:\n"
        "    pass\n"
        "\n"
        "match x:\n"
        "    case 1:\n"
        "        pass\n"
        "\n"
        "def tail():\n"
        "    return 1\n",
        "m.py");
    REQUIRE(ast.classes.size() == 1);
    REQUIRE(ast.functions.size() == 1);
    CHECK(ast.functions[0].name == "tail");
    bool found = false;
    for (const auto& span : ast.opaque_statements)
        found |= span.first == 4 && span.last == 6;
    CHECK(found);
}

TEST_CASE("module docstring and module variables") {
    ModuleAst ast = syntax::parse_module(
        "\"\"\"Entry point.\"\"\"\n"
        "\n"
        "DEBUG = True\n"
        "LIMIT: int = 10\n"
        "svc = Service()\n",
        "m.py");
    REQUIRE(ast.module_docstring.has_value());
    CHECK(*ast.module_docstring == "Entry point.");
    REQUIRE(ast.variables.size() == 3);
    CHECK(ast.variables[0].name == "DEBUG");
    CHECK(ast.variables[1].annotation.value() == "int");
    CHECK(ast.variables[2].constructor.value() == "Service");
}

TEST_CASE("malformed def raises ParseError") {
    CHECK_THROWS_AS((void)syntax::parse_module("def f(:\n", "m.py"), ParseError);
    CHECK_THROWS_AS((void)syntax::parse_module("def (x):\n    pass\n", "m.py"), ParseError);
    CHECK_THROWS_AS((void)syntax::parse_module("class :\n    pass\n", "m.py"), ParseError);
}

TEST_CASE("function line count excludes signature and trailing blanks") {
    ModuleAst one = syntax::parse_module("def f():\n    return 1\n", "m.py");
    CHECK(syntax::function_line_count(one.functions[0]) == 1);

    // 3 code lines followed by 2 blank lines inside the file
    ModuleAst trailing = syntax::parse_module(
        "def g():\n"
        "    a = 1\n"
        "    b = 2\n"
        "    return a + b\n"
        "\n"
        "\n"
        "def after():\n"
        "    pass\n",
        "m.py");
    CHECK(syntax::function_line_count(trailing.functions[0]) == 3);

    // dataset filter boundary: a 14-line body passes, 15 lines are excluded
    std::string body14, body15;
    for (int i = 0; i < 14; ++i) body14 += "    x" + std::to_string(i) + " = " + std::to_string(i) + "\n";
    body15 = body14 + "    x14 = 14\n";
    ModuleAst f14 = syntax::parse_module("def h():\n" + body14, "m.py");
    ModuleAst f15 = syntax::parse_module("def h():\n" + body15, "m.py");
    CHECK(syntax::function_line_count(f14.functions[0]) == 14);
    CHECK(syntax::function_line_count(f14.functions[0]) < 15);
    CHECK(syntax::function_line_count(f15.functions[0]) == 15);
    CHECK_FALSE(syntax::function_line_count(f15.functions[0]) < 15);
}

TEST_CASE("occurrences capture reference chains, not declarations") {
    ModuleAst ast = syntax::parse_module(
        "from app.service import Service\n"
        "\n"
        "def log_state(svc: Service) -> str:\n"
        "    return svc.get_service_state()\n",
        "m.py");
    CHECK(has_chain(ast, {"svc", "get_service_state"}));
    CHECK(has_chain(ast, {"Service"}));  // the annotation reference
    // declaration names are excluded
    CHECK_FALSE(has_chain(ast, {"log_state"}));
    for (const auto& occ : ast.occurrences) CHECK(occ.chain != std::vector<std::string>{"svc"});
}

TEST_CASE("assignment targets and keyword labels are not occurrences") {
    ModuleAst ast = syntax::parse_module(
        "def f():\n"
        "    total = compute(limit=10)\n"
        "    return total\n",
        "m.py");
    CHECK(has_chain(ast, {"compute"}));
    CHECK(has_chain(ast, {"total"}));  // the `return total` read
    int total_uses = 0;
    for (const auto& occ : ast.occurrences)
        total_uses += occ.chain == std::vector<std::string>{"total"};
    CHECK(total_uses == 1);
    CHECK_FALSE(has_chain(ast, {"limit"}));
}

TEST_CASE("decorators are recorded by dotted name only") {
    ModuleAst ast = syntax::parse_module(
        "@app.route(\"/x\")\n"
        "@cached\n"
        "def handler():\n"
        "    pass\n",
        "m.py");
    REQUIRE(ast.functions.size() == 1);
    CHECK(ast.functions[0].decorators == std::vector<std::string>{"app.route", "cached"});
}

TEST_CASE("async def parses like def") {
    ModuleAst ast = syntax::parse_module("async def fetch(url: str) -> bytes:\n    pass\n", "m.py");
    REQUIRE(ast.functions.size() == 1);
    CHECK(ast.functions[0].name == "fetch");
    CHECK(ast.functions[0].params[0].annotation.value() == "str");
}

TEST_CASE("class attributes and last definition wins") {
    ModuleAst ast = syntax::parse_module(
        "class C:\n"
        "    x: int = 1\n"
        "    y = 2\n"
        "    def m(self):\n"
        "        return 1\n"
        "    def m(self):\n"
        "        return 2\n",
        "m.py");
    const auto& cls = ast.classes[0];
    REQUIRE(cls.attributes.size() == 2);
    CHECK(cls.attributes[0].annotation.value() == "int");
    CHECK_FALSE(cls.attributes[1].annotation.has_value());
    REQUIRE(cls.methods.size() == 1);
    CHECK(cls.methods[0].body_span.first == 7);
}

TEST_CASE("nested classes are extracted") {
    ModuleAst ast = syntax::parse_module(
        "class Outer:\n"
        "    class Inner:\n"
        "        def m(self):\n"
        "            pass\n",
        "m.py");
    REQUIRE(ast.classes.size() == 1);
    REQUIRE(ast.classes[0].nested_classes.size() == 1);
    CHECK(ast.classes[0].nested_classes[0].name == "Inner");
    CHECK(ast.classes[0].nested_classes[0].methods.size() == 1);
}

TEST_CASE("default values keep their source text") {
    ModuleAst ast = syntax::parse_module(
        "def f(a: int = 3, *args, b=\"x, y\", **kw) -> None:\n    pass\n", "m.py");
    const auto& fn = ast.functions[0];
    REQUIRE(fn.params.size() == 4);
    CHECK(fn.params[0].default_text.value() == "3");
    CHECK(fn.params[1].kind == syntax::ParamKind::VarArg);
    CHECK(fn.params[2].default_text.value() == "\"x, y\"");
    CHECK(fn.params[3].kind == syntax::ParamKind::KwVarArg);
    CHECK(fn.return_annotation.value() == "None");
}

TEST_CASE("parse is deterministic") {
    std::string source =
        "import os\n"
        "\n"
        "class A:\n"
        "    def m(self):\n"
        "        return os.path\n";
    ModuleAst a = syntax::parse_module(source, "m.py");
    ModuleAst b = syntax::parse_module(source, "m.py");
    CHECK(a.occurrences.size() == b.occurrences.size());
    CHECK(a.classes[0].span.first == b.classes[0].span.first);
    CHECK(a.classes[0].span.last == b.classes[0].span.last);
    CHECK(a.source == b.source);
}

TEST_CASE("kitchen sink: a construct-heavy file degrades gracefully") {
    const std::string source =
        "\"\"\"Module doc.\"\"\"\n"
        "from __future__ import annotations\n"
        "import os, sys\n"
        "from typing import (\n"
        "    Optional,\n"
        "    List,\n"
        ")\n"
        "\n"
        "GLOBAL_MAP = {\n"
        "    'a': [1, 2, 3],\n"
        "    'b': (x for x in range(3)),\n"
        "}\n"
        "\n"
        "if os.name == 'posix':\n"
        "    PLATFORM = 'posix'\n"
        "else:\n"
        "    PLATFORM = 'other'\n"
        "\n"
        "\n"
        "@functools.lru_cache(maxsize=None)\n"
        "async def fetch(url: str, *, retries: int = 3, **kwargs) -> Optional[bytes]:\n"
        "    \"\"\"Fetch a URL.\"\"\"\n"
        "    async with session.get(url) as response:\n"
        "        data = await response.read()\n"
        "    result = [chunk async for chunk in stream if chunk]\n"
        "    fn = lambda a, b=2: a + b\n"
        "    walrus = (n := len(data))\n"
        "    match data:\n"
        "        case b'':\n"
        "            return None\n"
        "        case _:\n"
        "            return data\n"
        "\n"
        "\n"
        "class Mixed(Base, metaclass=Meta):\n"
        "    field: List[int] = []\n"
        "    other = compute()\n"
        "\n"
        "    def method(self, x, /, y, *args, z=1, **kw):\n"
        "        global GLOBAL_MAP\n"
        "        del kw['gone']\n"
        "        try:\n"
        "            yield from range(x)\n"
        "        except (ValueError, KeyError) as err:\n"
        "            raise RuntimeError('wrapped') from err\n"
        "        finally:\n"
        "            pass\n";
    syntax::ModuleAst ast = syntax::parse_module(source, "sink.py");
    CHECK(ast.module_docstring.value() == "Module doc.");
    CHECK(ast.imports.size() == 4);  // os, sys, __future__, typing
    REQUIRE(ast.functions.size() == 1);
    CHECK(ast.functions[0].name == "fetch");
    CHECK(ast.functions[0].docstring.value() == "Fetch a URL.");
    CHECK(ast.functions[0].decorators == std::vector<std::string>{"functools.lru_cache"});
    REQUIRE(ast.classes.size() == 1);
    CHECK(ast.classes[0].name == "Mixed");
    CHECK(ast.classes[0].bases == std::vector<std::string>{"Base"});
    REQUIRE(ast.classes[0].methods.size() == 1);
    CHECK(ast.classes[0].methods[0].params.size() == 6);  // self, x, y, *args, z, **kw
    CHECK(ast.classes[0].attributes.size() == 2);
    CHECK(!ast.opaque_statements.empty());  // the if/else block

    // round-trip still holds on the full construct mix
    auto toks = syntax::tokenize(source);
    std::string rebuilt;
    for (const auto& t : toks) rebuilt += t.trivia + t.text;
    CHECK(rebuilt == source);
}

TEST_CASE("span soundness: sibling declaration spans do not overlap") {
    ModuleAst ast = syntax::parse_module(
        "def a():\n    return 1\n\n\ndef b():\n    return 2\n\n\nclass C:\n    pass\n", "m.py");
    REQUIRE(ast.functions.size() == 2);
    CHECK(ast.functions[0].body_span.last < ast.functions[1].def_line);
    CHECK(ast.functions[1].body_span.last < ast.classes[0].span.first);
}
