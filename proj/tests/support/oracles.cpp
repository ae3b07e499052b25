#include "support/oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "idecoder/body.hpp"
#include "idecoder/errors.hpp"

namespace idecoder::test::oracle {

using syntax::BodyNode;
using syntax::ClassDecl;
using syntax::FunctionDecl;
using syntax::ImportDecl;
using syntax::ModuleAst;
using syntax::VariableDecl;

namespace {

bool same_gram(const std::vector<eval::CodeToken>& a, std::size_t i,
               const std::vector<eval::CodeToken>& b, std::size_t j, int n) {
    for (int k = 0; k < n; ++k)
        if (a[i + k].text != b[j + k].text) return false;
    return true;
}

int count_gram(const std::vector<eval::CodeToken>& where,
               const std::vector<eval::CodeToken>& gram_src, std::size_t gram_at, int n) {
    int count = 0;
    for (std::size_t i = 0; i + n <= where.size(); ++i)
        if (same_gram(where, i, gram_src, gram_at, n)) ++count;
    return count;
}

}  // namespace

double bleu(const std::vector<eval::CodeToken>& pred, const std::vector<eval::CodeToken>& gold,
            int max_n, double keyword_weight) {
    if (pred.empty()) return 0.0;
    int usable = std::min<int>(max_n, static_cast<int>(pred.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= usable; ++n) {
        double total = 0.0;
        double matched = 0.0;
        for (std::size_t i = 0; i + n <= pred.size(); ++i) {
            double w = 0.0;
            for (int k = 0; k < n; ++k) w += pred[i + k].keyword ? keyword_weight : 1.0;
            w /= n;  // mean token weight, matching the production convention
            total += w;
            bool first_occurrence = true;
            for (std::size_t j = 0; j < i && first_occurrence; ++j)
                if (same_gram(pred, j, pred, i, n)) first_occurrence = false;
            if (!first_occurrence) continue;
            int in_pred = count_gram(pred, pred, i, n);
            int in_gold = count_gram(gold, pred, i, n);
            matched += std::min(in_pred, in_gold) * w;
        }
        double p = matched > 0.0 ? matched / total : 1.0 / (total + 1.0);
        log_sum += std::log(p);
    }
    double geo = std::exp(log_sum / usable);
    double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(gold.size()) /
                                                 static_cast<double>(pred.size())));
    return geo * bp;
}

namespace {

bool tree_equal(const BodyNode& a, const BodyNode& b) {
    if (a.kind != b.kind || a.text != b.text) return false;
    if (a.children.size() != b.children.size()) return false;
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!tree_equal(a.children[i], b.children[i])) return false;
    return true;
}

void collect_nodes(const BodyNode& node, std::vector<const BodyNode*>& out) {
    out.push_back(&node);
    for (const BodyNode& child : node.children) collect_nodes(child, out);
}

}  // namespace

double syntax_match(const std::string& pred, const std::string& gold) {
    if (eval::exact_match(pred, gold)) return 1.0;
    BodyNode pred_tree, gold_tree;
    try {
        pred_tree = syntax::parse_body(pred);
    } catch (const SourceError&) {
        return 0.0;
    }
    try {
        gold_tree = syntax::parse_body(gold);
    } catch (const SourceError&) {
        return 0.0;
    }
    std::vector<const BodyNode*> gold_nodes, pred_nodes;
    collect_nodes(gold_tree, gold_nodes);
    collect_nodes(pred_tree, pred_nodes);
    std::size_t matched = 0;
    for (const BodyNode* g : gold_nodes) {
        bool found = false;
        for (const BodyNode* p : pred_nodes)
            if (tree_equal(*g, *p)) {
                found = true;
                break;
            }
        matched += found;
    }
    return static_cast<double>(matched) / static_cast<double>(gold_nodes.size());
}

namespace {

// Line-based def/use scan: no lexer. Strings and comments are stripped per
// physical line; the test corpus avoids bracket continuations.
struct LineScan {
    std::vector<std::string> names;  // identifiers, in order
    std::vector<bool> is_def;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_cont(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string strip_strings_and_comments(const std::string& line) {
    std::string out;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quote) {
            if (c == '\\') {
                ++i;
                continue;
            }
            if (c == quote) quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            out.push_back(' ');
            continue;
        }
        if (c == '#') break;
        out.push_back(c);
    }
    return out;
}

LineScan scan_line(const std::string& raw) {
    LineScan scan;
    std::string line = strip_strings_and_comments(raw);

    // positions of identifiers
    std::vector<std::pair<std::size_t, std::string>> idents;
    for (std::size_t i = 0; i < line.size();) {
        if (ident_start(line[i])) {
            std::size_t b = i;
            while (i < line.size() && ident_cont(line[i])) ++i;
            idents.emplace_back(b, line.substr(b, i - b));
        } else {
            ++i;
        }
    }

    // first top-level '=' (not ==, <=, >=, !=; aug-ops noted)
    int depth = 0;
    std::ptrdiff_t eq_pos = -1;
    bool aug = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if (depth != 0 || c != '=') continue;
        if (i + 1 < line.size() && line[i + 1] == '=') {
            ++i;
            continue;
        }
        if (i > 0 && std::string("<>!=").find(line[i - 1]) != std::string::npos) continue;
        if (i > 0 && std::string("+-*/%&|^@").find(line[i - 1]) != std::string::npos) aug = true;
        eq_pos = static_cast<std::ptrdiff_t>(i);
        break;
    }

    std::set<std::size_t> def_positions;
    std::size_t aug_target = std::string::npos;

    // leading target list NAME (, NAME)* straight from line start
    {
        std::size_t i = line.find_first_not_of(" \t");
        std::vector<std::size_t> heads;
        while (i != std::string::npos && i < line.size() && ident_start(line[i])) {
            heads.push_back(i);
            while (i < line.size() && ident_cont(line[i])) ++i;
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            if (i < line.size() && line[i] == ',') {
                ++i;
                while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
                continue;
            }
            break;
        }
        // keyword heads fall out later through the keyword filter
        if (!heads.empty() && eq_pos >= 0 && i != std::string::npos && i < line.size()) {
            if (!aug && static_cast<std::ptrdiff_t>(i) == eq_pos) {
                for (std::size_t pos : heads) def_positions.insert(pos);
            } else if (!aug && line[i] == ':' && heads.size() == 1) {
                def_positions.insert(heads.front());
            } else if (aug && heads.size() == 1 && static_cast<std::ptrdiff_t>(i) <= eq_pos &&
                       eq_pos <= static_cast<std::ptrdiff_t>(i) + 3) {
                aug_target = heads.front();
            }
        }
    }

    auto word_at = [&](std::size_t pos, const char* word) {
        std::size_t len = std::string(word).size();
        if (pos + len > line.size()) return false;
        if (line.compare(pos, len, word) != 0) return false;
        bool left_ok = pos == 0 || !ident_cont(line[pos - 1]);
        bool right_ok = pos + len == line.size() || !ident_cont(line[pos + len]);
        return left_ok && right_ok;
    };

    // for/as targets, including comma chains after `for`
    bool chain_active = false;
    for (std::size_t i = 1; i < idents.size(); ++i) {
        const auto& [pos, name] = idents[i];
        const auto& [ppos, pname] = idents[i - 1];
        bool after_for = pname == "for" && word_at(ppos, "for");
        bool after_as = pname == "as" && word_at(ppos, "as");
        if (after_for || after_as) {
            def_positions.insert(pos);
            chain_active = after_for;
            continue;
        }
        if (chain_active && def_positions.count(ppos)) {
            std::string between = line.substr(ppos + pname.size(), pos - ppos - pname.size());
            if (between.find_first_not_of(" \t,") == std::string::npos &&
                between.find(',') != std::string::npos) {
                def_positions.insert(pos);
                continue;
            }
        }
        chain_active = false;
    }

    for (const auto& [pos, name] : idents) {
        if (name == "for" || name == "as" || name == "in" || name == "if" || name == "else" ||
            name == "return" || name == "while" || name == "with" || name == "not" ||
            name == "and" || name == "or" || name == "def" || name == "class" ||
            name == "pass" || name == "raise" || name == "try" || name == "except" ||
            name == "lambda" || name == "True" || name == "False" || name == "None")
            continue;  // keywords are never variables
        if (pos == aug_target) {
            scan.names.push_back(name);
            scan.is_def.push_back(true);  // an augmented target defines...
            scan.names.push_back(name);
            scan.is_def.push_back(false);  // ...and reads the prior value
            continue;
        }
        scan.names.push_back(name);
        scan.is_def.push_back(def_positions.count(pos) > 0);
    }
    return scan;
}

struct OracleEdges {
    std::set<std::tuple<int, int, int>> edges;
};

OracleEdges oracle_edges(const std::string& text) {
    OracleEdges out;
    std::vector<std::string> raw_lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            raw_lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) raw_lines.push_back(cur);

    std::vector<LineScan> scans;
    scans.reserve(raw_lines.size());
    for (const std::string& line : raw_lines) scans.push_back(scan_line(line));

    std::vector<std::pair<std::string, int>> defs;  // (name, line)
    for (std::size_t li = 0; li < scans.size(); ++li)
        for (std::size_t k = 0; k < scans[li].names.size(); ++k)
            if (scans[li].is_def[k]) defs.emplace_back(scans[li].names[k], static_cast<int>(li) + 1);

    std::vector<std::string> order;
    for (const auto& [name, line] : defs)
        if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    auto var_id = [&](const std::string& name) {
        auto it = std::find(order.begin(), order.end(), name);
        return it == order.end() ? -1 : static_cast<int>(it - order.begin());
    };

    for (std::size_t li = 0; li < scans.size(); ++li) {
        int line_no = static_cast<int>(li) + 1;
        for (std::size_t k = 0; k < scans[li].names.size(); ++k) {
            if (scans[li].is_def[k]) continue;
            int id = var_id(scans[li].names[k]);
            if (id < 0) continue;
            int best = -1;
            for (const auto& [name, dline] : defs)
                if (name == scans[li].names[k] && dline < line_no) best = std::max(best, dline);
            if (best >= 0) out.edges.insert({id, best, line_no});
        }
    }
    return out;
}

}  // namespace

double dataflow_match(const std::string& pred, const std::string& gold) {
    OracleEdges g = oracle_edges(gold);
    if (g.edges.empty()) return 1.0;
    OracleEdges p = oracle_edges(pred);
    std::size_t matched = 0;
    for (const auto& e : g.edges) matched += p.edges.count(e);
    return static_cast<double>(matched) / static_cast<double>(g.edges.size());
}

double codebleu(const std::string& pred, const std::string& gold,
                const eval::CodeBleuConfig& config) {
    if (eval::exact_match(pred, gold)) return 1.0;
    auto pt = eval::metric_tokens(pred);
    auto gt = eval::metric_tokens(gold);
    return config.bleu_weight * bleu(pt, gt, 4, 1.0) +
           config.weighted_bleu_weight * bleu(pt, gt, 4, config.keyword_weight) +
           config.syntax_weight * syntax_match(pred, gold) +
           config.dataflow_weight * dataflow_match(pred, gold);
}

// ---------------------------------------------------------------------------
// Exhaustive scope-walk resolution
// ---------------------------------------------------------------------------

namespace {

struct OracleRepo {
    const index::RepoIndex& repo;  // used only as a container of parsed ASTs

    const ModuleAst* module(const std::string& dotted) const {
        auto it = repo.modules.find(dotted);
        return it == repo.modules.end() ? nullptr : &it->second;
    }
    bool has_module(const std::string& dotted) const { return repo.modules.count(dotted) > 0; }
    bool is_package(const std::string& dotted) const {
        const ModuleAst* ast = module(dotted);
        return ast && ast->path.find("__init__.py") != std::string::npos;
    }
};

std::vector<std::string> split(const std::string& dotted) {
    std::vector<std::string> parts;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    return parts;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += out.empty() ? p : "." + p;
    return out;
}

struct ClassRef {
    std::string module;
    std::string local_name;  // possibly dotted for nested classes
    const ClassDecl* decl = nullptr;
    std::string qualified() const { return module + "." + local_name; }
};

const ClassDecl* class_in(const std::vector<ClassDecl>& classes,
                          const std::vector<std::string>& parts, std::size_t at) {
    for (const ClassDecl& cls : classes) {
        if (cls.name != parts[at]) continue;
        if (at + 1 == parts.size()) return &cls;
        return class_in(cls.nested_classes, parts, at + 1);
    }
    return nullptr;
}

std::optional<ClassRef> find_class(const OracleRepo& oracle, const std::string& module,
                                   const std::string& dotted_local) {
    const ModuleAst* ast = oracle.module(module);
    if (!ast) return std::nullopt;
    auto parts = split(dotted_local);
    const ClassDecl* decl = class_in(ast->classes, parts, 0);
    if (!decl) return std::nullopt;
    return ClassRef{module, dotted_local, decl};
}

std::optional<std::string> resolve_import_binding(const OracleRepo& oracle,
                                                  const std::string& module,
                                                  const std::string& name);

// A class reference written as `text` inside `module`, resolved by explicit
// enumeration of local classes, import bindings, then absolute paths.
std::optional<ClassRef> resolve_class_text(const OracleRepo& oracle, const std::string& module,
                                           std::string text) {
    if (text.size() >= 2 && (text.front() == '"' || text.front() == '\''))
        text = text.substr(1, text.size() - 2);
    auto bracket = text.find('[');
    if (bracket != std::string::npos) text = text.substr(0, bracket);
    while (!text.empty() && text.back() == ' ') text.pop_back();
    if (text.empty()) return std::nullopt;
    for (char c : text)
        if (!ident_cont(c) && c != '.') return std::nullopt;

    if (auto local = find_class(oracle, module, text)) return local;

    auto parts = split(text);
    if (auto bound = resolve_import_binding(oracle, module, parts.front())) {
        std::vector<std::string> bparts = split(*bound);
        for (std::size_t i = 1; i < parts.size(); ++i) bparts.push_back(parts[i]);
        // longest module prefix, remainder as nested class path
        for (std::size_t cut = bparts.size(); cut-- > 0;) {
            std::string mod = join({bparts.begin(), bparts.begin() + cut});
            if (!oracle.has_module(mod)) continue;
            std::string rest = join({bparts.begin() + cut, bparts.end()});
            if (rest.empty()) return std::nullopt;
            if (auto ref = find_class(oracle, mod, rest)) return ref;
            return std::nullopt;
        }
    }

    std::vector<std::string> aparts = split(text);
    for (std::size_t cut = aparts.size(); cut-- > 1;) {
        std::string mod = join({aparts.begin(), aparts.begin() + cut});
        if (!oracle.has_module(mod)) continue;
        std::string rest = join({aparts.begin() + cut, aparts.end()});
        if (rest.empty()) return std::nullopt;
        return find_class(oracle, mod, rest);
    }
    return std::nullopt;
}

// The fully-qualified thing `name` is bound to by imports of `module`
// ("pkg.mod" or "pkg.mod.Symbol"), by explicit enumeration.
std::optional<std::string> resolve_import_binding(const OracleRepo& oracle,
                                                  const std::string& module,
                                                  const std::string& name) {
    const ModuleAst* ast = oracle.module(module);
    if (!ast) return std::nullopt;
    for (auto it = ast->imports.rbegin(); it != ast->imports.rend(); ++it) {
        const ImportDecl& decl = *it;
        if (!decl.is_from) {
            if (decl.module_alias) {
                if (*decl.module_alias != name) continue;
                // alias binds the full module if indexed
                std::string target = decl.module_path;
                if (oracle.has_module(target)) return target;
                return std::nullopt;
            }
            if (split(decl.module_path).front() == name) return split(decl.module_path).front();
            continue;
        }
        // relative resolution
        std::vector<std::string> base;
        if (decl.relative_dots > 0) {
            base = split(module);
            int drops = decl.relative_dots - (oracle.is_package(module) ? 1 : 0);
            for (int i = 0; i < drops && !base.empty(); ++i) base.pop_back();
        }
        std::string target = join(base);
        if (!decl.module_path.empty())
            target = target.empty() ? decl.module_path : target + "." + decl.module_path;
        for (const auto& [imported, alias] : decl.imported_names) {
            if ((alias ? *alias : imported) != name) continue;
            std::string extended = target.empty() ? imported : target + "." + imported;
            if (oracle.has_module(extended)) return extended;
            return target + "." + imported;
        }
    }
    return std::nullopt;
}

// Independent left-to-right DFS linearization (self first, duplicates pruned,
// cycles abort the walk).
bool linearize_oracle(const OracleRepo& oracle, const ClassRef& cls, std::vector<ClassRef>& out,
                      std::vector<std::string>& stack) {
    std::string q = cls.qualified();
    if (std::find(stack.begin(), stack.end(), q) != stack.end()) return false;
    for (const ClassRef& have : out)
        if (have.qualified() == q) return true;
    out.push_back(cls);
    stack.push_back(q);
    for (const std::string& base_text : cls.decl->bases) {
        auto base = resolve_class_text(oracle, cls.module, base_text);
        if (!base) continue;
        if (!linearize_oracle(oracle, *base, out, stack)) return false;
    }
    stack.pop_back();
    return true;
}

struct MemberHit {
    std::string qualified;
    enum Kind { MethodK, AttrK, ClassK } kind;
    const FunctionDecl* method = nullptr;
    const VariableDecl* attr = nullptr;
    ClassRef owner;
};

std::optional<MemberHit> member_of(const OracleRepo& oracle, const ClassRef& cls,
                                   const std::string& name) {
    std::vector<ClassRef> order;
    std::vector<std::string> stack;
    if (!linearize_oracle(oracle, cls, order, stack)) return std::nullopt;
    for (const ClassRef& c : order) {
        for (const FunctionDecl& m : c.decl->methods)
            if (m.name == name)
                return MemberHit{c.qualified() + "." + name, MemberHit::MethodK, &m, nullptr, c};
        for (const VariableDecl& a : c.decl->attributes)
            if (a.name == name)
                return MemberHit{c.qualified() + "." + name, MemberHit::AttrK, nullptr, &a, c};
        for (const ClassDecl& inner : c.decl->nested_classes)
            if (inner.name == name)
                return MemberHit{c.qualified() + "." + name, MemberHit::ClassK, nullptr, nullptr,
                                 ClassRef{c.module, c.local_name + "." + name, &inner}};
    }
    return std::nullopt;
}

std::vector<std::string> body_lines(const ModuleAst& ast, const FunctionDecl& fn) {
    std::vector<std::string> lines;
    std::istringstream src(ast.source);
    std::string line;
    for (int n = 1; std::getline(src, line); ++n)
        if (fn.body_span.contains(n)) lines.push_back(line);
    return lines;
}

// last `name = Ctor(...)` in the body, by plain text scanning
std::optional<std::string> constructor_text(const std::vector<std::string>& lines,
                                            const std::string& name) {
    std::optional<std::string> found;
    for (const std::string& raw : lines) {
        std::string line = strip_strings_and_comments(raw);
        std::size_t at = line.find_first_not_of(" \t");
        if (at == std::string::npos) continue;
        if (line.compare(at, name.size(), name) != 0) continue;
        std::size_t rest_at = at + name.size();
        if (rest_at < line.size() && ident_cont(line[rest_at])) continue;
        std::size_t eq = line.find('=', rest_at);
        if (eq == std::string::npos || (eq + 1 < line.size() && line[eq + 1] == '=')) continue;
        std::string between = line.substr(rest_at, eq - rest_at);
        if (between.find_first_not_of(" \t") != std::string::npos) {
            // allow only an annotation between name and '='
            if (between.find(':') == std::string::npos) continue;
        }
        std::size_t p = eq + 1;
        while (p < line.size() && line[p] == ' ') ++p;
        std::size_t b = p;
        while (p < line.size() && (ident_cont(line[p]) || line[p] == '.')) ++p;
        if (p >= line.size() || line[p] != '(' || p == b) continue;
        found = line.substr(b, p - b);
    }
    return found;
}

bool body_assigns(const std::vector<std::string>& lines, const std::string& name) {
    for (const std::string& raw : lines) {
        std::string line = strip_strings_and_comments(raw);
        std::size_t at = line.find_first_not_of(" \t");
        if (at == std::string::npos) continue;
        if (line.compare(at, name.size(), name) == 0) {
            std::size_t after = at + name.size();
            std::string rest = line.substr(after);
            std::size_t skip = rest.find_first_not_of(" \t");
            if (skip != std::string::npos && (rest[skip] == '=' || rest[skip] == ':') &&
                !(skip + 1 < rest.size() && rest[skip] == '=' && rest[skip + 1] == '='))
                return true;
        }
        // for NAME in / as NAME
        for (const char* kw : {"for ", "as "}) {
            std::size_t pos = 0;
            while ((pos = line.find(kw, pos)) != std::string::npos) {
                bool word_start = pos == 0 || !ident_cont(line[pos - 1]);
                std::size_t nb = pos + std::string(kw).size();
                while (nb < line.size() && line[nb] == ' ') ++nb;
                std::size_t ne = nb;
                while (ne < line.size() && ident_cont(line[ne])) ++ne;
                if (word_start && line.substr(nb, ne - nb) == name) return true;
                pos = nb;
            }
        }
    }
    return false;
}

const FunctionDecl* oracle_find_function(const OracleRepo& oracle, const std::string& module,
                                         const std::string& function) {
    const ModuleAst* ast = oracle.module(module);
    if (!ast) return nullptr;
    std::string rest = function;
    std::string prefix = module + ".";
    if (rest.rfind(prefix, 0) == 0) rest = rest.substr(prefix.size());
    auto parts = split(rest);
    if (parts.size() == 1) {
        for (const FunctionDecl& fn : ast->functions)
            if (fn.name == parts[0]) return &fn;
        return nullptr;
    }
    const ClassDecl* cls =
        class_in(ast->classes, {parts.begin(), parts.end() - 1}, 0);
    if (!cls) return nullptr;
    for (const FunctionDecl& m : cls->methods)
        if (m.name == parts.back()) return &m;
    return nullptr;
}

std::optional<ClassRef> member_value_class(const OracleRepo& oracle, const MemberHit& hit) {
    if (hit.kind == MemberHit::MethodK) {
        if (!hit.method->return_annotation) return std::nullopt;
        return resolve_class_text(oracle, hit.owner.module, *hit.method->return_annotation);
    }
    if (hit.kind == MemberHit::AttrK) {
        if (hit.attr->annotation)
            if (auto c = resolve_class_text(oracle, hit.owner.module, *hit.attr->annotation))
                return c;
        if (hit.attr->constructor)
            return resolve_class_text(oracle, hit.owner.module, *hit.attr->constructor);
        return std::nullopt;
    }
    return hit.owner;  // nested class
}

std::optional<std::string> walk_members(const OracleRepo& oracle, ClassRef cls,
                                        const std::vector<std::string>& chain, std::size_t from) {
    for (std::size_t i = from; i < chain.size(); ++i) {
        auto hit = member_of(oracle, cls, chain[i]);
        if (!hit) return std::nullopt;
        if (i + 1 == chain.size()) return hit->qualified;
        if (hit->kind == MemberHit::MethodK) return std::nullopt;
        auto next = member_value_class(oracle, *hit);
        if (!next) return std::nullopt;
        cls = *next;
    }
    return std::nullopt;
}

// module-scope declaration lookup by enumeration
struct ModuleDecl {
    enum Kind { ClassK, FunctionK, VarK } kind;
    const ClassDecl* cls = nullptr;
    const FunctionDecl* fn = nullptr;
    const VariableDecl* var = nullptr;
};

std::optional<ModuleDecl> module_decl(const ModuleAst& ast, const std::string& name) {
    for (const ClassDecl& cls : ast.classes)
        if (cls.name == name) return ModuleDecl{ModuleDecl::ClassK, &cls, nullptr, nullptr};
    for (const FunctionDecl& fn : ast.functions)
        if (fn.name == name) return ModuleDecl{ModuleDecl::FunctionK, nullptr, &fn, nullptr};
    for (const VariableDecl& var : ast.variables)
        if (var.name == name) return ModuleDecl{ModuleDecl::VarK, nullptr, nullptr, &var};
    return std::nullopt;
}

std::optional<std::string> resolve_from_module(const OracleRepo& oracle, const std::string& module,
                                               const std::vector<std::string>& chain,
                                               std::size_t at);

std::optional<std::string> resolve_decl_chain(const OracleRepo& oracle, const std::string& module,
                                              const ModuleDecl& decl,
                                              const std::vector<std::string>& chain,
                                              std::size_t at, const std::string& name) {
    bool last = at == chain.size();
    if (decl.kind == ModuleDecl::ClassK) {
        ClassRef ref{module, name, decl.cls};
        if (last) return ref.qualified();
        return walk_members(oracle, ref, chain, at);
    }
    if (decl.kind == ModuleDecl::FunctionK) {
        if (last) return module + "." + name;
        if (!decl.fn->return_annotation) return std::nullopt;
        auto cls = resolve_class_text(oracle, module, *decl.fn->return_annotation);
        if (!cls) return std::nullopt;
        return walk_members(oracle, *cls, chain, at);
    }
    if (last) return module + "." + name;
    std::optional<ClassRef> cls;
    if (decl.var->annotation) cls = resolve_class_text(oracle, module, *decl.var->annotation);
    if (!cls && decl.var->constructor)
        cls = resolve_class_text(oracle, module, *decl.var->constructor);
    if (!cls) return std::nullopt;
    return walk_members(oracle, *cls, chain, at);
}

std::optional<std::string> resolve_from_module(const OracleRepo& oracle, const std::string& module,
                                               const std::vector<std::string>& chain,
                                               std::size_t at) {
    if (at >= chain.size()) return module;
    const ModuleAst* ast = oracle.module(module);
    if (!ast) return std::nullopt;
    // submodule?
    std::string sub = module + "." + chain[at];
    if (oracle.has_module(sub)) return resolve_from_module(oracle, sub, chain, at + 1);
    auto decl = module_decl(*ast, chain[at]);
    if (!decl) return std::nullopt;
    return resolve_decl_chain(oracle, module, *decl, chain, at + 1, chain[at]);
}

}  // namespace

std::optional<std::string> resolve(const std::vector<std::string>& chain,
                                   const std::string& module, const std::string& function,
                                   const index::RepoIndex& repo) {
    OracleRepo oracle{repo};
    const ModuleAst* ast = oracle.module(module);
    if (!ast || chain.empty()) return std::nullopt;
    const std::string& head = chain.front();

    const FunctionDecl* fn =
        function.empty() ? nullptr : oracle_find_function(oracle, module, function);
    std::optional<ClassRef> enclosing;
    if (fn && fn->is_method) {
        std::string rest = function;
        std::string prefix = module + ".";
        if (rest.rfind(prefix, 0) == 0) rest = rest.substr(prefix.size());
        auto parts = split(rest);
        std::string cls_local = join({parts.begin(), parts.end() - 1});
        enclosing = find_class(oracle, module, cls_local);
    }

    if (fn) {
        if (head == "self" && enclosing) {
            if (chain.size() == 1) return enclosing->qualified();
            return walk_members(oracle, *enclosing, chain, 1);
        }
        auto lines = body_lines(*ast, *fn);
        bool is_param = false;
        const syntax::Parameter* param = nullptr;
        for (const auto& p : fn->params)
            if (p.name == head) {
                is_param = true;
                param = &p;
            }
        bool is_local = body_assigns(lines, head);
        if (is_param || is_local) {
            std::optional<ClassRef> cls;
            if (auto ctor = constructor_text(lines, head))
                cls = resolve_class_text(oracle, module, *ctor);
            if (!cls && param && param->annotation)
                cls = resolve_class_text(oracle, module, *param->annotation);
            if (!cls) return std::nullopt;
            if (chain.size() == 1) return cls->qualified();
            return walk_members(oracle, *cls, chain, 1);
        }
        if (enclosing) {
            if (auto hit = member_of(oracle, *enclosing, head)) {
                if (chain.size() == 1) return hit->qualified;
                if (hit->kind == MemberHit::ClassK) {
                    auto owner = member_value_class(oracle, *hit);
                    if (owner) return walk_members(oracle, *owner, chain, 1);
                    return std::nullopt;
                }
                auto cls = member_value_class(oracle, *hit);
                if (!cls) return std::nullopt;
                return walk_members(oracle, *cls, chain, 1);
            }
        }
    }

    if (auto decl = module_decl(*ast, head))
        return resolve_decl_chain(oracle, module, *decl, chain, 1, head);

    if (auto bound = resolve_import_binding(oracle, module, head)) {
        // bound is a module, a module prefix, or module.Symbol
        if (oracle.has_module(*bound)) return resolve_from_module(oracle, *bound, chain, 1);
        auto parts = split(*bound);
        if (parts.size() == 1) {
            // top package prefix from plain `import pkg.mod`
            std::string prefix = parts.front();
            std::size_t i = 1;
            std::string q = prefix;
            while (i < chain.size() && oracle.has_module(q + "." + chain[i])) {
                q += "." + chain[i];
                ++i;
            }
            if (!oracle.has_module(q)) return std::nullopt;
            return resolve_from_module(oracle, q, chain, i);
        }
        std::string mod = join({parts.begin(), parts.end() - 1});
        const ModuleAst* owner = oracle.module(mod);
        if (!owner) return std::nullopt;
        auto decl = module_decl(*owner, parts.back());
        if (!decl) return std::nullopt;
        return resolve_decl_chain(oracle, mod, *decl, chain, 1, parts.back());
    }
    return std::nullopt;
}

}  // namespace idecoder::test::oracle
