#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swid/dist.hpp"
#include "swid/graph.hpp"
#include "swid/ident.hpp"
#include "swid/numeric.hpp"
#include "swid/scm.hpp"

namespace swid {

// One .swid model file: a graph block, at most one of scm/dist, and a query.
// Numeric payloads are kept as exact rationals; backends materialize them.

struct ScmNodeBlock {
    VariableId node;
    std::vector<Rational> noise;
    // (parent levels in canonical parent order, noise level) -> output level
    std::vector<std::pair<std::vector<Level>, Level>> rows;
};

struct DistBlock {
    std::vector<VariableId> vars;
    std::vector<std::pair<std::vector<Level>, Rational>> rows;
};

struct QueryBlock {
    std::optional<std::string> preset_name;
    std::vector<VariableId> baseline;
    std::vector<SpecStep> steps;
    VariableId outcome;
    std::vector<Level> thresholds;           // empty = every outcome level
    std::map<std::string, std::string> bindings;  // symbol -> support label
};

struct ModelFile {
    std::vector<NodeDecl> nodes;
    std::vector<Variable> supports;  // aligned with nodes
    std::vector<Edge> edges;
    std::vector<ScmNodeBlock> scm_nodes;
    std::optional<DistBlock> dist;
    QueryBlock query;

    bool has_scm() const { return !scm_nodes.empty(); }

    CausalDag dag() const { return CausalDag(nodes, edges); }

    const Variable& support_of(const VariableId& name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == name) return supports[i];
        throw UnknownVariableError(name);
    }

    // The regime spec the query asks for: a preset binding or the explicit
    // blocks. Preset queries use the file's graph, which must contain the
    // preset's variables.
    RegimeSpec spec() const {
        if (query.preset_name) return preset(*query.preset_name).spec;
        return RegimeSpec{query.baseline, query.steps, query.outcome};
    }

    std::map<std::string, Level> resolved_bindings() const {
        RegimeSpec s = spec();
        std::map<std::string, Level> out;
        for (const auto& [symbol, label] : query.bindings) {
            const SpecStep* owner = nullptr;
            for (const auto& step : s.steps)
                if (step.forced.is_symbol() && step.forced.as_symbol() == symbol) owner = &step;
            if (!owner) throw SemanticError("bind names unknown symbol " + symbol);
            const auto& sup = support_of(owner->decision).support;
            auto it = std::find(sup.begin(), sup.end(), label);
            if (it == sup.end())
                throw SemanticError("bind " + symbol + " = " + label +
                                    " is not a support label of " + owner->decision);
            out[symbol] = static_cast<Level>(it - sup.begin());
        }
        return out;
    }

    std::vector<Level> threshold_levels() const {
        if (!query.thresholds.empty()) return query.thresholds;
        std::vector<Level> all;
        for (std::size_t l = 0; l < support_of(spec().outcome).support.size(); ++l)
            all.push_back(static_cast<Level>(l));
        return all;
    }

    Scm build_scm() const {
        if (!has_scm()) throw SemanticError("model has no scm block");
        CausalDag g = dag();
        std::vector<NoiseSpec> noise(nodes.size());
        std::vector<Mechanism> mech(nodes.size());
        std::vector<bool> covered(nodes.size(), false);
        for (const auto& block : scm_nodes) {
            std::size_t v = g.index_of(block.node);
            if (covered[v]) throw SemanticError("scm block repeats node " + block.node);
            covered[v] = true;
            noise[v].masses = block.noise;
            std::vector<std::size_t> parent_sizes;
            std::size_t configs = 1;
            for (const auto& p : g.parent_names(block.node)) {
                parent_sizes.push_back(support_of(p).support.size());
                configs *= parent_sizes.back();
            }
            std::size_t total = configs * block.noise.size();
            std::vector<Level> table(total, -1);
            for (const auto& [key, out] : block.rows) {
                if (key.size() != parent_sizes.size() + 1)
                    throw SemanticError("mechanism row arity mismatch for " + block.node);
                std::size_t pc = 0;
                for (std::size_t i = 0; i < parent_sizes.size(); ++i)
                    pc = pc * parent_sizes[i] + key[i];
                std::size_t u = key.back();
                std::size_t at = pc * block.noise.size() + u;
                if (table[at] != -1)
                    throw SemanticError("mechanism row repeated for " + block.node);
                table[at] = out;
            }
            for (Level l : table)
                if (l == -1)
                    throw SemanticError("mechanism table of " + block.node +
                                        " is incomplete");
            mech[v].table = std::move(table);
        }
        for (std::size_t v = 0; v < nodes.size(); ++v)
            if (!covered[v])
                throw SemanticError("scm block missing node " + nodes[v].name);
        return Scm(std::move(g), supports, std::move(noise), std::move(mech));
    }

    template <typename N>
    DiscreteJoint<N> observed_law() const {
        if (dist) {
            std::vector<Variable> vars;
            for (const auto& v : dist->vars) vars.push_back(support_of(v));
            std::vector<std::pair<std::vector<Level>, N>> rows;
            for (const auto& [levels, p] : dist->rows)
                rows.emplace_back(levels, NumberTraits<N>::from_rational(p));
            return DiscreteJoint<N>::from_rows(std::move(vars), rows);
        }
        if (has_scm()) return build_scm().factual_law<N>();
        throw SemanticError("numeric commands need exactly one of scm/dist");
    }
};

namespace dsl_detail {

struct Token {
    enum Kind { Value, LBrace, RBrace, Arrow, Equals, Colon, End } kind = End;
    std::string text;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    static bool value_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '/';
    }

    void advance() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (c == '\n') {
                ++pos_;
                ++line_;
                col_ = 1;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
                ++col_;
            } else {
                break;
            }
        }
        current_.line = line_;
        current_.col = col_;
        if (pos_ >= text_.size()) {
            current_.kind = Token::End;
            current_.text.clear();
            return;
        }
        char c = text_[pos_];
        auto single = [&](Token::Kind k, const char* t) {
            current_.kind = k;
            current_.text = t;
            ++pos_;
            ++col_;
        };
        if (c == '{') return single(Token::LBrace, "{");
        if (c == '}') return single(Token::RBrace, "}");
        if (c == '=') return single(Token::Equals, "=");
        if (c == ':') return single(Token::Colon, ":");
        if (c == '-') {
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
                current_.kind = Token::Arrow;
                current_.text = "->";
                pos_ += 2;
                col_ += 2;
                return;
            }
            throw SyntaxError(line_, col_, "stray '-' (expected '->')");
        }
        if (value_char(c)) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && value_char(text_[pos_])) {
                ++pos_;
                ++col_;
            }
            current_.kind = Token::Value;
            current_.text = text_.substr(start, pos_ - start);
            return;
        }
        throw SyntaxError(line_, col_, std::string("unexpected character '") + c + "'");
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token current_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ModelFile parse() {
        ModelFile m;
        bool saw_graph = false, saw_query = false;
        while (lex_.peek().kind != Token::End) {
            Token t = expect_value("block name (graph, scm, dist, query)");
            if (t.text == "graph") {
                if (saw_graph) throw SemanticError(t.line, t.col, "duplicate graph block");
                saw_graph = true;
                parse_graph(m);
            } else if (t.text == "scm") {
                if (!m.scm_nodes.empty())
                    throw SemanticError(t.line, t.col, "duplicate scm block");
                parse_scm(m, t);
            } else if (t.text == "dist") {
                if (m.dist) throw SemanticError(t.line, t.col, "duplicate dist block");
                parse_dist(m, t);
            } else if (t.text == "query") {
                if (saw_query) throw SemanticError(t.line, t.col, "duplicate query block");
                saw_query = true;
                parse_query(m);
            } else {
                throw SyntaxError(t.line, t.col,
                                  "expected one of graph/scm/dist/query, got '" + t.text + "'");
            }
        }
        if (!saw_graph) throw SemanticError("model file has no graph block");
        if (!m.scm_nodes.empty() && m.dist)
            throw SemanticError("model file has both scm and dist blocks; exactly one allowed");
        if (!saw_query) throw SemanticError("model file has no query block");
        validate(m);
        return m;
    }

private:
    Token expect(Token::Kind kind, const std::string& what) {
        Token t = lex_.take();
        if (t.kind != kind)
            throw SyntaxError(t.line, t.col, "expected " + what + ", got '" + t.text + "'");
        return t;
    }

    Token expect_value(const std::string& what) { return expect(Token::Value, what); }

    Token expect_keyword(const std::string& kw) {
        Token t = lex_.take();
        if (t.kind != Token::Value || t.text != kw)
            throw SyntaxError(t.line, t.col, "expected '" + kw + "', got '" + t.text + "'");
        return t;
    }

    bool next_is(const std::string& kw) {
        return lex_.peek().kind == Token::Value && lex_.peek().text == kw;
    }

    std::vector<std::string> brace_list(const std::string& what) {
        expect(Token::LBrace, "'{'");
        std::vector<std::string> out;
        while (lex_.peek().kind != Token::RBrace) out.push_back(expect_value(what).text);
        lex_.take();
        return out;
    }

    void parse_graph(ModelFile& m) {
        expect(Token::LBrace, "'{'");
        while (lex_.peek().kind != Token::RBrace) {
            Token t = expect_value("'node' or 'edge'");
            if (t.text == "node") {
                Token name = expect_value("node name");
                if (!valid_variable_name(name.text))
                    throw SemanticError(name.line, name.col,
                                        "invalid node name '" + name.text + "'");
                NodeDecl decl{name.text, true};
                Variable var{name.text, {"0", "1"}};
                if (next_is("latent")) {
                    lex_.take();
                    decl.observed = false;
                }
                if (next_is("support")) {
                    lex_.take();
                    var.support = brace_list("support label");
                    if (var.support.empty())
                        throw SemanticError(name.line, name.col,
                                            "empty support for " + name.text);
                }
                m.nodes.push_back(decl);
                m.supports.push_back(std::move(var));
            } else if (t.text == "edge") {
                Token from = expect_value("edge source");
                expect(Token::Arrow, "'->'");
                Token to = expect_value("edge target");
                m.edges.push_back({from.text, to.text});
            } else {
                throw SyntaxError(t.line, t.col, "expected 'node' or 'edge', got '" + t.text + "'");
            }
        }
        lex_.take();
        dag_.emplace(m.dag());  // graph errors (cycles, duplicates) surface here
    }

    const CausalDag& graph_or_fail(const Token& at) {
        if (!dag_) throw SemanticError(at.line, at.col, "graph block must come first");
        return *dag_;
    }

    void parse_scm(ModelFile& m, const Token& at) {
        expect(Token::LBrace, "'{'");
        while (lex_.peek().kind != Token::RBrace) {
            expect_keyword("node");
            Token name = expect_value("node name");
            ScmNodeBlock block;
            block.node = name.text;
            expect(Token::LBrace, "'{'");
            expect_keyword("noise");
            for (const auto& txt : brace_list("noise probability"))
                block.noise.push_back(rational_from_string(txt));
            if (block.noise.empty())
                throw SemanticError(name.line, name.col, "empty noise for " + name.text);
            expect_keyword("table");
            expect(Token::LBrace, "'{'");
            while (lex_.peek().kind != Token::RBrace) {
                expect_keyword("row");
                std::vector<std::string> lhs;
                while (lex_.peek().kind == Token::Value) lhs.push_back(lex_.take().text);
                expect(Token::Arrow, "'->'");
                Token out = expect_value("output label");
                block.rows.push_back(resolve_mech_row(m, block, name, lhs, out));
            }
            lex_.take();
            expect(Token::RBrace, "'}'");
            m.scm_nodes.push_back(std::move(block));
        }
        lex_.take();
        if (m.scm_nodes.empty()) throw SemanticError(at.line, at.col, "empty scm block");
    }

    std::pair<std::vector<Level>, Level> resolve_mech_row(const ModelFile& m,
                                                          const ScmNodeBlock& block,
                                                          const Token& name,
                                                          const std::vector<std::string>& lhs,
                                                          const Token& out) {
        // parents in canonical order, then the noise level index
        auto parents = graph_or_fail(name).parent_names(block.node);
        if (lhs.size() != parents.size() + 1)
            throw SemanticError(name.line, name.col,
                                "row for " + block.node + " needs " +
                                    std::to_string(parents.size()) +
                                    " parent labels plus a noise level");
        std::vector<Level> key;
        for (std::size_t i = 0; i < parents.size(); ++i)
            key.push_back(label_to_level(m, parents[i], lhs[i], name));
        try {
            std::size_t u = std::stoul(lhs.back());
            if (u >= block.noise.size()) throw std::out_of_range("noise");
            key.push_back(static_cast<Level>(u));
        } catch (const std::exception&) {
            throw SemanticError(name.line, name.col,
                                "bad noise level '" + lhs.back() + "' for " + block.node);
        }
        return {key, label_to_level(m, block.node, out.text, name)};
    }

    void parse_dist(ModelFile& m, const Token& at) {
        expect(Token::LBrace, "'{'");
        DistBlock block;
        expect_keyword("vars");
        for (const auto& v : brace_list("variable name")) block.vars.push_back(v);
        if (block.vars.empty()) throw SemanticError(at.line, at.col, "dist block lists no vars");
        while (lex_.peek().kind != Token::RBrace) {
            Token r = expect_keyword("row");
            std::vector<Level> levels;
            for (const auto& v : block.vars)
                levels.push_back(label_to_level(m, v, expect_value("level label").text, r));
            expect(Token::Colon, "':'");
            block.rows.emplace_back(std::move(levels),
                                    rational_from_string(expect_value("probability").text));
        }
        lex_.take();
        m.dist = std::move(block);
    }

    void parse_query(ModelFile& m) {
        expect(Token::LBrace, "'{'");
        QueryBlock& q = m.query;
        while (lex_.peek().kind != Token::RBrace) {
            Token t = expect_value("query statement");
            if (t.text == "preset") {
                q.preset_name = expect_value("preset name").text;
            } else if (t.text == "baseline") {
                for (const auto& v : brace_list("baseline variable")) q.baseline.push_back(v);
            } else if (t.text == "step") {
                Token var = expect_value("decision variable");
                expect(Token::Equals, "'='");
                Token val = expect_value("forced level or symbol");
                SpecStep step{var.text, parse_regime_value(m, var.text, val), {}};
                if (next_is("history")) {
                    lex_.take();
                    for (const auto& v : brace_list("history variable"))
                        step.history.push_back(v);
                }
                q.steps.push_back(std::move(step));
            } else if (t.text == "outcome") {
                q.outcome = expect_value("outcome variable").text;
            } else if (t.text == "thresholds") {
                Token kw = t;
                for (const auto& lbl : brace_list("threshold label"))
                    threshold_labels_.emplace_back(kw, lbl);
            } else if (t.text == "bind") {
                Token sym = expect_value("symbol");
                expect(Token::Equals, "'='");
                Token val = expect_value("level label");
                if (!q.bindings.emplace(sym.text, val.text).second)
                    throw SemanticError(sym.line, sym.col, "symbol " + sym.text + " bound twice");
            } else {
                throw SyntaxError(t.line, t.col, "unknown query statement '" + t.text + "'");
            }
        }
        lex_.take();
    }

    RegimeValue parse_regime_value(const ModelFile& m, const VariableId& var, const Token& val) {
        const auto& sup = find_support(m, var, val);
        for (std::size_t i = 0; i < sup.size(); ++i)
            if (sup[i] == val.text) return RegimeValue::level(static_cast<Level>(i));
        if (!valid_variable_name(val.text))
            throw SemanticError(val.line, val.col, "bad regime value '" + val.text + "'");
        return RegimeValue::symbol(val.text);  // not a support label: a symbol
    }

    Level label_to_level(const ModelFile& m, const VariableId& var, const std::string& label,
                         const Token& at) {
        const auto& sup = find_support(m, var, at);
        for (std::size_t i = 0; i < sup.size(); ++i)
            if (sup[i] == label) return static_cast<Level>(i);
        throw SemanticError(at.line, at.col,
                            "'" + label + "' is not a support label of " + var);
    }

    const std::vector<std::string>& find_support(const ModelFile& m, const VariableId& var,
                                                 const Token& at) {
        for (std::size_t i = 0; i < m.nodes.size(); ++i)
            if (m.nodes[i].name == var) return m.supports[i].support;
        throw SemanticError(at.line, at.col, "undeclared variable " + var);
    }

    void validate(ModelFile& m) {
        CausalDag g = m.dag();  // cycle/duplicate/unknown checks live there
        if (m.dist)
            for (const auto& v : m.dist->vars) g.index_of(v);
        RegimeSpec spec = m.spec();
        validate_spec(g, spec);
        // resolve thresholds now that the outcome is known
        for (const auto& [at, label] : threshold_labels_)
            m.query.thresholds.push_back(label_to_level(m, spec.outcome, label, at));
        m.resolved_bindings();
        if (m.has_scm()) m.build_scm();  // completeness checks
        if (m.dist) m.observed_law<Rational>();  // mass/arity checks
        if (m.dist || m.has_scm()) {
            std::vector<VariableId> law_vars;
            if (m.dist)
                law_vars = m.dist->vars;
            else
                for (const auto& n : m.nodes) law_vars.push_back(n.name);
            for (const auto& v : spec.all_variables())
                if (std::find(law_vars.begin(), law_vars.end(), v) == law_vars.end())
                    throw SemanticError("query variable " + v +
                                        " is not covered by the scm/dist block");
        }
    }

    Lexer lex_;
    std::optional<CausalDag> dag_;
    std::vector<std::pair<Token, std::string>> threshold_labels_;
};

}  // namespace dsl_detail

inline ModelFile parse_model(const std::string& text) {
    return dsl_detail::Parser(text).parse();
}

// Canonical text form; parse(serialize(parse(t))) == parse(t).
inline std::string serialize_model(const ModelFile& m) {
    std::ostringstream os;
    os << "graph {\n";
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        os << "  node " << m.nodes[i].name;
        if (!m.nodes[i].observed) os << " latent";
        os << " support {";
        for (const auto& l : m.supports[i].support) os << " " << l;
        os << " }\n";
    }
    for (const auto& e : m.edges) os << "  edge " << e.from << " -> " << e.to << "\n";
    os << "}\n";

    if (!m.scm_nodes.empty()) {
        CausalDag g = m.dag();
        os << "scm {\n";
        for (const auto& block : m.scm_nodes) {
            os << "  node " << block.node << " {\n";
            os << "    noise {";
            for (const auto& p : block.noise) os << " " << rational_to_string(p);
            os << " }\n    table {\n";
            // canonical row order: parent configs then noise level
            auto parents = g.parent_names(block.node);
            std::map<std::vector<Level>, Level> ordered;
            for (const auto& [key, out] : block.rows) ordered[key] = out;
            for (const auto& [key, out] : ordered) {
                os << "      row";
                for (std::size_t i = 0; i < parents.size(); ++i)
                    os << " " << m.support_of(parents[i]).support[key[i]];
                os << " " << key.back() << " -> " << m.support_of(block.node).support[out]
                   << "\n";
            }
            os << "    }\n  }\n";
        }
        os << "}\n";
    }

    if (m.dist) {
        os << "dist {\n  vars {";
        for (const auto& v : m.dist->vars) os << " " << v;
        os << " }\n";
        std::map<std::vector<Level>, Rational> ordered;
        for (const auto& [levels, p] : m.dist->rows)
            ordered[levels] += p;
        for (const auto& [levels, p] : ordered) {
            if (p == 0) continue;
            os << "  row";
            for (std::size_t i = 0; i < levels.size(); ++i)
                os << " " << m.support_of(m.dist->vars[i]).support[levels[i]];
            os << " : " << rational_to_string(p) << "\n";
        }
        os << "}\n";
    }

    os << "query {\n";
    const auto& q = m.query;
    if (q.preset_name) {
        os << "  preset " << *q.preset_name << "\n";
    } else {
        os << "  baseline {";
        for (const auto& v : q.baseline) os << " " << v;
        os << " }\n";
        for (const auto& s : q.steps) {
            os << "  step " << s.decision << " = ";
            if (s.forced.is_symbol())
                os << s.forced.as_symbol();
            else
                os << m.support_of(s.decision).support[s.forced.as_level()];
            if (!s.history.empty()) {
                os << " history {";
                for (const auto& h : s.history) os << " " << h;
                os << " }";
            }
            os << "\n";
        }
        os << "  outcome " << q.outcome << "\n";
    }
    if (!q.thresholds.empty()) {
        os << "  thresholds {";
        const auto& sup = m.support_of(m.spec().outcome).support;
        for (Level t : q.thresholds) os << " " << sup[t];
        os << " }\n";
    }
    for (const auto& [sym, label] : q.bindings) os << "  bind " << sym << " = " << label << "\n";
    os << "}\n";
    return os.str();
}

// Assemble a ModelFile around an existing SCM (used to emit fixture files).
inline ModelFile model_from_scm(const Scm& scm, QueryBlock query) {
    ModelFile m;
    m.nodes = scm.dag().nodes();
    m.supports = scm.variables();
    m.edges = scm.dag().edges();
    for (std::size_t v = 0; v < m.nodes.size(); ++v) {
        ScmNodeBlock block;
        block.node = m.nodes[v].name;
        block.noise = scm.noise(v).masses;
        std::vector<std::size_t> parent_sizes;
        std::size_t configs = 1;
        for (std::size_t p : scm.parent_positions(v)) {
            parent_sizes.push_back(scm.variables()[p].support.size());
            configs *= parent_sizes.back();
        }
        const std::size_t noise_levels = block.noise.size();
        for (std::size_t pc = 0; pc < configs; ++pc) {
            std::vector<Level> parent_levels(parent_sizes.size());
            std::size_t rest = pc;
            for (std::size_t i = parent_sizes.size(); i-- > 0;) {
                parent_levels[i] = static_cast<Level>(rest % parent_sizes[i]);
                rest /= parent_sizes[i];
            }
            for (std::size_t u = 0; u < noise_levels; ++u) {
                std::vector<Level> key = parent_levels;
                key.push_back(static_cast<Level>(u));
                block.rows.emplace_back(std::move(key),
                                        scm.mechanism(v).table[pc * noise_levels + u]);
            }
        }
        m.scm_nodes.push_back(std::move(block));
    }
    m.query = std::move(query);
    return m;
}

}  // namespace swid
