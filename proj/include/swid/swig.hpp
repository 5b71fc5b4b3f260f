#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "swid/graph.hpp"

namespace swid {

// A regime step forces a variable either to a concrete support level or to a
// symbolic placeholder ("z", "a0", ...) that is bound to a concrete level at
// evaluation time. Carrying symbols makes one SWIG construction serve as the
// template for all bindings.
struct RegimeValue {
    std::variant<Level, std::string> v;

    static RegimeValue level(Level l) { return RegimeValue{l}; }
    static RegimeValue symbol(std::string s) { return RegimeValue{std::move(s)}; }

    bool is_symbol() const { return std::holds_alternative<std::string>(v); }
    Level as_level() const { return std::get<Level>(v); }
    const std::string& as_symbol() const { return std::get<std::string>(v); }

    bool operator==(const RegimeValue& o) const { return v == o.v; }
};

struct RegimeStep {
    VariableId variable;
    RegimeValue value;
    bool operator==(const RegimeStep& o) const {
        return variable == o.variable && value == o.value;
    }
};

struct Regime {
    std::vector<RegimeStep> steps;

    bool intervenes(const VariableId& v) const {
        for (const auto& s : steps)
            if (s.variable == v) return true;
        return false;
    }
    bool operator==(const Regime& o) const { return steps == o.steps; }
};

// Lowercase value tag: R forced to 1 prints as "r=1", Z forced to the
// symbol z prints as "z".
inline std::string regime_value_text(const VariableId& var, const RegimeValue& val,
                                     const std::vector<std::string>* support = nullptr) {
    if (val.is_symbol()) return val.as_symbol();
    std::string lower;
    for (char c : var) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::string label = support && val.as_level() >= 0 &&
                                static_cast<std::size_t>(val.as_level()) < support->size()
                            ? (*support)[val.as_level()]
                            : std::to_string(val.as_level());
    return lower + "=" + label;
}

// Counterfactual variable: a base node indexed by the interventions that can
// reach it. The superscript is always the minimal one, in regime order.
struct CounterfactualLabel {
    VariableId base;
    std::vector<RegimeStep> superscript;

    bool operator==(const CounterfactualLabel& o) const {
        return base == o.base && superscript == o.superscript;
    }
    bool operator<(const CounterfactualLabel& o) const {
        if (base != o.base) return base < o.base;
        for (std::size_t i = 0; i < superscript.size() && i < o.superscript.size(); ++i) {
            const auto& a = superscript[i];
            const auto& b = o.superscript[i];
            if (a.variable != b.variable) return a.variable < b.variable;
            if (!(a.value == b.value)) return a.value.v < b.value.v;
        }
        return superscript.size() < o.superscript.size();
    }

    std::string text() const {
        if (superscript.empty()) return base;
        std::string s = base + "^{";
        for (std::size_t i = 0; i < superscript.size(); ++i) {
            if (i) s += ",";
            s += regime_value_text(superscript[i].variable, superscript[i].value);
        }
        return s + "}";
    }
};

struct SwigRandomNode {
    CounterfactualLabel label;
    bool observed = true;
};

struct SwigFixedNode {
    VariableId variable;
    RegimeValue value;
};

struct SwigEdge {
    bool from_fixed = false;
    VariableId from;  // base variable of the source node
    VariableId to;    // base variable of the target random node
    bool operator==(const SwigEdge& o) const {
        return from_fixed == o.from_fixed && from == o.from && to == o.to;
    }
    bool operator<(const SwigEdge& o) const {
        return std::tie(from_fixed, from, to) < std::tie(o.from_fixed, o.from, o.to);
    }
};

// Single world intervention graph: every node of the source DAG appears as a
// random node (intervened ones keep their pre-intervention part), plus one
// fixed node per regime step. No edge points into a fixed node.
class Swig {
public:
    Swig(const CausalDag& dag, Regime regime) : regime_(std::move(regime)) {
        validate_regime(dag, regime_);

        // split structure on indices: random copy of every node, fixed node
        // per step; fixed nodes take over the outgoing edges.
        const std::size_t n = dag.size();
        std::vector<int> step_of(n, -1);
        for (std::size_t k = 0; k < regime_.steps.size(); ++k)
            step_of[dag.index_of(regime_.steps[k].variable)] = static_cast<int>(k);

        for (const auto& e : dag.edges()) {
            std::size_t u = dag.index_of(e.from);
            edges_.push_back(SwigEdge{step_of[u] >= 0, e.from, e.to});
        }
        std::sort(edges_.begin(), edges_.end(), [&](const SwigEdge& a, const SwigEdge& b) {
            auto ka = std::tuple(dag.topo_position(a.from), dag.topo_position(a.to), a.from_fixed);
            auto kb = std::tuple(dag.topo_position(b.from), dag.topo_position(b.to), b.from_fixed);
            return ka < kb;
        });

        // minimal labeling: a step indexes a node iff its fixed node has a
        // directed path to the node through the split graph.
        std::vector<std::set<std::size_t>> reach_steps(n);
        for (std::size_t pos : dag.topo_order()) {
            const VariableId& name = dag.node(pos).name;
            std::set<std::size_t> acc;
            for (const auto& e : edges_) {
                if (e.to != name) continue;
                std::size_t u = dag.index_of(e.from);
                if (e.from_fixed) {
                    acc.insert(static_cast<std::size_t>(step_of[u]));
                } else {
                    acc.insert(reach_steps[u].begin(), reach_steps[u].end());
                }
            }
            reach_steps[pos] = std::move(acc);
        }

        for (std::size_t pos : dag.topo_order()) {
            const auto& decl = dag.node(pos);
            CounterfactualLabel label{decl.name, {}};
            for (std::size_t k = 0; k < regime_.steps.size(); ++k)
                if (reach_steps[pos].count(k)) label.superscript.push_back(regime_.steps[k]);
            random_nodes_.push_back(SwigRandomNode{std::move(label), decl.observed});
            random_index_[decl.name] = random_nodes_.size() - 1;
        }
        std::set<VariableId> taken;
        for (const auto& rn : random_nodes_) taken.insert(rn.label.base);
        for (const auto& s : regime_.steps) {
            fixed_nodes_.push_back(SwigFixedNode{s.variable, s.value});
            std::string nm = s.variable + "_fixed";
            while (taken.count(nm)) nm += "_";
            taken.insert(nm);
            fixed_name_[s.variable] = nm;
        }
    }

    const Regime& regime() const { return regime_; }
    const std::vector<SwigRandomNode>& random_nodes() const { return random_nodes_; }
    const std::vector<SwigFixedNode>& fixed_nodes() const { return fixed_nodes_; }
    const std::vector<SwigEdge>& edges() const { return edges_; }

    const CounterfactualLabel& label_of(const VariableId& base) const {
        auto it = random_index_.find(base);
        if (it == random_index_.end()) throw UnknownNodeError(base);
        return random_nodes_[it->second].label;
    }

    bool observed(const VariableId& base) const {
        auto it = random_index_.find(base);
        if (it == random_index_.end()) throw UnknownNodeError(base);
        return random_nodes_[it->second].observed;
    }

    // d-separation over the SWIG. Fixed nodes always block the paths they
    // intercept; since they have no incoming edges they can never act as
    // colliders, so treating them as conditioned-on suffices.
    bool d_separated(const std::set<VariableId>& a, const std::set<VariableId>& b,
                     std::set<VariableId> given) const {
        const CausalDag& g = as_dag();
        for (const auto& f : fixed_nodes_) given.insert(fixed_name_.at(f.variable));
        return g.d_separated(a, b, given);
    }

    bool d_separated(const std::set<CounterfactualLabel>& a,
                     const std::set<CounterfactualLabel>& b,
                     const std::set<CounterfactualLabel>& given) const {
        return d_separated(bases_of(a), bases_of(b), bases_of(given));
    }

    // Fixed nodes rendered boxed as "name=value", random nodes as base^{sup}.
    std::string to_dot(const std::string& graph_name = "G") const {
        std::ostringstream os;
        os << "digraph " << graph_name << " {\n";
        for (const auto& rn : random_nodes_) {
            os << "  " << rn.label.base << " [label=\"" << rn.label.text() << "\"";
            if (!rn.observed) os << ", style=dashed";
            os << "];\n";
        }
        for (const auto& fn : fixed_nodes_) {
            os << "  " << fixed_name_.at(fn.variable) << " [shape=box, label=\""
               << regime_value_text(fn.variable, fn.value) << "\"];\n";
        }
        for (const auto& e : edges_) {
            os << "  " << (e.from_fixed ? fixed_name_.at(e.from) : e.from) << " -> " << e.to
               << ";\n";
        }
        os << "}\n";
        return os.str();
    }

private:
    static void validate_regime(const CausalDag& dag, const Regime& regime) {
        std::set<VariableId> seen;
        for (const auto& s : regime.steps) {
            dag.index_of(s.variable);  // throws UnknownNodeError
            if (!seen.insert(s.variable).second) throw DuplicateNodeError(s.variable);
        }
        // a later step must not intervene on an ancestor of an earlier step
        for (std::size_t i = 0; i < regime.steps.size(); ++i) {
            for (std::size_t j = i + 1; j < regime.steps.size(); ++j) {
                const auto& early = regime.steps[i].variable;
                const auto& late = regime.steps[j].variable;
                if (dag.descendants(late).count(early))
                    throw RegimeOrderError(early, late);
            }
        }
    }

    std::set<VariableId> bases_of(const std::set<CounterfactualLabel>& s) const {
        std::set<VariableId> out;
        for (const auto& l : s) {
            const auto& have = label_of(l.base);
            if (!(have == l))
                throw UnknownNodeError(l.text() + " (this graph labels it " + have.text() + ")");
            out.insert(l.base);
        }
        return out;
    }

    // Flattened view for the d-separation machinery: one synthetic node per
    // fixed node, named <var>_fixed with enough underscores to stay unique.
    const CausalDag& as_dag() const {
        if (!flat_) {
            std::vector<NodeDecl> nodes;
            for (const auto& rn : random_nodes_) nodes.push_back({rn.label.base, rn.observed});
            for (const auto& fn : fixed_nodes_)
                nodes.push_back({fixed_name_.at(fn.variable), true});
            std::vector<Edge> es;
            for (const auto& e : edges_)
                es.push_back({e.from_fixed ? fixed_name_.at(e.from) : e.from, e.to});
            flat_.emplace(std::move(nodes), std::move(es));
        }
        return *flat_;
    }

    Regime regime_;
    std::vector<SwigRandomNode> random_nodes_;
    std::vector<SwigFixedNode> fixed_nodes_;
    std::vector<SwigEdge> edges_;
    std::map<VariableId, std::size_t> random_index_;
    std::map<VariableId, VariableId> fixed_name_;
    mutable std::optional<CausalDag> flat_;
};

inline Swig build_swig(const CausalDag& dag, Regime regime) {
    return Swig(dag, std::move(regime));
}

inline CounterfactualLabel minimal_label(const CausalDag& dag, const Regime& regime,
                                         const VariableId& node) {
    return Swig(dag, regime).label_of(node);
}

inline bool swig_d_separated(const Swig& swig, const std::set<CounterfactualLabel>& a,
                             const std::set<CounterfactualLabel>& b,
                             const std::set<CounterfactualLabel>& given) {
    return swig.d_separated(a, b, given);
}

// One derived independence statement, checked against the SWIG.
struct IndependenceCondition {
    CounterfactualLabel left;    // outcome counterfactual
    CounterfactualLabel right;   // random part of the decision variable
    std::vector<CounterfactualLabel> given;
    bool holds = false;
    // set when dropping latent candidates from `given` changed the verdict
    std::optional<std::string> warning;

    std::string text() const {
        std::string s = left.text() + " _||_ " + right.text();
        s += " | ";
        if (given.empty()) s += "(nothing)";
        for (std::size_t i = 0; i < given.size(); ++i) {
            if (i) s += ", ";
            s += given[i].text();
        }
        return s;
    }
};

namespace detail {

inline IndependenceCondition check_condition(const Swig& swig, const VariableId& outcome,
                                             const VariableId& decision,
                                             const std::vector<VariableId>& given_bases,
                                             const std::vector<VariableId>& latent_dropped) {
    IndependenceCondition cond;
    cond.left = swig.label_of(outcome);
    cond.right = swig.label_of(decision);
    std::set<VariableId> given;
    for (const auto& v : given_bases) {
        cond.given.push_back(swig.label_of(v));
        given.insert(v);
    }
    cond.holds = swig.d_separated({outcome}, {decision}, given);
    if (!latent_dropped.empty()) {
        std::set<VariableId> widened = given;
        for (const auto& v : latent_dropped) widened.insert(v);
        bool with_latents = swig.d_separated({outcome}, {decision}, widened);
        if (with_latents != cond.holds) {
            std::string names;
            for (const auto& v : latent_dropped) {
                if (!names.empty()) names += ", ";
                names += v;
            }
            cond.warning = "excluding latent {" + names + "} from the conditioning set "
                           "changes the verdict";
        }
    }
    return cond;
}

}  // namespace detail

// For regime step k on D_k: outcome-counterfactual independent of D_k's
// random part given every observed random node strictly earlier than D_k in
// the DAG's canonical topological order. Latent nodes are never conditioned
// on; a warning is attached when that exclusion changes the verdict.
inline std::vector<IndependenceCondition> derive_exchangeability(const CausalDag& dag,
                                                                 const Regime& regime,
                                                                 const VariableId& outcome) {
    if (!dag.has_node(outcome))
        throw NoDesignatedOutcomeError("node '" + outcome + "' is not in the graph");
    for (const auto& s : regime.steps)
        if (s.variable == outcome)
            throw NoDesignatedOutcomeError("outcome '" + outcome + "' is intervened on");

    Swig swig(dag, regime);
    std::vector<IndependenceCondition> out;
    for (const auto& step : regime.steps) {
        std::size_t cut = dag.topo_position(step.variable);
        std::vector<VariableId> given, latent;
        for (std::size_t pos : dag.topo_order()) {
            const auto& decl = dag.node(pos);
            if (dag.topo_position(decl.name) >= cut) break;
            if (decl.name == outcome) continue;
            (decl.observed ? given : latent).push_back(decl.name);
        }
        out.push_back(detail::check_condition(swig, outcome, step.variable, given, latent));
    }
    return out;
}

}  // namespace swid
