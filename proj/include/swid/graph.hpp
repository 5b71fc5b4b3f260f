#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <deque>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "swid/errors.hpp"

namespace swid {

// Node identity is by name. Names are nonempty tokens over [A-Za-z0-9_].
using VariableId = std::string;

// Index into a variable's declared support.
using Level = int;

inline bool valid_variable_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

struct NodeDecl {
    VariableId name;
    bool observed = true;
};

struct Edge {
    VariableId from;
    VariableId to;
    bool operator==(const Edge& o) const { return from == o.from && to == o.to; }
};

// Immutable directed acyclic graph over named variables. Construction
// validates everything; afterwards the object is safe to share across threads.
class CausalDag {
public:
    CausalDag(std::vector<NodeDecl> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        if (nodes_.empty()) throw DistributionError("a DAG needs at least one node");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& n = nodes_[i];
            if (!valid_variable_name(n.name))
                throw DistributionError("invalid node name: '" + n.name + "'");
            if (!index_.emplace(n.name, i).second) throw DuplicateNodeError(n.name);
        }
        parents_.resize(nodes_.size());
        children_.resize(nodes_.size());
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& e : edges_) {
            std::size_t u = index_of(e.from);
            std::size_t v = index_of(e.to);
            if (u == v) throw CycleError({e.from, e.to});
            if (!seen.emplace(u, v).second)
                throw DistributionError("duplicate edge: " + e.from + " -> " + e.to);
            children_[u].push_back(v);
            parents_[v].push_back(u);
        }
        compute_topo_order();
    }

    std::size_t size() const { return nodes_.size(); }

    bool has_node(const VariableId& name) const { return index_.count(name) != 0; }

    std::size_t index_of(const VariableId& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UnknownNodeError(name);
        return it->second;
    }

    const NodeDecl& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<NodeDecl>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool observed(const VariableId& name) const { return nodes_[index_of(name)].observed; }

    bool has_edge(const VariableId& from, const VariableId& to) const {
        std::size_t u = index_of(from), v = index_of(to);
        const auto& ch = children_[u];
        return std::find(ch.begin(), ch.end(), v) != ch.end();
    }

    const std::vector<std::size_t>& parents_of(std::size_t i) const { return parents_[i]; }
    const std::vector<std::size_t>& children_of(std::size_t i) const { return children_[i]; }

    std::vector<VariableId> parent_names(const VariableId& name) const {
        std::vector<VariableId> out;
        for (std::size_t p : parents_[index_of(name)]) out.push_back(nodes_[p].name);
        // stable order: canonical topological position
        std::sort(out.begin(), out.end(), [&](const VariableId& a, const VariableId& b) {
            return topo_position(a) < topo_position(b);
        });
        return out;
    }

    // Canonical topological order: Kahn's algorithm, ties broken by
    // declaration order. Deterministic for serialization and tests.
    const std::vector<std::size_t>& topo_order() const { return topo_order_; }

    std::size_t topo_position(const VariableId& name) const {
        return topo_pos_[index_of(name)];
    }

    // Reflexive-transitive closure along edge direction, v included.
    std::set<VariableId> descendants(const VariableId& v) const {
        return closure(index_of(v), children_);
    }

    // Reflexive-transitive closure against edge direction, v included.
    std::set<VariableId> ancestors(const VariableId& v) const {
        return closure(index_of(v), parents_);
    }

    // Standard d-separation via the reachability ("Bayes ball") procedure.
    // Chains and forks are blocked when the middle node is conditioned on;
    // colliders block unless the collider or one of its descendants is
    // conditioned on. The `observed` flag plays no role here.
    bool d_separated(const std::set<VariableId>& a, const std::set<VariableId>& b,
                     const std::set<VariableId>& given) const {
        std::vector<bool> in_a(nodes_.size(), false), in_b(nodes_.size(), false),
            in_z(nodes_.size(), false);
        auto fill = [&](const std::set<VariableId>& s, std::vector<bool>& flag) {
            for (const auto& name : s) flag[index_of(name)] = true;
        };
        fill(a, in_a);
        fill(b, in_b);
        fill(given, in_z);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            int c = int(in_a[i]) + int(in_b[i]) + int(in_z[i]);
            if (c > 1) throw OverlappingSetsError(nodes_[i].name);
        }

        // ancestors of the conditioning set (conditioning set included)
        std::vector<bool> anc_z(nodes_.size(), false);
        {
            std::deque<std::size_t> q;
            for (std::size_t i = 0; i < nodes_.size(); ++i)
                if (in_z[i]) {
                    anc_z[i] = true;
                    q.push_back(i);
                }
            while (!q.empty()) {
                std::size_t v = q.front();
                q.pop_front();
                for (std::size_t p : parents_[v])
                    if (!anc_z[p]) {
                        anc_z[p] = true;
                        q.push_back(p);
                    }
            }
        }

        // state: (node, direction). kUp means we arrived moving child -> parent.
        enum { kUp = 0, kDown = 1 };
        std::vector<std::array<bool, 2>> visited(nodes_.size(), {false, false});
        std::deque<std::pair<std::size_t, int>> frontier;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (in_a[i]) frontier.emplace_back(i, kUp);

        while (!frontier.empty()) {
            auto [v, dir] = frontier.front();
            frontier.pop_front();
            if (visited[v][dir]) continue;
            visited[v][dir] = true;
            if (!in_z[v] && in_b[v]) return false;

            if (dir == kUp && !in_z[v]) {
                for (std::size_t p : parents_[v]) frontier.emplace_back(p, kUp);
                for (std::size_t c : children_[v]) frontier.emplace_back(c, kDown);
            } else if (dir == kDown) {
                if (!in_z[v]) {
                    for (std::size_t c : children_[v]) frontier.emplace_back(c, kDown);
                }
                if (anc_z[v]) {  // collider with conditioned descendant opens
                    for (std::size_t p : parents_[v]) frontier.emplace_back(p, kUp);
                }
            }
        }
        return true;
    }

    // One digraph block; latent nodes styled dashed.
    std::string to_dot(const std::string& graph_name = "G") const {
        std::ostringstream os;
        os << "digraph " << graph_name << " {\n";
        for (const auto& n : nodes_) {
            os << "  " << n.name;
            if (!n.observed) os << " [style=dashed]";
            os << ";\n";
        }
        for (const auto& e : edges_) os << "  " << e.from << " -> " << e.to << ";\n";
        os << "}\n";
        return os.str();
    }

private:
    std::set<VariableId> closure(std::size_t start,
                                 const std::vector<std::vector<std::size_t>>& next) const {
        std::set<VariableId> out;
        std::vector<bool> seen(nodes_.size(), false);
        std::deque<std::size_t> q{start};
        seen[start] = true;
        while (!q.empty()) {
            std::size_t v = q.front();
            q.pop_front();
            out.insert(nodes_[v].name);
            for (std::size_t w : next[v])
                if (!seen[w]) {
                    seen[w] = true;
                    q.push_back(w);
                }
        }
        return out;
    }

    void compute_topo_order() {
        std::vector<std::size_t> indeg(nodes_.size(), 0);
        for (std::size_t v = 0; v < nodes_.size(); ++v) indeg[v] = parents_[v].size();
        // min-heap on declaration index would do; linear scan keeps it simple
        std::vector<bool> emitted(nodes_.size(), false);
        topo_order_.reserve(nodes_.size());
        for (std::size_t step = 0; step < nodes_.size(); ++step) {
            std::size_t pick = nodes_.size();
            for (std::size_t v = 0; v < nodes_.size(); ++v)
                if (!emitted[v] && indeg[v] == 0) {
                    pick = v;
                    break;
                }
            if (pick == nodes_.size()) {
                throw CycleError(find_cycle());
            }
            emitted[pick] = true;
            topo_order_.push_back(pick);
            for (std::size_t c : children_[pick]) --indeg[c];
        }
        topo_pos_.resize(nodes_.size());
        for (std::size_t i = 0; i < topo_order_.size(); ++i) topo_pos_[topo_order_[i]] = i;
    }

    // Produces one witness cycle as a node-name sequence, first node repeated.
    std::vector<std::string> find_cycle() const {
        std::vector<int> state(nodes_.size(), 0);  // 0 unseen, 1 on stack, 2 done
        std::vector<std::size_t> stack;
        std::vector<std::string> cycle;
        auto dfs = [&](auto&& self, std::size_t v) -> bool {
            state[v] = 1;
            stack.push_back(v);
            for (std::size_t c : children_[v]) {
                if (state[c] == 1) {
                    auto it = std::find(stack.begin(), stack.end(), c);
                    for (; it != stack.end(); ++it) cycle.push_back(nodes_[*it].name);
                    cycle.push_back(nodes_[c].name);
                    return true;
                }
                if (state[c] == 0 && self(self, c)) return true;
            }
            stack.pop_back();
            state[v] = 2;
            return false;
        };
        for (std::size_t v = 0; v < nodes_.size(); ++v)
            if (state[v] == 0 && dfs(dfs, v)) break;
        return cycle;
    }

    std::vector<NodeDecl> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<VariableId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> topo_order_;
    std::vector<std::size_t> topo_pos_;
};

inline CausalDag validate_dag(std::vector<NodeDecl> nodes, std::vector<Edge> edges) {
    return CausalDag(std::move(nodes), std::move(edges));
}

inline std::set<VariableId> descendants(const CausalDag& dag, const VariableId& v) {
    return dag.descendants(v);
}

inline std::set<VariableId> ancestors(const CausalDag& dag, const VariableId& v) {
    return dag.ancestors(v);
}

inline bool d_separated(const CausalDag& dag, const std::set<VariableId>& a,
                        const std::set<VariableId>& b, const std::set<VariableId>& given) {
    return dag.d_separated(a, b, given);
}

}  // namespace swid
