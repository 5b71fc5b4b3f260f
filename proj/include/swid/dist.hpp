#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "swid/graph.hpp"
#include "swid/numeric.hpp"

namespace swid {

struct Variable {
    VariableId name;
    std::vector<std::string> support;  // ordered printable labels

    bool operator==(const Variable& o) const { return name == o.name && support == o.support; }
};

inline Variable binary_variable(VariableId name) {
    return Variable{std::move(name), {"0", "1"}};
}

enum class AtomOp { Eq, Le };

struct Atom {
    VariableId var;
    AtomOp op = AtomOp::Eq;
    Level level = 0;
};

// Conjunction of atoms, at most one per variable.
struct Event {
    std::vector<Atom> atoms;

    Event& eq(VariableId var, Level level) {
        push(Atom{std::move(var), AtomOp::Eq, level});
        return *this;
    }
    Event& le(VariableId var, Level level) {
        push(Atom{std::move(var), AtomOp::Le, level});
        return *this;
    }
    Event and_also(const Event& other) const {
        Event out = *this;
        for (const auto& a : other.atoms) out.push(a);
        return out;
    }

    std::string text() const {
        if (atoms.empty()) return "(true)";
        std::string s;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (i) s += ", ";
            s += atoms[i].var + (atoms[i].op == AtomOp::Eq ? "=" : "<=") +
                 std::to_string(atoms[i].level);
        }
        return s;
    }

private:
    void push(Atom a) {
        for (const auto& prev : atoms)
            if (prev.var == a.var)
                throw DistributionError("event names variable twice: " + a.var);
        atoms.push_back(std::move(a));
    }
};

// Exact joint probability table over finitely supported variables. The table
// is dense, last declared variable fastest. Immutable after construction.
template <typename N>
class DiscreteJoint {
public:
    static constexpr std::size_t kMaxCells = std::size_t(1) << 24;

    DiscreteJoint(std::vector<Variable> variables, std::vector<N> table)
        : variables_(std::move(variables)), table_(std::move(table)) {
        std::size_t cells = 1;
        for (std::size_t i = 0; i < variables_.size(); ++i) {
            const auto& v = variables_[i];
            if (v.support.empty())
                throw DistributionError("variable with empty support: " + v.name);
            if (!index_.emplace(v.name, i).second) throw DuplicateNodeError(v.name);
            if (cells > kMaxCells / v.support.size())
                throw SizeLimitError("joint table exceeds 2^24 cells");
            cells *= v.support.size();
        }
        if (table_.size() != cells)
            throw DistributionError("table size does not match supports");
        strides_.assign(variables_.size(), 1);
        for (std::size_t i = variables_.size(); i-- > 1;)
            strides_[i - 1] = strides_[i] * variables_[i].support.size();

        N total = NumberTraits<N>::zero();
        for (const auto& p : table_) {
            if (p < NumberTraits<N>::zero())
                throw DistributionError("negative probability in table");
            total += p;
        }
        if constexpr (NumberTraits<N>::exact) {
            if (total != NumberTraits<N>::one())
                throw DistributionError("table mass is " + NumberTraits<N>::to_text(total) +
                                        ", expected 1");
        } else {
            if (NumberTraits<N>::abs(total - NumberTraits<N>::one()) > N(1e-12))
                throw DistributionError("table mass deviates from 1 by more than 1e-12");
        }
    }

    // Sparse constructor: omitted assignments carry zero mass.
    static DiscreteJoint from_rows(std::vector<Variable> variables,
                                   const std::vector<std::pair<std::vector<Level>, N>>& rows) {
        std::size_t cells = 1;
        for (const auto& v : variables) {
            if (v.support.empty())
                throw DistributionError("variable with empty support: " + v.name);
            if (cells > kMaxCells / v.support.size())
                throw SizeLimitError("joint table exceeds 2^24 cells");
            cells *= v.support.size();
        }
        std::vector<N> table(cells, NumberTraits<N>::zero());
        std::vector<std::size_t> strides(variables.size(), 1);
        for (std::size_t i = variables.size(); i-- > 1;)
            strides[i - 1] = strides[i] * variables[i].support.size();
        for (const auto& [levels, p] : rows) {
            if (levels.size() != variables.size())
                throw DistributionError("row arity does not match variable count");
            std::size_t at = 0;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (levels[i] < 0 ||
                    static_cast<std::size_t>(levels[i]) >= variables[i].support.size())
                    throw DistributionError("level out of range for " + variables[i].name);
                at += strides[i] * levels[i];
            }
            table[at] += p;
        }
        return DiscreteJoint(std::move(variables), std::move(table));
    }

    const std::vector<Variable>& variables() const { return variables_; }
    std::size_t cell_count() const { return table_.size(); }

    bool has_variable(const VariableId& name) const { return index_.count(name) != 0; }

    std::size_t position_of(const VariableId& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UnknownVariableError(name);
        return it->second;
    }

    const Variable& variable(const VariableId& name) const {
        return variables_[position_of(name)];
    }

    std::size_t support_size(const VariableId& name) const {
        return variables_[position_of(name)].support.size();
    }

    Level level_of_label(const VariableId& name, const std::string& label) const {
        const auto& sup = variable(name).support;
        for (std::size_t i = 0; i < sup.size(); ++i)
            if (sup[i] == label) return static_cast<Level>(i);
        throw DistributionError("label '" + label + "' not in support of " + name);
    }

    const N& cell(const std::vector<Level>& full_assignment) const {
        return table_[flat_index(full_assignment)];
    }

    template <typename F>  // F(const std::vector<Level>&, const N&)
    void for_each_cell(F&& fn) const {
        std::vector<Level> levels(variables_.size(), 0);
        for (std::size_t at = 0; at < table_.size(); ++at) {
            fn(const_cast<const std::vector<Level>&>(levels), table_[at]);
            for (std::size_t i = variables_.size(); i-- > 0;) {
                if (static_cast<std::size_t>(++levels[i]) < variables_[i].support.size()) break;
                levels[i] = 0;
            }
        }
    }

    N prob(const Event& event) const {
        auto atoms = compile(event);
        N total = NumberTraits<N>::zero();
        for_each_cell([&](const std::vector<Level>& levels, const N& p) {
            if (matches(atoms, levels)) total += p;
        });
        return total;
    }

    N conditional(const Event& event, const Event& given) const {
        auto ev = compile(event);
        auto gv = compile(given);
        N joint = NumberTraits<N>::zero(), base = NumberTraits<N>::zero();
        for_each_cell([&](const std::vector<Level>& levels, const N& p) {
            if (!matches(gv, levels)) return;
            base += p;
            if (matches(ev, levels)) joint += p;
        });
        if (base == NumberTraits<N>::zero()) throw ZeroConditioningMassError(given.text());
        return joint / base;
    }

    N cond_cdf(const VariableId& y_var, Level y_level, const Event& given) const {
        return conditional(Event{}.le(y_var, y_level), given);
    }

    // Marginal mass of every assignment of `vars` among cells satisfying
    // `filter`. Keys are level vectors aligned with `vars`.
    std::map<std::vector<Level>, N> group_mass(const std::vector<VariableId>& vars,
                                               const Event& filter = Event{}) const {
        std::vector<std::size_t> positions;
        positions.reserve(vars.size());
        for (const auto& v : vars) positions.push_back(position_of(v));
        auto f = compile(filter);
        std::map<std::vector<Level>, N> out;
        std::vector<Level> key(vars.size());
        for_each_cell([&](const std::vector<Level>& levels, const N& p) {
            if (p == NumberTraits<N>::zero() || !matches(f, levels)) return;
            for (std::size_t i = 0; i < positions.size(); ++i) key[i] = levels[positions[i]];
            auto it = out.find(key);
            if (it == out.end())
                out.emplace(key, p);
            else
                it->second += p;
        });
        return out;
    }

    // Sum over the marginal of `outer_vars` of f(x) * inner(x). Errors thrown
    // by `inner` are annotated with the offending assignment.
    N expect_over(const std::vector<VariableId>& outer_vars,
                  const std::function<N(const std::vector<Level>&)>& inner) const {
        auto marg = group_mass(outer_vars);
        N total = NumberTraits<N>::zero();
        for (const auto& [levels, mass] : marg) {
            try {
                total += mass * inner(levels);
            } catch (const Error& e) {
                std::string ctx;
                for (std::size_t i = 0; i < outer_vars.size(); ++i) {
                    if (i) ctx += ", ";
                    ctx += outer_vars[i] + "=" + variables_[position_of(outer_vars[i])]
                                                    .support[levels[i]];
                }
                throw Error(std::string(e.what()) + " [at " + ctx + "]");
            }
        }
        return total;
    }

    // Columnar CSV: header = variable names + "prob"; zero-mass rows omitted.
    std::string to_csv() const {
        std::ostringstream os;
        for (const auto& v : variables_) os << v.name << ",";
        os << "prob\n";
        for_each_cell([&](const std::vector<Level>& levels, const N& p) {
            if (p == NumberTraits<N>::zero()) return;
            for (std::size_t i = 0; i < levels.size(); ++i)
                os << variables_[i].support[levels[i]] << ",";
            os << NumberTraits<N>::to_text(p) << "\n";
        });
        return os.str();
    }

    nlohmann::json to_json() const {
        nlohmann::json vars = nlohmann::json::array();
        for (const auto& v : variables_)
            vars.push_back({{"name", v.name}, {"support", v.support}});
        nlohmann::json rows = nlohmann::json::array();
        for_each_cell([&](const std::vector<Level>& levels, const N& p) {
            if (p == NumberTraits<N>::zero()) return;
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t i = 0; i < levels.size(); ++i)
                row.push_back(variables_[i].support[levels[i]]);
            row.push_back(NumberTraits<N>::to_text(p));
            rows.push_back(row);
        });
        return {{"variables", vars}, {"rows", rows}};
    }

    static DiscreteJoint from_json(const nlohmann::json& j) {
        std::vector<Variable> vars;
        for (const auto& v : j.at("variables"))
            vars.push_back(Variable{v.at("name").get<std::string>(),
                                    v.at("support").get<std::vector<std::string>>()});
        std::vector<std::pair<std::vector<Level>, N>> rows;
        for (const auto& row : j.at("rows")) {
            std::vector<Level> levels;
            for (std::size_t i = 0; i + 1 < row.size(); ++i) {
                const auto& sup = vars[i].support;
                const std::string label = row[i].get<std::string>();
                auto it = std::find(sup.begin(), sup.end(), label);
                if (it == sup.end())
                    throw DistributionError("label '" + label + "' not in support of " +
                                            vars[i].name);
                levels.push_back(static_cast<Level>(it - sup.begin()));
            }
            rows.emplace_back(std::move(levels), NumberTraits<N>::from_rational(rational_from_string(
                                                     row.back().template get<std::string>())));
        }
        return from_rows(std::move(vars), rows);
    }

private:
    struct CompiledAtom {
        std::size_t pos;
        AtomOp op;
        Level level;
    };

    std::vector<CompiledAtom> compile(const Event& e) const {
        std::vector<CompiledAtom> out;
        out.reserve(e.atoms.size());
        for (const auto& a : e.atoms) {
            std::size_t pos = position_of(a.var);
            if (a.level < 0 || static_cast<std::size_t>(a.level) >= variables_[pos].support.size())
                throw DistributionError("level out of range for " + a.var);
            out.push_back({pos, a.op, a.level});
        }
        return out;
    }

    static bool matches(const std::vector<CompiledAtom>& atoms, const std::vector<Level>& levels) {
        for (const auto& a : atoms) {
            Level have = levels[a.pos];
            if (a.op == AtomOp::Eq ? have != a.level : have > a.level) return false;
        }
        return true;
    }

    std::size_t flat_index(const std::vector<Level>& levels) const {
        if (levels.size() != variables_.size())
            throw DistributionError("assignment arity does not match variable count");
        std::size_t at = 0;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (levels[i] < 0 || static_cast<std::size_t>(levels[i]) >= variables_[i].support.size())
                throw DistributionError("level out of range for " + variables_[i].name);
            at += strides_[i] * levels[i];
        }
        return at;
    }

    std::vector<Variable> variables_;
    std::vector<N> table_;
    std::unordered_map<VariableId, std::size_t> index_;
    std::vector<std::size_t> strides_;
};

template <typename N>
N prob(const DiscreteJoint<N>& dist, const Event& event) {
    return dist.prob(event);
}

template <typename N>
N conditional(const DiscreteJoint<N>& dist, const Event& event, const Event& given) {
    return dist.conditional(event, given);
}

template <typename N>
N cond_cdf(const DiscreteJoint<N>& dist, const VariableId& y_var, Level y_level,
           const Event& given) {
    return dist.cond_cdf(y_var, y_level, given);
}

// Exact conditional-independence test by factorization equality:
// P(a,b,c) * P(c) == P(a,c) * P(b,c) for every assignment of (a,b,c).
template <typename N>
bool independent_given(const DiscreteJoint<N>& dist, const std::vector<VariableId>& a,
                       const std::vector<VariableId>& b, const std::vector<VariableId>& c) {
    std::vector<VariableId> ab = a, ac = a, bc = b, abc = a;
    ab.insert(ab.end(), b.begin(), b.end());
    ac.insert(ac.end(), c.begin(), c.end());
    bc.insert(bc.end(), c.begin(), c.end());
    abc.insert(abc.end(), b.begin(), b.end());
    abc.insert(abc.end(), c.begin(), c.end());

    auto m_abc = dist.group_mass(abc);
    auto m_ac = dist.group_mass(ac);
    auto m_bc = dist.group_mass(bc);
    auto m_c = dist.group_mass(c);

    auto slice = [](const std::vector<Level>& key, std::size_t from, std::size_t len) {
        return std::vector<Level>(key.begin() + from, key.begin() + from + len);
    };
    // all four maps must agree on every cell of the (a,b,c) lattice;
    // iterate the full lattice by walking m_abc plus zero completions
    std::vector<VariableId> order = abc;
    std::vector<std::size_t> sizes;
    for (const auto& v : order) sizes.push_back(dist.support_size(v));
    std::vector<Level> key(order.size(), 0);
    auto lookup = [](const std::map<std::vector<Level>, N>& m, const std::vector<Level>& k) {
        auto it = m.find(k);
        return it == m.end() ? NumberTraits<N>::zero() : it->second;
    };
    while (true) {
        std::vector<Level> ka = slice(key, 0, a.size());
        std::vector<Level> kb = slice(key, a.size(), b.size());
        std::vector<Level> kc = slice(key, a.size() + b.size(), c.size());
        std::vector<Level> kac = ka, kbc = kb;
        kac.insert(kac.end(), kc.begin(), kc.end());
        kbc.insert(kbc.end(), kc.begin(), kc.end());
        N lhs = lookup(m_abc, key) * lookup(m_c, kc);
        N rhs = lookup(m_ac, kac) * lookup(m_bc, kbc);
        if constexpr (NumberTraits<N>::exact) {
            if (lhs != rhs) return false;
        } else {
            if (NumberTraits<N>::abs(lhs - rhs) > N(1e-12)) return false;
        }
        bool wrapped = true;
        for (std::size_t i = order.size(); i-- > 0;) {
            if (static_cast<std::size_t>(++key[i]) < sizes[i]) {
                wrapped = false;
                break;
            }
            key[i] = 0;
        }
        if (wrapped) return true;
    }
}

}  // namespace swid
