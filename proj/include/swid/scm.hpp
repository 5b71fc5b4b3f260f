#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swid/dist.hpp"
#include "swid/graph.hpp"
#include "swid/numeric.hpp"
#include "swid/swig.hpp"

namespace swid {

// Finite distribution over a node's exogenous noise levels. Masses are exact
// rationals so the oracle stays noiseless.
struct NoiseSpec {
    std::vector<Rational> masses;

    std::size_t levels() const { return masses.size(); }
};

// Total lookup table (parent levels x noise level) -> node level. Parent
// configurations are enumerated over the node's parents in canonical
// topological order, last parent fastest, with the noise level fastest of all.
struct Mechanism {
    std::vector<Level> table;
};

struct Dataset {
    std::vector<Variable> variables;
    std::vector<std::vector<Level>> rows;
    std::uint64_t seed = 0;

    std::string to_csv() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < variables.size(); ++i) {
            if (i) os << ",";
            os << variables[i].name;
        }
        os << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ",";
                os << variables[i].support[row[i]];
            }
            os << "\n";
        }
        return os.str();
    }
};

// Discrete structural causal model over a CausalDag: independent exogenous
// noises plus deterministic mechanisms. Consistency of counterfactuals holds
// by construction, via recursive substitution on shared noise.
class Scm {
public:
    Scm(CausalDag dag, std::vector<Variable> variables, std::vector<NoiseSpec> noise,
        std::vector<Mechanism> mechanisms)
        : dag_(std::move(dag)),
          variables_(std::move(variables)),
          noise_(std::move(noise)),
          mech_(std::move(mechanisms)) {
        const std::size_t n = dag_.size();
        if (variables_.size() != n || noise_.size() != n || mech_.size() != n)
            throw DistributionError("SCM pieces do not align with the graph");
        parent_pos_.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            if (variables_[v].name != dag_.node(v).name)
                throw DistributionError("SCM variable order must match graph declaration order");
            if (variables_[v].support.empty())
                throw DistributionError("variable with empty support: " + variables_[v].name);
            if (noise_[v].levels() == 0)
                throw DistributionError("noise with empty support: " + variables_[v].name);
            Rational total = 0;
            for (const auto& m : noise_[v].masses) {
                if (m < 0) throw DistributionError("negative noise mass: " + variables_[v].name);
                total += m;
            }
            if (total != 1)
                throw DistributionError("noise masses of " + variables_[v].name +
                                        " sum to " + rational_to_string(total));
            for (const auto& p : dag_.parent_names(variables_[v].name))
                parent_pos_[v].push_back(dag_.index_of(p));
            std::size_t configs = 1;
            for (std::size_t p : parent_pos_[v]) configs *= variables_[p].support.size();
            if (mech_[v].table.size() != configs * noise_[v].levels())
                throw DistributionError("mechanism table of " + variables_[v].name +
                                        " is not total over parents x noise");
            for (Level out : mech_[v].table)
                if (out < 0 || static_cast<std::size_t>(out) >= variables_[v].support.size())
                    throw DistributionError("mechanism output out of range for " +
                                            variables_[v].name);
        }
    }

    const CausalDag& dag() const { return dag_; }
    const std::vector<Variable>& variables() const { return variables_; }
    const NoiseSpec& noise(std::size_t v) const { return noise_[v]; }
    const Mechanism& mechanism(std::size_t v) const { return mech_[v]; }
    const std::vector<std::size_t>& parent_positions(std::size_t v) const {
        return parent_pos_[v];
    }

    Level apply_mechanism(std::size_t v, const std::vector<Level>& full, Level noise_level) const {
        std::size_t pc = 0;
        for (std::size_t p : parent_pos_[v]) pc = pc * variables_[p].support.size() + full[p];
        return mech_[v].table[pc * noise_[v].levels() + noise_level];
    }

    // Conditional probability table induced by noise + mechanism:
    // cpt(v)[parent config][level].
    std::vector<std::vector<Rational>> cpt(std::size_t v) const {
        std::size_t configs = mech_[v].table.size() / noise_[v].levels();
        std::vector<std::vector<Rational>> out(
            configs, std::vector<Rational>(variables_[v].support.size(), Rational(0)));
        for (std::size_t pc = 0; pc < configs; ++pc)
            for (std::size_t u = 0; u < noise_[v].levels(); ++u)
                out[pc][mech_[v].table[pc * noise_[v].levels() + u]] += noise_[v].masses[u];
        return out;
    }

    // Exact joint over the endogenous variables. Equals the sum over noise
    // configurations pushed through the mechanisms; computed as the product
    // of the induced per-node conditionals, which is the same thing for
    // independent noises.
    template <typename N>
    DiscreteJoint<N> factual_law() const {
        return law_with_forced<N>({});
    }

    // Truncated factorization: intervened mechanisms replaced by constants.
    // Regime values must be concrete.
    template <typename N>
    DiscreteJoint<N> do_law(const Regime& regime) const {
        std::vector<std::optional<Level>> forced(dag_.size());
        for (const auto& s : regime.steps) {
            if (s.value.is_symbol()) throw UnboundSymbolError(s.value.as_symbol());
            std::size_t v = dag_.index_of(s.variable);
            check_level(v, s.value.as_level());
            forced[v] = s.value.as_level();
        }
        return law_with_forced<N>(forced);
    }

    // Joint law of the factual variables together with the counterfactual
    // variables under `regime`, by enumerating every joint noise
    // configuration and solving both worlds on the same noise (single-world
    // recursive substitution). Counterfactual columns are named by their
    // minimal label; variables whose minimal superscript is empty coincide
    // with their factual copies and are not duplicated. An intervened node's
    // column records its natural value under the earlier interventions (the
    // random part of the split node); the forced level is what propagates to
    // descendants.
    template <typename N>
    DiscreteJoint<N> counterfactual_joint(const Regime& regime) const {
        const std::size_t n = dag_.size();
        std::vector<std::optional<Level>> forced(n);
        for (const auto& s : regime.steps) {
            if (s.value.is_symbol()) throw UnboundSymbolError(s.value.as_symbol());
            std::size_t v = dag_.index_of(s.variable);
            check_level(v, s.value.as_level());
            forced[v] = s.value.as_level();
        }
        Swig swig(dag_, regime);

        std::vector<std::size_t> cf_nodes;  // graph indices with nonempty superscript
        std::vector<Variable> columns = variables_;
        for (std::size_t v = 0; v < n; ++v) {
            const auto& label = swig.label_of(dag_.node(v).name);
            if (!label.superscript.empty()) {
                cf_nodes.push_back(v);
                columns.push_back(Variable{label.text(), variables_[v].support});
            }
        }

        std::size_t noise_cells = 1;
        for (std::size_t v = 0; v < n; ++v) {
            if (noise_cells > DiscreteJoint<N>::kMaxCells / noise_[v].levels())
                throw SizeLimitError("joint noise space exceeds 2^24 configurations");
            noise_cells *= noise_[v].levels();
        }

        std::vector<std::pair<std::vector<Level>, N>> rows;
        std::vector<Level> noise_levels(n, 0);
        std::vector<Level> fact(n), natural(n), propagated(n);
        for (std::size_t it = 0; it < noise_cells; ++it) {
            Rational mass = 1;
            for (std::size_t v = 0; v < n; ++v) mass *= noise_[v].masses[noise_levels[v]];
            if (mass != 0) {
                for (std::size_t pos : dag_.topo_order()) {
                    fact[pos] = apply_mechanism(pos, fact, noise_levels[pos]);
                    natural[pos] = apply_mechanism(pos, propagated, noise_levels[pos]);
                    propagated[pos] = forced[pos] ? *forced[pos] : natural[pos];
                }
                std::vector<Level> row = fact;
                for (std::size_t v : cf_nodes) row.push_back(natural[v]);
                rows.emplace_back(std::move(row), NumberTraits<N>::from_rational(mass));
            }
            for (std::size_t v = n; v-- > 0;) {
                if (static_cast<std::size_t>(++noise_levels[v]) < noise_[v].levels()) break;
                noise_levels[v] = 0;
            }
        }
        return DiscreteJoint<N>::from_rows(std::move(columns), rows);
    }

    // n i.i.d. ancestral draws. Row r uses its own counter-based generator
    // seeded by (seed, r), so the result does not depend on how rows are
    // partitioned across workers.
    Dataset sample(std::size_t n, std::uint64_t seed) const {
        // per-node noise CDF thresholds; double rounding only perturbs draw
        // boundaries by ~1e-16 which is far below test tolerances
        std::vector<std::vector<double>> cdf(dag_.size());
        for (std::size_t v = 0; v < dag_.size(); ++v) {
            double acc = 0;
            for (const auto& m : noise_[v].masses) {
                acc += rational_to_double(m);
                cdf[v].push_back(acc);
            }
            cdf[v].back() = 1.0;
        }
        Dataset out;
        out.variables = variables_;
        out.seed = seed;
        out.rows.reserve(n);
        std::vector<Level> row(dag_.size());
        for (std::size_t r = 0; r < n; ++r) {
            DetRng rng(mix_seed(seed, r));
            for (std::size_t pos : dag_.topo_order()) {
                double u = rng.unit();
                Level noise_level = 0;
                while (u >= cdf[pos][noise_level] &&
                       noise_level + 1 < static_cast<Level>(cdf[pos].size()))
                    ++noise_level;
                row[pos] = apply_mechanism(pos, row, noise_level);
            }
            out.rows.push_back(row);
        }
        return out;
    }

private:
    void check_level(std::size_t v, Level l) const {
        if (l < 0 || static_cast<std::size_t>(l) >= variables_[v].support.size())
            throw DistributionError("forced level out of range for " + variables_[v].name);
    }

    template <typename N>
    DiscreteJoint<N> law_with_forced(std::vector<std::optional<Level>> forced) const {
        const std::size_t n = dag_.size();
        if (forced.empty()) forced.resize(n);
        std::vector<std::vector<std::vector<N>>> cpts(n);
        for (std::size_t v = 0; v < n; ++v) {
            auto exact = cpt(v);
            cpts[v].resize(exact.size());
            for (std::size_t pc = 0; pc < exact.size(); ++pc)
                for (const auto& r : exact[pc])
                    cpts[v][pc].push_back(NumberTraits<N>::from_rational(r));
        }
        std::size_t cells = 1;
        for (std::size_t v = 0; v < n; ++v) {
            if (cells > DiscreteJoint<N>::kMaxCells / variables_[v].support.size())
                throw SizeLimitError("joint table exceeds 2^24 cells");
            cells *= variables_[v].support.size();
        }
        std::vector<N> table;
        table.reserve(cells);
        std::vector<Level> levels(n, 0);
        for (std::size_t at = 0; at < cells; ++at) {
            N p = NumberTraits<N>::one();
            for (std::size_t v = 0; v < n && p != NumberTraits<N>::zero(); ++v) {
                if (forced[v]) {
                    if (levels[v] != *forced[v]) p = NumberTraits<N>::zero();
                    continue;
                }
                std::size_t pc = 0;
                for (std::size_t q : parent_pos_[v])
                    pc = pc * variables_[q].support.size() + levels[q];
                p *= cpts[v][pc][levels[v]];
            }
            table.push_back(p);
            for (std::size_t v = n; v-- > 0;) {
                if (static_cast<std::size_t>(++levels[v]) < variables_[v].support.size()) break;
                levels[v] = 0;
            }
        }
        return DiscreteJoint<N>(variables_, std::move(table));
    }

    CausalDag dag_;
    std::vector<Variable> variables_;
    std::vector<NoiseSpec> noise_;
    std::vector<Mechanism> mech_;
    std::vector<std::vector<std::size_t>> parent_pos_;
};

template <typename N>
DiscreteJoint<N> factual_law(const Scm& scm) {
    return scm.factual_law<N>();
}

template <typename N>
DiscreteJoint<N> do_law(const Scm& scm, const Regime& regime) {
    return scm.do_law<N>(regime);
}

template <typename N>
DiscreteJoint<N> counterfactual_joint(const Scm& scm, const Regime& regime) {
    return scm.counterfactual_joint<N>(regime);
}

inline Dataset sample(const Scm& scm, std::size_t n, std::uint64_t seed) {
    return scm.sample(n, seed);
}

// Empirical joint of a dataset; counts become exact rationals k/n.
template <typename N>
DiscreteJoint<N> empirical_joint(const Dataset& data) {
    if (data.rows.empty()) throw DistributionError("empty dataset");
    std::map<std::vector<Level>, std::size_t> counts;
    for (const auto& row : data.rows) ++counts[row];
    std::vector<std::pair<std::vector<Level>, N>> rows;
    for (const auto& [levels, k] : counts)
        rows.emplace_back(levels, NumberTraits<N>::from_rational(
                                      Rational(BigInt(k), BigInt(data.rows.size()))));
    return DiscreteJoint<N>::from_rows(data.variables, rows);
}

// Random SCM whose every conditional Pr[v | parents] is >= min_prob, so the
// positivity conditions hold by construction. Deterministic in `seed`.
//
// Per node with support size q: the noise support gets n in [q, min(8,
// floor(1/min_prob))] levels with exact-rational masses each >= min_prob, and
// each parent configuration maps noise levels onto output levels via a random
// surjection, so every output level captures at least one noise mass.
inline Scm random_scm(const CausalDag& dag, std::uint64_t seed, const Rational& min_prob,
                      const std::vector<std::size_t>& support_sizes = {}) {
    const std::size_t n = dag.size();
    std::vector<Variable> vars;
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t q = support_sizes.empty() ? 2 : support_sizes[v];
        if (q < 1) throw DistributionError("support size must be >= 1");
        Variable var{dag.node(v).name, {}};
        for (std::size_t l = 0; l < q; ++l) var.support.push_back(std::to_string(l));
        vars.push_back(std::move(var));
    }

    std::vector<NoiseSpec> noise(n);
    std::vector<Mechanism> mech(n);
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t q = vars[v].support.size();
        // the boundary q * min_prob == 1 is allowed and forces uniform masses
        if (min_prob <= 0 || min_prob * Rational(static_cast<int>(q)) > 1)
            throw InfeasibleFloorError("min_prob " + rational_to_string(min_prob) +
                                       " infeasible for support size " + std::to_string(q));
        DetRng rng(mix_seed(seed, 0x5cf0000ULL + v));

        // floor(1/min_prob) caps how many noise levels can each carry >= min_prob
        BigInt cap_big = denominator(min_prob) / numerator(min_prob);
        std::size_t cap = cap_big > 8 ? 8 : cap_big.convert_to<std::size_t>();
        std::size_t levels = q + (cap > q ? rng.below(cap - q + 1) : 0);

        Rational slack = Rational(1) - min_prob * Rational(static_cast<int>(levels));
        std::vector<std::uint64_t> ticks(levels);
        std::uint64_t tick_sum = 0;
        for (auto& t : ticks) {
            t = rng.below(17);
            tick_sum += t;
        }
        NoiseSpec ns;
        for (std::size_t u = 0; u < levels; ++u) {
            Rational extra = tick_sum == 0
                                 ? slack / Rational(static_cast<int>(levels))
                                 : slack * Rational(BigInt(ticks[u]), BigInt(tick_sum));
            ns.masses.push_back(min_prob + extra);
        }
        noise[v] = std::move(ns);

        std::size_t configs = 1;
        for (const auto& p : dag.parent_names(vars[v].name))
            configs *= vars[dag.index_of(p)].support.size();
        mech[v].table.reserve(configs * levels);
        std::vector<Level> outputs(levels);
        for (std::size_t pc = 0; pc < configs; ++pc) {
            for (std::size_t u = 0; u < levels; ++u)
                outputs[u] = u < q ? static_cast<Level>(u) : static_cast<Level>(rng.below(q));
            for (std::size_t u = levels; u-- > 1;)
                std::swap(outputs[u], outputs[rng.below(u + 1)]);
            for (std::size_t u = 0; u < levels; ++u) mech[v].table.push_back(outputs[u]);
        }
    }
    return Scm(dag, std::move(vars), std::move(noise), std::move(mech));
}

}  // namespace swid
