#pragma once

#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "swid/dist.hpp"
#include "swid/graph.hpp"
#include "swid/scm.hpp"
#include "swid/swig.hpp"

namespace swid {

// One decision point of a sequential regime: covariates measured since the
// previous decision, then the decision variable forced to a level (or to a
// symbol bound later).
struct SpecStep {
    VariableId decision;
    RegimeValue forced;
    std::vector<VariableId> history;  // measured after the previous decision
};

struct RegimeSpec {
    std::vector<VariableId> baseline;  // the X block
    std::vector<SpecStep> steps;
    VariableId outcome;

    Regime regime() const {
        Regime r;
        for (const auto& s : steps) r.steps.push_back(RegimeStep{s.decision, s.forced});
        return r;
    }

    bool concrete() const {
        for (const auto& s : steps)
            if (s.forced.is_symbol()) return false;
        return true;
    }

    // Resolve symbolic forced values; unbound symbols are an error.
    RegimeSpec bind(const std::map<std::string, Level>& bindings) const {
        RegimeSpec out = *this;
        for (auto& s : out.steps) {
            if (!s.forced.is_symbol()) continue;
            auto it = bindings.find(s.forced.as_symbol());
            if (it == bindings.end()) throw UnboundSymbolError(s.forced.as_symbol());
            s.forced = RegimeValue::level(it->second);
        }
        return out;
    }

    std::vector<VariableId> all_variables() const {
        std::vector<VariableId> out = baseline;
        for (const auto& s : steps) {
            out.insert(out.end(), s.history.begin(), s.history.end());
            out.push_back(s.decision);
        }
        out.push_back(outcome);
        return out;
    }
};

// Interleaving must respect the DAG's topological order; every referenced
// variable must exist, be observed, and appear once.
inline void validate_spec(const CausalDag& dag, const RegimeSpec& spec) {
    auto seq = spec.all_variables();
    std::set<VariableId> seen;
    std::size_t prev = 0;
    bool first = true;
    for (const auto& v : seq) {
        if (!dag.has_node(v)) throw SemanticError("regime references unknown variable " + v);
        if (!dag.observed(v))
            throw SemanticError("latent variable " + v + " cannot appear in a regime");
        if (!seen.insert(v).second)
            throw SemanticError("variable " + v + " appears twice in the regime");
        std::size_t pos = dag.topo_position(v);
        if (!first && pos <= prev)
            throw SemanticError("regime interleaving contradicts the graph order at " + v);
        prev = pos;
        first = false;
    }
}

struct PositivityViolation {
    VariableId decision;
    Level forced_level;
    // conditioning assignment: baseline + histories + earlier decisions
    std::vector<std::pair<VariableId, Level>> context;
};

struct PositivityReport {
    std::vector<std::vector<PositivityViolation>> per_step;
    bool pass = true;
};

class PositivityError : public Error {
public:
    explicit PositivityError(PositivityReport r, const std::string& what)
        : Error(what), report(std::move(r)) {}
    PositivityReport report;
};

// For step k and every positive-mass assignment of (baseline + histories
// through k) with earlier decisions at their forced values, the forced level
// of decision k must have positive probability. A symbolic forced value means
// "for every level", both for the decision itself and when it appears as an
// earlier decision in later steps.
template <typename N>
PositivityReport check_positivity(const DiscreteJoint<N>& dist, const RegimeSpec& spec) {
    PositivityReport report;
    report.per_step.resize(spec.steps.size());

    for (std::size_t k = 0; k < spec.steps.size(); ++k) {
        const auto& step = spec.steps[k];
        std::vector<VariableId> context_vars = spec.baseline;
        for (std::size_t j = 0; j <= k; ++j) {
            const auto& h = spec.steps[j].history;
            context_vars.insert(context_vars.end(), h.begin(), h.end());
        }

        std::vector<Level> forced_choices;  // per earlier step, current level
        auto levels_of = [&](std::size_t j) -> std::vector<Level> {
            const auto& s = spec.steps[j];
            if (!s.forced.is_symbol()) return {s.forced.as_level()};
            std::vector<Level> all;
            for (std::size_t l = 0; l < dist.support_size(s.decision); ++l)
                all.push_back(static_cast<Level>(l));
            return all;
        };

        // iterate the product of level choices for steps 0..k
        std::vector<std::vector<Level>> choice_sets;
        for (std::size_t j = 0; j <= k; ++j) choice_sets.push_back(levels_of(j));
        std::vector<std::size_t> cursor(choice_sets.size(), 0);
        while (true) {
            Event earlier;
            for (std::size_t j = 0; j < k; ++j)
                earlier.eq(spec.steps[j].decision, choice_sets[j][cursor[j]]);
            Level forced = choice_sets[k][cursor[k]];

            auto hist_mass = dist.group_mass(context_vars, earlier);
            std::vector<VariableId> with_decision = context_vars;
            with_decision.push_back(step.decision);
            auto cell_mass = dist.group_mass(with_decision, earlier);
            for (const auto& [ctx, mass] : hist_mass) {
                if (mass == NumberTraits<N>::zero()) continue;
                std::vector<Level> key = ctx;
                key.push_back(forced);
                auto it = cell_mass.find(key);
                if (it != cell_mass.end() && it->second != NumberTraits<N>::zero()) continue;
                PositivityViolation v;
                v.decision = step.decision;
                v.forced_level = forced;
                for (std::size_t i = 0; i < context_vars.size(); ++i)
                    v.context.emplace_back(context_vars[i], ctx[i]);
                for (std::size_t j = 0; j < k; ++j)
                    v.context.emplace_back(spec.steps[j].decision, choice_sets[j][cursor[j]]);
                report.per_step[k].push_back(std::move(v));
                report.pass = false;
            }

            bool wrapped = true;
            for (std::size_t j = choice_sets.size(); j-- > 0;) {
                if (++cursor[j] < choice_sets[j].size()) {
                    wrapped = false;
                    break;
                }
                cursor[j] = 0;
            }
            if (wrapped) break;
        }
    }
    return report;
}

namespace detail {

template <typename N>
void require_positivity(const DiscreteJoint<N>& dist, const RegimeSpec& spec) {
    auto report = check_positivity(dist, spec);
    if (!report.pass)
        throw PositivityError(std::move(report),
                              "positivity fails for decision " +
                                  [&] {
                                      for (const auto& step : report.per_step)
                                          if (!step.empty()) return step.front().decision;
                                      return std::string("?");
                                  }());
}

// Iterated conditional expectations, innermost term first:
//   E_x [ sum_h1 f(h1|x,d<1) ... Pr[Y <= y | x, h-bar, d-bar] ]
// with every conditioning event carrying the earlier decisions at their
// forced values. With skip_undefined, strata whose conditioning event has no
// mass contribute zero instead of erroring (the positivity-override mode:
// only the identified region is computed).
template <typename N>
N g_formula_unchecked(const DiscreteJoint<N>& dist, const RegimeSpec& spec, Level y,
                      bool skip_undefined = false) {
    std::function<N(std::size_t, const Event&)> peel = [&](std::size_t k,
                                                           const Event& ctx) -> N {
        if (k == spec.steps.size()) {
            if (skip_undefined && dist.prob(ctx) == NumberTraits<N>::zero())
                return NumberTraits<N>::zero();
            return dist.cond_cdf(spec.outcome, y, ctx);
        }
        const auto& step = spec.steps[k];
        Event with_decision = ctx;
        with_decision.eq(step.decision, step.forced.as_level());
        if (step.history.empty()) return peel(k + 1, with_decision);

        N ctx_mass = dist.prob(ctx);
        if (ctx_mass == NumberTraits<N>::zero()) {
            if (skip_undefined) return NumberTraits<N>::zero();
            throw ZeroConditioningMassError(ctx.text());
        }
        auto blocks = dist.group_mass(step.history, ctx);
        N total = NumberTraits<N>::zero();
        for (const auto& [levels, mass] : blocks) {
            if (mass == NumberTraits<N>::zero()) continue;
            Event extended = with_decision;
            for (std::size_t i = 0; i < step.history.size(); ++i)
                extended.eq(step.history[i], levels[i]);
            total += (mass / ctx_mass) * peel(k + 1, extended);
        }
        return total;
    };

    // outer expectation over the baseline marginal of the full distribution
    auto outer = dist.group_mass(spec.baseline);
    N total = NumberTraits<N>::zero();
    for (const auto& [levels, mass] : outer) {
        if (mass == NumberTraits<N>::zero()) continue;
        Event ctx;
        for (std::size_t i = 0; i < spec.baseline.size(); ++i)
            ctx.eq(spec.baseline[i], levels[i]);
        total += mass * peel(0, ctx);
    }
    return total;
}

// E[ I(Y <= y, all decisions at forced values) / prod_k Pr[D_k = d_k | past] ]
// computed exactly over the full table. Weight factors are tabulated once per
// step over the (baseline + histories-so-far) lattice.
template <typename N>
N ipw_unchecked(const DiscreteJoint<N>& dist, const RegimeSpec& spec, Level y) {
    const std::size_t K = spec.steps.size();
    std::vector<std::vector<VariableId>> key_vars(K);
    std::vector<std::map<std::vector<Level>, N>> weight(K);
    {
        Event decisions_so_far;
        std::vector<VariableId> ctx_vars = spec.baseline;
        for (std::size_t k = 0; k < K; ++k) {
            const auto& step = spec.steps[k];
            ctx_vars.insert(ctx_vars.end(), step.history.begin(), step.history.end());
            key_vars[k] = ctx_vars;
            auto den = dist.group_mass(ctx_vars, decisions_so_far);
            decisions_so_far.eq(step.decision, step.forced.as_level());
            auto num = dist.group_mass(ctx_vars, decisions_so_far);
            for (const auto& [key, d] : den) {
                auto it = num.find(key);
                if (it != num.end() && d != NumberTraits<N>::zero())
                    weight[k].emplace(key, it->second / d);
            }
        }
    }

    std::vector<std::vector<std::size_t>> key_pos(K);
    for (std::size_t k = 0; k < K; ++k)
        for (const auto& v : key_vars[k]) key_pos[k].push_back(dist.position_of(v));
    std::vector<std::size_t> decision_pos;
    std::vector<Level> decision_level;
    for (const auto& s : spec.steps) {
        decision_pos.push_back(dist.position_of(s.decision));
        decision_level.push_back(s.forced.as_level());
    }
    std::size_t outcome_pos = dist.position_of(spec.outcome);

    N total = NumberTraits<N>::zero();
    std::vector<Level> key;
    dist.for_each_cell([&](const std::vector<Level>& levels, const N& mass) {
        if (mass == NumberTraits<N>::zero()) return;
        if (levels[outcome_pos] > y) return;
        for (std::size_t k = 0; k < K; ++k)
            if (levels[decision_pos[k]] != decision_level[k]) return;
        N term = mass;
        for (std::size_t k = 0; k < K; ++k) {
            key.clear();
            for (std::size_t p : key_pos[k]) key.push_back(levels[p]);
            term /= weight[k].at(key);
        }
        total += term;
    });
    return total;
}

}  // namespace detail

template <typename N>
N g_formula(const DiscreteJoint<N>& dist, const RegimeSpec& spec, Level y) {
    if (!spec.concrete()) throw SemanticError("g-formula needs a fully bound regime");
    detail::require_positivity(dist, spec);
    return detail::g_formula_unchecked(dist, spec, y);
}

template <typename N>
N ipw(const DiscreteJoint<N>& dist, const RegimeSpec& spec, Level y) {
    if (!spec.concrete()) throw SemanticError("IPW needs a fully bound regime");
    detail::require_positivity(dist, spec);
    return detail::ipw_unchecked(dist, spec, y);
}

// Exchangeability conditions matched to the identification functional: the
// conditioning set of step k is exactly what the g-formula conditions on
// there (baseline + histories through k + earlier decisions), checked on the
// SWIG with fixed-node blocking.
inline std::vector<IndependenceCondition> derive_conditions(const CausalDag& dag,
                                                            const RegimeSpec& spec) {
    validate_spec(dag, spec);
    Swig swig(dag, spec.regime());
    std::vector<IndependenceCondition> out;
    std::vector<VariableId> given = spec.baseline;
    for (std::size_t k = 0; k < spec.steps.size(); ++k) {
        const auto& step = spec.steps[k];
        given.insert(given.end(), step.history.begin(), step.history.end());
        out.push_back(detail::check_condition(swig, spec.outcome, step.decision, given, {}));
        given.push_back(step.decision);
    }
    return out;
}

struct Preset {
    std::string name;
    CausalDag dag;
    RegimeSpec spec;
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"engagement", "exclusion", "censoring",
                                                "time_varying"};
    return names;
}

// The four study scenarios. Trial engagement keeps U latent as a prognostic
// factor of Y only: with randomization among participants the treatment
// assignment has no unmeasured common cause with the outcome, which is what
// makes the three sequential conditions readable off the SWIG.
inline Preset preset(const std::string& name) {
    auto steps = [](std::initializer_list<SpecStep> l) { return std::vector<SpecStep>(l); };
    if (name == "engagement" || name == "exclusion") {
        std::vector<NodeDecl> nodes{{"X", true}, {"R", true}, {"S", true},
                                    {"Z", true}, {"Y", true}};
        std::vector<Edge> edges{{"X", "R"}, {"X", "S"}, {"X", "Z"}, {"X", "Y"},
                                {"R", "S"}, {"R", "Z"}, {"S", "Z"}, {"Z", "Y"}};
        if (name == "engagement") {
            nodes.push_back({"U", false});
            edges.push_back({"R", "Y"});
            edges.push_back({"S", "Y"});
            edges.push_back({"U", "Y"});
        }
        RegimeSpec spec{{"X"},
                        steps({{"R", RegimeValue::level(1), {}},
                               {"S", RegimeValue::level(1), {}},
                               {"Z", RegimeValue::symbol("z"), {}}}),
                        "Y"};
        return Preset{name, CausalDag(std::move(nodes), std::move(edges)), std::move(spec)};
    }
    if (name == "censoring") {
        std::vector<NodeDecl> nodes{{"X", true}, {"Z", true}, {"C", true}, {"Y", true}};
        std::vector<Edge> edges{{"X", "Z"}, {"X", "C"}, {"X", "Y"}, {"Z", "C"}, {"Z", "Y"}};
        RegimeSpec spec{{"X"},
                        steps({{"Z", RegimeValue::symbol("z"), {}},
                               {"C", RegimeValue::level(0), {}}}),
                        "Y"};
        return Preset{name, CausalDag(std::move(nodes), std::move(edges)), std::move(spec)};
    }
    if (name == "time_varying") {
        // two-period follow-up: assignment Z, adherence decisions A0/A1 with
        // covariates L0/L1 in between, censoring indicators C1/C2; censoring
        // has no edge into Y
        std::vector<VariableId> tv{"L0", "A0", "C1", "L1", "A1", "C2"};
        std::vector<NodeDecl> nodes{{"X", true}, {"R", true}, {"S", true}, {"Z", true}};
        for (const auto& v : tv) nodes.push_back({v, true});
        nodes.push_back({"Y", true});
        std::vector<Edge> edges{{"X", "R"}, {"X", "S"}, {"X", "Z"},
                                {"R", "S"}, {"R", "Z"}, {"S", "Z"}};
        for (std::size_t i = 0; i < tv.size(); ++i) {
            for (const auto& src : {VariableId("X"), VariableId("R"), VariableId("S"),
                                    VariableId("Z")})
                edges.push_back({src, tv[i]});
            for (std::size_t j = 0; j < i; ++j) edges.push_back({tv[j], tv[i]});
        }
        for (const auto& src : {VariableId("X"), VariableId("R"), VariableId("S"),
                                VariableId("Z"), VariableId("L0"), VariableId("A0"),
                                VariableId("L1"), VariableId("A1")})
            edges.push_back({src, "Y"});
        RegimeSpec spec{{"X"},
                        steps({{"R", RegimeValue::level(1), {}},
                               {"S", RegimeValue::level(1), {}},
                               {"Z", RegimeValue::symbol("z"), {}},
                               {"A0", RegimeValue::symbol("a0"), {"L0"}},
                               {"C1", RegimeValue::level(0), {}},
                               {"A1", RegimeValue::symbol("a1"), {"L1"}},
                               {"C2", RegimeValue::level(0), {}}}),
                        "Y"};
        return Preset{name, CausalDag(std::move(nodes), std::move(edges)), std::move(spec)};
    }
    throw UnknownScenarioError(name);
}

template <typename N>
struct ThresholdResult {
    Level y;
    N g_value;
    N ipw_value;
    std::optional<N> oracle;
    N max_abs_diff;
};

template <typename N>
struct IdentReport {
    std::string scenario;
    std::vector<std::string> regime_text;
    std::vector<ThresholdResult<N>> thresholds;
    std::vector<IndependenceCondition> exchangeability;
    PositivityReport positivity;
    bool causal_interpretation = true;
    bool positivity_override_used = false;
};

template <typename N>
nlohmann::json positivity_json(const DiscreteJoint<N>& dist, const RegimeSpec& spec,
                               const PositivityReport& report) {
    nlohmann::json violations = nlohmann::json::array();
    for (std::size_t k = 0; k < report.per_step.size(); ++k) {
        for (const auto& v : report.per_step[k]) {
            nlohmann::json ctx;
            for (const auto& [var, level] : v.context)
                ctx[var] = dist.variable(var).support[level];
            violations.push_back(
                {{"step", v.decision},
                 {"level", dist.variable(v.decision).support[v.forced_level]},
                 {"context", ctx}});
        }
    }
    (void)spec;
    return {{"pass", report.pass}, {"violations", violations}};
}

inline nlohmann::json exchangeability_json(const std::vector<IndependenceCondition>& conds) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : conds) {
        nlohmann::json item{{"condition", c.text()}, {"holds", c.holds}};
        if (c.warning) item["warning"] = *c.warning;
        out.push_back(item);
    }
    return out;
}

template <typename N>
nlohmann::json ident_report_json(const DiscreteJoint<N>& dist, const RegimeSpec& spec,
                                 const IdentReport<N>& r) {
    nlohmann::json thresholds = nlohmann::json::array();
    for (const auto& t : r.thresholds) {
        nlohmann::json item{{"y", dist.variable(spec.outcome).support[t.y]},
                            {"g_formula", NumberTraits<N>::to_text(t.g_value)},
                            {"ipw", NumberTraits<N>::to_text(t.ipw_value)},
                            {"max_abs_diff", NumberTraits<N>::to_text(t.max_abs_diff)}};
        item["oracle"] = t.oracle ? nlohmann::json(NumberTraits<N>::to_text(*t.oracle))
                                  : nlohmann::json(nullptr);
        thresholds.push_back(item);
    }
    nlohmann::json out{{"scenario", r.scenario},
                       {"regime", r.regime_text},
                       {"thresholds", thresholds},
                       {"exchangeability", exchangeability_json(r.exchangeability)},
                       {"positivity", positivity_json(dist, spec, r.positivity)},
                       {"causal_interpretation", r.causal_interpretation}};
    if (r.positivity_override_used)
        out["note"] = "positivity override: partially identified region not computed";
    return out;
}

// Full pipeline: derive and check the exchangeability conditions, check
// positivity, then evaluate both identification routes at each threshold,
// with the truncated-factorization oracle alongside when an SCM is available.
// The two routes are evaluated even when exchangeability fails (the algebraic
// identity needs no causal assumptions); the report is then flagged.
template <typename N>
IdentReport<N> identify(const CausalDag& dag, const DiscreteJoint<N>& dist, const Scm* scm,
                        const RegimeSpec& spec, const std::map<std::string, Level>& bindings,
                        const std::vector<Level>& thresholds,
                        bool override_positivity = false,
                        const std::string& scenario_name = "custom") {
    validate_spec(dag, spec);
    IdentReport<N> report;
    report.scenario = scenario_name;
    report.exchangeability = derive_conditions(dag, spec);
    for (const auto& c : report.exchangeability)
        if (!c.holds) report.causal_interpretation = false;

    report.positivity = check_positivity(dist, spec);
    if (!report.positivity.pass) {
        if (!override_positivity)
            throw PositivityError(report.positivity, "positivity violation blocks evaluation");
        report.positivity_override_used = true;
    }

    RegimeSpec bound = spec.bind(bindings);
    for (const auto& s : bound.steps)
        report.regime_text.push_back(
            s.decision + "=" + dist.variable(s.decision).support[s.forced.as_level()]);

    std::optional<DiscreteJoint<N>> oracle_law;
    if (scm) oracle_law.emplace(scm->template do_law<N>(bound.regime()));

    for (Level y : thresholds) {
        ThresholdResult<N> t;
        t.y = y;
        t.g_value =
            detail::g_formula_unchecked(dist, bound, y, report.positivity_override_used);
        t.ipw_value = detail::ipw_unchecked(dist, bound, y);
        t.max_abs_diff = NumberTraits<N>::abs(t.g_value - t.ipw_value);
        if (oracle_law) {
            t.oracle = oracle_law->prob(Event{}.le(spec.outcome, y));
            auto d1 = NumberTraits<N>::abs(t.g_value - *t.oracle);
            auto d2 = NumberTraits<N>::abs(t.ipw_value - *t.oracle);
            if (d1 > t.max_abs_diff) t.max_abs_diff = d1;
            if (d2 > t.max_abs_diff) t.max_abs_diff = d2;
        }
        report.thresholds.push_back(std::move(t));
    }
    return report;
}

// Plug-in estimator: the g-formula applied to the empirical joint of a
// dataset. A conditioning cell required by the functional but empty in the
// data surfaces as EmptyCellError.
template <typename N>
N plugin_estimate(const Dataset& data, const RegimeSpec& spec, Level y) {
    if (!spec.concrete()) throw SemanticError("plug-in estimate needs a fully bound regime");
    auto empirical = empirical_joint<N>(data);
    auto report = check_positivity(empirical, spec);
    if (!report.pass) {
        for (std::size_t k = 0; k < report.per_step.size(); ++k) {
            if (report.per_step[k].empty()) continue;
            const auto& v = report.per_step[k].front();
            std::string cell;
            for (const auto& [var, level] : v.context)
                cell += var + "=" + empirical.variable(var).support[level] + ", ";
            cell += v.decision + "=" + empirical.variable(v.decision).support[v.forced_level];
            throw EmptyCellError(cell);
        }
    }
    return detail::g_formula_unchecked(empirical, spec, y);
}

}  // namespace swid
