// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any fails. Usage: swid_acceptance <models-dir> <cli-path>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "swid/dsl.hpp"
#include "swid/ident.hpp"

using namespace swid;
using swid::testing::dag_from_mask;
using swid::testing::oracle_d_separated;
using swid::testing::random_dag;
using swid::testing::random_positive_joint;

namespace {

std::string g_models_dir;
std::string g_cli;
int g_failures = 0;

void criterion(int number, const std::string& title, const std::function<bool()>& body) {
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    std::string note;
    try {
        ok = body();
    } catch (const std::exception& e) {
        note = std::string(" [exception: ") + e.what() + "]";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << "  criterion " << number << ": " << title << " ("
         << secs << " s)" << note;
    std::cout << line.str() << std::endl;
    if (!ok) ++g_failures;
}

int run_cli(const std::string& args) {
    std::string cmd = g_cli + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RegimeSpec engagement_spec(Level z) {
    return RegimeSpec{{"X"},
                      {{"R", RegimeValue::level(1), {}},
                       {"S", RegimeValue::level(1), {}},
                       {"Z", RegimeValue::level(z), {}}},
                      "Y"};
}

bool criterion1_g_formula_oracle() {
    auto p = preset("engagement");
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
    for (int seed = 0; seed < 100; ++seed) {
        auto scm = random_scm(p.dag, seed, Rational(1, 20));
        auto law = scm.factual_law<Rational>();
        auto law_dec = scm.factual_law<Decimal>();
        for (Level z = 0; z < 2; ++z) {
            auto spec = engagement_spec(z);
            auto oracle = scm.do_law<Rational>(spec.regime());
            auto oracle_dec = scm.do_law<Decimal>(spec.regime());
            for (Level y = 0; y < 2; ++y) {
                if (g_formula(law, spec, y) != oracle.prob(Event{}.le("Y", y))) return false;
                Decimal diff = NumberTraits<Decimal>::abs(
                    g_formula(law_dec, spec, y) - oracle_dec.prob(Event{}.le("Y", y)));
                if (diff > Decimal(1e-10)) return false;
            }
        }
    }
    return std::chrono::steady_clock::now() < deadline;
}

bool criterion2_ipw_identity() {
    std::vector<Variable> vars{binary_variable("X"), binary_variable("R"),
                               binary_variable("S"), binary_variable("Z"),
                               binary_variable("Y")};
    DetRng rng(271828);
    for (int trial = 0; trial < 100; ++trial) {
        auto joint = random_positive_joint(rng, vars);
        for (Level z = 0; z < 2; ++z) {
            auto spec = engagement_spec(z);
            for (Level y = 0; y < 2; ++y)
                if (g_formula(joint, spec, y) != ipw(joint, spec, y)) return false;
        }
    }
    return true;
}

bool criterion3_swig_structure() {
    Regime full{{{"R", RegimeValue::level(1)},
                 {"S", RegimeValue::level(1)},
                 {"Z", RegimeValue::symbol("z")}}};

    auto engagement = preset("engagement");
    Swig s(engagement.dag, full);
    std::map<VariableId, std::string> labels;
    for (const auto& rn : s.random_nodes()) labels[rn.label.base] = rn.label.text();
    if (labels != std::map<VariableId, std::string>{{"X", "X"},
                                                    {"R", "R"},
                                                    {"S", "S^{r=1}"},
                                                    {"Z", "Z^{r=1,s=1}"},
                                                    {"Y", "Y^{r=1,s=1,z}"},
                                                    {"U", "U"}})
        return false;
    std::set<std::tuple<bool, VariableId, VariableId>> edges;
    for (const auto& e : s.edges()) edges.insert({e.from_fixed, e.from, e.to});
    std::set<std::tuple<bool, VariableId, VariableId>> expected{
        {false, "X", "R"}, {false, "X", "S"}, {false, "X", "Z"}, {false, "X", "Y"},
        {true, "R", "S"},  {true, "R", "Z"},  {true, "R", "Y"},  {true, "S", "Z"},
        {true, "S", "Y"},  {true, "Z", "Y"},  {false, "U", "Y"}};
    if (edges != expected) return false;
    std::vector<std::string> fixed;
    for (const auto& fn : s.fixed_nodes())
        fixed.push_back(regime_value_text(fn.variable, fn.value));
    if (fixed != std::vector<std::string>{"r=1", "s=1", "z"}) return false;

    auto exclusion = preset("exclusion");
    Swig t(exclusion.dag, full);
    if (t.label_of("Y").text() != "Y^{z}") return false;
    std::set<std::tuple<bool, VariableId, VariableId>> tedges;
    for (const auto& e : t.edges()) tedges.insert({e.from_fixed, e.from, e.to});
    std::set<std::tuple<bool, VariableId, VariableId>> texpected{
        {false, "X", "R"}, {false, "X", "S"}, {false, "X", "Z"}, {false, "X", "Y"},
        {true, "R", "S"},  {true, "R", "Z"},  {true, "S", "Z"},  {true, "Z", "Y"}};
    return tedges == texpected;
}

bool criterion4_condition_lists() {
    auto en = preset("engagement");
    auto ce = preset("censoring");
    auto tv = preset("time_varying");
    auto c1 = derive_conditions(en.dag, en.spec);
    auto c2 = derive_conditions(ce.dag, ce.spec);
    auto c3 = derive_conditions(tv.dag, tv.spec);
    if (c1.size() != 3 || c2.size() != 2 || c3.size() != 7) return false;
    for (const auto* list : {&c1, &c2, &c3})
        for (const auto& c : *list)
            if (!c.holds) return false;

    // negative control: intervening on treatment alone is not licensed
    RegimeSpec z_only{{"X"}, {{"Z", RegimeValue::symbol("z"), {}}}, "Y"};
    auto neg = derive_conditions(en.dag, z_only);
    bool some_fail = false;
    for (const auto& c : neg) some_fail |= !c.holds;
    if (!some_fail) return false;
    Swig sw(en.dag, z_only.regime());
    if (sw.d_separated({VariableId("Y")}, {VariableId("S")}, std::set<VariableId>{"X"}))
        return false;

    auto scm = random_scm(en.dag, 12, Rational(1, 20));
    auto law = scm.factual_law<Rational>();
    auto report = identify<Rational>(en.dag, law, &scm, z_only, {{"z", 1}}, {0});
    return !report.causal_interpretation;
}

bool criterion5_counterfactual_conditions() {
    auto p = preset("engagement");
    for (int seed = 0; seed < 25; ++seed) {
        auto scm = random_scm(p.dag, 500 + seed, Rational(1, 20));
        for (Level z = 0; z < 2; ++z) {
            Regime reg{{{"R", RegimeValue::level(1)},
                        {"S", RegimeValue::level(1)},
                        {"Z", RegimeValue::level(z)}}};
            auto cj = scm.counterfactual_joint<Rational>(reg);
            Swig sw(p.dag, reg);
            std::string y = sw.label_of("Y").text();
            std::string s = sw.label_of("S").text();
            std::string zl = sw.label_of("Z").text();
            if (!independent_given(cj, {y}, {"R"}, {"X"})) return false;
            if (!independent_given(cj, {y}, {s}, {"X", "R"})) return false;
            if (!independent_given(cj, {y}, {zl}, {"X", "R", s})) return false;
        }
    }
    return true;
}

bool criterion6_censoring() {
    auto p = preset("censoring");
    for (int seed = 0; seed < 50; ++seed) {
        auto scm = random_scm(p.dag, 900 + seed, Rational(1, 20));
        auto law = scm.factual_law<Rational>();
        for (Level z = 0; z < 2; ++z) {
            auto spec = p.spec.bind({{"z", z}});
            auto oracle = scm.do_law<Rational>(spec.regime());
            for (Level y = 0; y < 2; ++y) {
                auto g = g_formula(law, spec, y);
                if (g != ipw(law, spec, y)) return false;
                if (g != oracle.prob(Event{}.le("Y", y))) return false;
            }
        }
    }
    return true;
}

bool criterion7_time_varying() {
    auto p = preset("time_varying");
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(120);
    for (int seed = 0; seed < 25; ++seed) {
        auto scm = random_scm(p.dag, 7000 + seed, Rational(1, 20));
        auto law = scm.factual_law<Rational>();
        auto spec = p.spec.bind({{"z", 1}, {"a0", 1}, {"a1", 1}});
        auto oracle = scm.do_law<Rational>(spec.regime());
        for (Level y = 0; y < 2; ++y) {
            auto g = g_formula(law, spec, y);
            if (g != ipw(law, spec, y)) return false;
            if (g != oracle.prob(Event{}.le("Y", y))) return false;
        }
    }
    return std::chrono::steady_clock::now() < deadline;
}

bool criterion8_positivity_diagnostics() {
    auto m = parse_model(slurp(g_models_dir + "/positivity-violation.swid"));
    auto law = m.observed_law<Rational>();
    auto report = check_positivity(law, m.spec());
    if (report.pass) return false;
    std::size_t total = 0;
    for (const auto& step : report.per_step) total += step.size();
    if (total != 1) return false;
    const auto& v = report.per_step[1].front();
    if (v.decision != "S" || v.forced_level != 1) return false;
    if (v.context != std::vector<std::pair<VariableId, Level>>{{"X", 0}, {"R", 1}})
        return false;
    return run_cli("identify " + g_models_dir + "/positivity-violation.swid") == 4;
}

bool criterion9_dsep_oracle() {
    for (std::size_t n = 2; n <= 5; ++n) {
        const unsigned pairs = n * (n - 1) / 2;
        for (unsigned mask = 0; mask < (1u << pairs); ++mask) {
            auto g = dag_from_mask(n, mask);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) {
                    std::vector<std::size_t> rest;
                    for (std::size_t k = 0; k < n; ++k)
                        if (k != i && k != j) rest.push_back(k);
                    for (unsigned gm = 0; gm < (1u << rest.size()); ++gm) {
                        std::set<VariableId> given;
                        for (std::size_t b = 0; b < rest.size(); ++b)
                            if (gm & (1u << b)) given.insert(g.node(rest[b]).name);
                        std::set<VariableId> a{g.node(i).name}, bset{g.node(j).name};
                        if (d_separated(g, a, bset, given) !=
                            oracle_d_separated(g, a, bset, given))
                            return false;
                    }
                }
        }
    }

    DetRng rng(424242);
    int checked = 0;
    while (checked < 1000) {
        auto g = random_dag(rng, 4 + rng.below(4), 35);
        std::set<VariableId> a, b, given;
        for (const auto& nd : g.nodes()) {
            switch (rng.below(5)) {
                case 0: a.insert(nd.name); break;
                case 1: b.insert(nd.name); break;
                case 2: given.insert(nd.name); break;
                default: break;
            }
        }
        if (a.empty() || b.empty()) continue;
        if (d_separated(g, a, b, given) != oracle_d_separated(g, a, b, given)) return false;
        ++checked;
    }
    return true;
}

bool criterion10_plugin_convergence() {
    auto p = preset("engagement");
    auto scm = random_scm(p.dag, 42, Rational(1, 20));
    auto law = scm.factual_law<Rational>();
    auto spec = engagement_spec(1);
    double exact = rational_to_double(g_formula(law, spec, 0));
    for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        auto data = sample(scm, 100000, seed);
        double est = rational_to_double(plugin_estimate<Rational>(data, spec, 0));
        if (std::abs(est - exact) >= 0.03) return false;
    }
    return true;
}

bool criterion11_parser_round_trip() {
    DetRng rng(616);
    int generated = 0;
    while (generated < 200) {
        auto g = random_dag(rng, 2 + rng.below(4), 45, 15);
        const auto& order = g.topo_order();
        VariableId dec = g.node(order[0]).name;
        VariableId out = g.node(order[order.size() - 1]).name;
        if (dec == out || !g.observed(dec) || !g.observed(out)) continue;
        auto scm = random_scm(g, 9000 + generated, Rational(1, 12));
        QueryBlock q;
        q.steps = {{dec, RegimeValue::level(0), {}}};
        q.outcome = out;
        auto m = model_from_scm(scm, q);
        std::string once = serialize_model(m);
        std::string twice = serialize_model(parse_model(once));
        if (once != twice) return false;
        ++generated;
    }

    // every bundled model produces its annotated exit codes
    for (const auto& name :
         {"engagement", "exclusion", "censoring", "timevarying", "fig1-z-only",
          "positivity-violation", "tiny-chain", "bad-cycle", "bad-syntax"}) {
        std::string path = g_models_dir + "/" + name + ".swid";
        std::string header = slurp(path).substr(0, 200);
        auto at = header.find("# expect:");
        if (at == std::string::npos) return false;
        std::istringstream annotations(header.substr(at + 9, header.find('\n', at) - at - 9));
        std::string item;
        while (annotations >> item) {
            auto eq = item.find('=');
            std::string command = item.substr(0, eq);
            int expected = std::stoi(item.substr(eq + 1));
            int got = run_cli(command + " " + path);
            if (got != expected) {
                std::cerr << "  " << name << ": " << command << " exited " << got
                          << ", expected " << expected << "\n";
                return false;
            }
        }
    }

    // identical invocations must be byte-identical
    std::string model = g_models_dir + "/engagement.swid";
    for (const auto& run : {"/tmp/swid_det_1.json", "/tmp/swid_det_2.json"})
        std::system((g_cli + " identify " + model + " > " + run + " 2>/dev/null").c_str());
    if (slurp("/tmp/swid_det_1.json") != slurp("/tmp/swid_det_2.json")) return false;
    if (slurp("/tmp/swid_det_1.json").empty()) return false;
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: swid_acceptance <models-dir> <cli-path>\n";
        return 2;
    }
    g_models_dir = argv[1];
    g_cli = argv[2];

    criterion(1, "g-formula equals the interventional CDF on 100 engagement models",
              criterion1_g_formula_oracle);
    criterion(2, "IPW equals the g-formula on 100 arbitrary positive joints",
              criterion2_ipw_identity);
    criterion(3, "joint-intervention SWIGs match their hand-encoded structures",
              criterion3_swig_structure);
    criterion(4, "condition lists are 3/2/7 and the treatment-only regime fails",
              criterion4_condition_lists);
    criterion(5, "sequential conditions hold exactly in 25 dual-world laws",
              criterion5_counterfactual_conditions);
    criterion(6, "censoring scenario: three-way agreement on 50 models",
              criterion6_censoring);
    criterion(7, "time-varying scenario: three-way agreement on 25 eleven-variable models",
              criterion7_time_varying);
    criterion(8, "positivity report names the violating cell and identify exits 4",
              criterion8_positivity_diagnostics);
    criterion(9, "d-separation matches path enumeration (exhaustive to 5 nodes, 1000 random)",
              criterion9_dsep_oracle);
    criterion(10, "plug-in estimates land within 0.03 of the exact value",
              criterion10_plugin_convergence);
    criterion(11, "parser round-trips 200 models; bundled files hit their exit codes",
              criterion11_parser_round_trip);

    if (g_failures) {
        std::cout << g_failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
