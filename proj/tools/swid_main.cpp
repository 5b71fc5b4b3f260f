// swid: build SWIGs from causal models, check identifiability conditions,
// and evaluate the g-formula / IPW functionals against an exact SCM oracle.
//
// Exit codes: 0 ok, 2 parse error, 3 semantic/model error, 4 positivity
// failure, 5 exchangeability failure (check in strict mode).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "swid/dsl.hpp"
#include "swid/ident.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitSemantic = 3;
constexpr int kExitPositivity = 4;
constexpr int kExitExchangeability = 5;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw swid::SemanticError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

enum class Backend { Rational, Decimal };

Backend backend_from_env() {
    const char* env = std::getenv("SWID_BACKEND");
    if (!env || std::string(env) == "rational") return Backend::Rational;
    if (std::string(env) == "decimal") return Backend::Decimal;
    throw swid::SemanticError("SWID_BACKEND must be 'rational' or 'decimal'");
}

swid::Regime parse_regime_arg(const swid::ModelFile& m, const std::string& arg) {
    swid::Regime regime;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw swid::SemanticError("regime step '" + item + "' is not VAR=VALUE");
        std::string var = item.substr(0, eq);
        std::string val = item.substr(eq + 1);
        const auto& sup = m.support_of(var).support;
        swid::RegimeValue rv = swid::RegimeValue::symbol(val);
        for (std::size_t i = 0; i < sup.size(); ++i)
            if (sup[i] == val) rv = swid::RegimeValue::level(static_cast<swid::Level>(i));
        regime.steps.push_back({var, rv});
    }
    return regime;
}

int cmd_presets() {
    for (const auto& name : swid::preset_names()) {
        auto p = swid::preset(name);
        std::cout << name << ": " << p.dag.nodes().size() << " nodes, "
                  << p.dag.edges().size() << " edges; steps";
        for (std::size_t k = 0; k < p.spec.steps.size(); ++k) {
            const auto& s = p.spec.steps[k];
            std::cout << (k ? ", " : " ") << s.decision << "=";
            if (s.forced.is_symbol())
                std::cout << s.forced.as_symbol();
            else
                std::cout << s.forced.as_level();
            if (!s.history.empty()) {
                std::cout << " (history";
                for (const auto& h : s.history) std::cout << " " << h;
                std::cout << ")";
            }
        }
        std::cout << "; outcome " << p.spec.outcome << "\n";
    }
    return 0;
}

int cmd_swig(const std::string& path, const std::string& regime_arg) {
    auto m = swid::parse_model(read_file(path));
    swid::CausalDag dag = m.dag();
    swid::Regime regime =
        regime_arg.empty() ? m.spec().regime() : parse_regime_arg(m, regime_arg);
    swid::Swig swig(dag, regime);
    std::cout << swig.to_dot();
    return 0;
}

template <typename N>
int cmd_check(const swid::ModelFile& m, bool strict) {
    swid::CausalDag dag = m.dag();
    swid::RegimeSpec spec = m.spec();
    auto conditions = swid::derive_conditions(dag, spec);
    auto law = m.observed_law<N>();
    auto positivity = swid::check_positivity(law, spec);

    nlohmann::json out{{"exchangeability", swid::exchangeability_json(conditions)},
                       {"positivity", swid::positivity_json(law, spec, positivity)}};
    std::cout << out.dump(2) << "\n";
    if (!positivity.pass) return kExitPositivity;
    for (const auto& c : conditions)
        if (!c.holds) return strict ? kExitExchangeability : 0;
    return 0;
}

template <typename N>
int cmd_identify(const swid::ModelFile& m, const std::string& thresholds_arg,
                 bool allow_positivity) {
    swid::CausalDag dag = m.dag();
    swid::RegimeSpec spec = m.spec();
    auto law = m.observed_law<N>();

    std::vector<swid::Level> thresholds = m.threshold_levels();
    if (!thresholds_arg.empty()) {
        thresholds.clear();
        std::stringstream ss(thresholds_arg);
        std::string item;
        while (std::getline(ss, item, ','))
            thresholds.push_back(law.level_of_label(spec.outcome, item));
    }

    std::optional<swid::Scm> scm;
    if (m.has_scm()) scm.emplace(m.build_scm());

    try {
        auto report = swid::identify<N>(dag, law, scm ? &*scm : nullptr, spec,
                                        m.resolved_bindings(), thresholds, allow_positivity,
                                        m.query.preset_name.value_or("custom"));
        std::cout << swid::ident_report_json(law, spec, report).dump(2) << "\n";
        return 0;
    } catch (const swid::PositivityError& e) {
        nlohmann::json out{{"error", "positivity"},
                           {"positivity", swid::positivity_json(law, spec, e.report)}};
        std::cout << out.dump(2) << "\n";
        return kExitPositivity;
    }
}

template <typename N>
int cmd_simulate(const swid::ModelFile& m, std::size_t n, std::uint64_t seed,
                 const std::string& out_path) {
    if (!m.has_scm()) throw swid::SemanticError("simulate needs an scm block");
    auto scm = m.build_scm();
    auto data = swid::sample(scm, n, seed);

    nlohmann::json out{{"n", n}, {"seed", seed}};
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw swid::SemanticError("cannot write file: " + out_path);
        f << data.to_csv();
        out["out"] = out_path;
    } else {
        out["csv"] = data.to_csv();
    }

    swid::RegimeSpec spec = m.spec().bind(m.resolved_bindings());
    nlohmann::json estimates = nlohmann::json::array();
    for (swid::Level y : m.threshold_levels()) {
        N value = swid::plugin_estimate<N>(data, spec, y);
        estimates.push_back({{"y", m.support_of(spec.outcome).support[y]},
                             {"plugin", swid::NumberTraits<N>::to_text(value)}});
    }
    out["estimates"] = estimates;
    std::cout << out.dump(2) << "\n";
    return 0;
}

template <typename F>
int with_backend(Backend b, F&& fn) {
    if (b == Backend::Rational) return fn(swid::Rational{});
    return fn(swid::Decimal{});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single world intervention graphs and identification functionals"};
    app.require_subcommand(1);

    std::string file, regime_arg, thresholds_arg, out_path;
    bool strict_off = false, allow_positivity = false;
    std::size_t n = 1000;
    std::uint64_t seed = 0;

    app.add_subcommand("presets", "list the built-in scenarios");

    auto* sc_swig = app.add_subcommand("swig", "print the SWIG for a model as DOT");
    sc_swig->add_option("file", file, "model file")->required();
    sc_swig->add_option("--regime", regime_arg, "override regime, e.g. R=1,S=1,Z=z");

    auto* sc_check = app.add_subcommand("check", "check exchangeability and positivity");
    sc_check->add_option("file", file, "model file")->required();
    sc_check->add_flag("--no-strict", strict_off,
                       "exit 0 even when an exchangeability condition fails");

    auto* sc_identify = app.add_subcommand("identify", "evaluate g-formula and IPW");
    sc_identify->add_option("file", file, "model file")->required();
    sc_identify->add_option("--thresholds", thresholds_arg, "comma-separated outcome labels");
    sc_identify->add_flag("--allow-positivity", allow_positivity,
                          "evaluate despite positivity violations");

    auto* sc_simulate = app.add_subcommand("simulate", "draw a dataset and plug-in estimate");
    sc_simulate->add_option("file", file, "model file")->required();
    sc_simulate->add_option("--n", n, "number of rows")->required();
    sc_simulate->add_option("--seed", seed, "sampling seed")->required();
    sc_simulate->add_option("--out", out_path, "write the CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        Backend backend = backend_from_env();
        if (app.got_subcommand("presets")) return cmd_presets();
        if (app.got_subcommand("swig")) return cmd_swig(file, regime_arg);

        auto model = swid::parse_model(read_file(file));
        if (app.got_subcommand("check"))
            return with_backend(backend, [&](auto tag) {
                return cmd_check<decltype(tag)>(model, !strict_off);
            });
        if (app.got_subcommand("identify"))
            return with_backend(backend, [&](auto tag) {
                return cmd_identify<decltype(tag)>(model, thresholds_arg, allow_positivity);
            });
        if (app.got_subcommand("simulate"))
            return with_backend(backend, [&](auto tag) {
                return cmd_simulate<decltype(tag)>(model, n, seed, out_path);
            });
        return 1;
    } catch (const swid::SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const swid::PositivityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPositivity;
    } catch (const swid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSemantic;
    }
}
