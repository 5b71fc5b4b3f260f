// Regenerates the bundled model files under models/. Each file carries an
// "# expect:" annotation with the exit codes CI asserts for it.

#include <fstream>
#include <iostream>
#include <string>

#include "swid/dsl.hpp"
#include "swid/ident.hpp"

using namespace swid;

namespace {

void write_file(const std::string& dir, const std::string& name, const std::string& expect,
                const std::string& body) {
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write " << dir << "/" << name << "\n";
        std::exit(1);
    }
    out << "# expect: " << expect << "\n" << body;
    std::cout << "wrote " << name << "\n";
}

std::string preset_model(const std::string& name, std::uint64_t seed,
                         std::map<std::string, std::string> binds) {
    auto p = preset(name);
    auto scm = random_scm(p.dag, seed, Rational(1, 10));
    QueryBlock q;
    q.preset_name = name;
    q.bindings = std::move(binds);
    return serialize_model(model_from_scm(scm, q));
}

// Observed joint over (X,R,S,Z,Y) built as a product law with
// Pr[S=1 | X=0, R=1] = 0: the single positivity hole condition (8) is about.
std::string positivity_violation_model() {
    auto p = preset("engagement");
    ModelFile m;
    m.nodes = p.dag.nodes();
    for (const auto& n : m.nodes) m.supports.push_back(binary_variable(n.name));
    m.edges = p.dag.edges();
    DistBlock dist;
    dist.vars = {"X", "R", "S", "Z", "Y"};
    for (int x = 0; x < 2; ++x)
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s)
                for (int z = 0; z < 2; ++z)
                    for (int y = 0; y < 2; ++y) {
                        Rational ps = (x == 0 && r == 1) ? Rational(s == 0 ? 1 : 0)
                                                         : Rational(1, 2);
                        Rational mass = Rational(1, 2) * Rational(1, 2) * ps *
                                        Rational(1, 2) * Rational(1, 2);
                        if (mass != 0)
                            dist.rows.push_back({{x, r, s, z, y}, mass});
                    }
    m.dist = std::move(dist);
    m.query.preset_name = "engagement";
    m.query.bindings["z"] = "1";
    return serialize_model(m);
}

std::string z_only_model(std::uint64_t seed) {
    auto p = preset("engagement");
    auto scm = random_scm(p.dag, seed, Rational(1, 10));
    QueryBlock q;
    q.baseline = {"X"};
    q.steps = {{"Z", RegimeValue::symbol("z"), {}}};
    q.outcome = "Y";
    q.bindings["z"] = "1";
    return serialize_model(model_from_scm(scm, q));
}

}  // namespace

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "models";

    write_file(dir, "engagement.swid", "check=0 identify=0",
               preset_model("engagement", 1, {{"z", "1"}}));
    write_file(dir, "exclusion.swid", "check=0 identify=0",
               preset_model("exclusion", 2, {{"z", "1"}}));
    write_file(dir, "censoring.swid", "check=0 identify=0",
               preset_model("censoring", 3, {{"z", "1"}}));
    write_file(dir, "timevarying.swid", "check=0 identify=0",
               preset_model("time_varying", 4, {{"z", "1"}, {"a0", "1"}, {"a1", "1"}}));
    write_file(dir, "fig1-z-only.swid", "check=5 identify=0", z_only_model(5));
    write_file(dir, "positivity-violation.swid", "check=4 identify=4",
               positivity_violation_model());

    write_file(dir, "tiny-chain.swid", "check=0 identify=0",
               "graph {\n"
               "  node X support { 0 1 }\n"
               "  node Z support { 0 1 }\n"
               "  node Y support { low high }\n"
               "  edge X -> Z\n"
               "  edge X -> Y\n"
               "  edge Z -> Y\n"
               "}\n"
               "dist {\n"
               "  vars { X Z Y }\n"
               "  row 0 0 low : 1/8\n"
               "  row 0 0 high : 1/16\n"
               "  row 0 1 low : 1/16\n"
               "  row 0 1 high : 1/4\n"
               "  row 1 0 low : 1/16\n"
               "  row 1 0 high : 1/8\n"
               "  row 1 1 low : 1/4\n"
               "  row 1 1 high : 1/16\n"
               "}\n"
               "query {\n"
               "  baseline { X }\n"
               "  step Z = 1\n"
               "  outcome Y\n"
               "  thresholds { low }\n"
               "}\n");

    write_file(dir, "bad-cycle.swid", "check=3 identify=3",
               "graph {\n"
               "  node X support { 0 1 }\n"
               "  node Y support { 0 1 }\n"
               "  edge X -> Y\n"
               "  edge Y -> X\n"
               "}\n"
               "query {\n"
               "  baseline { X }\n"
               "  step X = 1\n"
               "  outcome Y\n"
               "}\n");

    write_file(dir, "bad-syntax.swid", "check=2 identify=2",
               "graph {\n"
               "  node X support { 0 1 }\n"
               "  edge X ->\n"
               "}\n");
    return 0;
}
