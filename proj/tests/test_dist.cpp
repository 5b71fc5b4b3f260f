#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "swid/dist.hpp"

using namespace swid;
using swid::testing::random_positive_joint;

namespace {

DiscreteJoint<Rational> fair_coin() {
    return DiscreteJoint<Rational>({binary_variable("V")}, {Rational(1, 2), Rational(1, 2)});
}

DiscreteJoint<Rational> two_fair_coins() {
    return DiscreteJoint<Rational>({binary_variable("A"), binary_variable("B")},
                                   std::vector<Rational>(4, Rational(1, 4)));
}

// row-enumeration oracle: keep the sparse row list and sum it directly
struct SparseModel {
    std::vector<Variable> vars;
    std::vector<std::pair<std::vector<Level>, Rational>> rows;

    Rational oracle_prob(const Event& e) const {
        Rational total = 0;
        for (const auto& [levels, p] : rows) {
            bool ok = true;
            for (const auto& atom : e.atoms) {
                std::size_t pos = 0;
                while (vars[pos].name != atom.var) ++pos;
                Level have = levels[pos];
                if (atom.op == AtomOp::Eq ? have != atom.level : have > atom.level) ok = false;
            }
            if (ok) total += p;
        }
        return total;
    }
};

SparseModel random_sparse(DetRng& rng, std::size_t nvars) {
    SparseModel m;
    for (std::size_t i = 0; i < nvars; ++i) {
        Variable v{"V" + std::to_string(i), {}};
        std::size_t q = 2 + rng.below(2);
        for (std::size_t l = 0; l < q; ++l) v.support.push_back(std::to_string(l));
        m.vars.push_back(std::move(v));
    }
    std::size_t cells = 1;
    for (const auto& v : m.vars) cells *= v.support.size();
    std::vector<std::uint64_t> ticks(cells);
    std::uint64_t total = 0;
    for (auto& t : ticks) {
        t = rng.below(6);  // allows zero-mass cells
        total += t;
    }
    if (total == 0) {
        ticks[0] = 1;
        total = 1;
    }
    std::vector<Level> key(nvars, 0);
    for (std::size_t at = 0; at < cells; ++at) {
        if (ticks[at])
            m.rows.emplace_back(key, Rational(BigInt(ticks[at]), BigInt(total)));
        for (std::size_t i = nvars; i-- > 0;) {
            if (static_cast<std::size_t>(++key[i]) <
                m.vars[i].support.size())
                break;
            key[i] = 0;
        }
    }
    return m;
}

Event random_event(DetRng& rng, const std::vector<Variable>& vars) {
    Event e;
    for (const auto& v : vars) {
        switch (rng.below(4)) {
            case 0:
                e.eq(v.name, static_cast<Level>(rng.below(v.support.size())));
                break;
            case 1:
                e.le(v.name, static_cast<Level>(rng.below(v.support.size())));
                break;
            default:
                break;
        }
    }
    return e;
}

}  // namespace

TEST_CASE("event probabilities") {
    auto d = fair_coin();
    REQUIRE(d.prob(Event{}.eq("V", 1)) == Rational(1, 2));
    REQUIRE(d.prob(Event{}) == 1);
    REQUIRE_THROWS_AS(d.prob(Event{}.eq("W", 0)), UnknownVariableError);
    REQUIRE_THROWS_AS(Event{}.eq("V", 0).eq("V", 1), DistributionError);
}

TEST_CASE("probabilities match the row-enumeration oracle") {
    DetRng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        auto m = random_sparse(rng, 3);
        auto d = DiscreteJoint<Rational>::from_rows(m.vars, m.rows);
        for (int q = 0; q < 6; ++q) {
            Event e = random_event(rng, m.vars);
            REQUIRE(d.prob(e) == m.oracle_prob(e));
        }
    }
}

TEST_CASE("conditionals: independence, functional dependence, oracle ratio") {
    auto d = two_fair_coins();
    REQUIRE(d.conditional(Event{}.eq("A", 1), Event{}.eq("B", 1)) == Rational(1, 2));

    auto copy = DiscreteJoint<Rational>::from_rows(
        {binary_variable("A"), binary_variable("B")},
        {{{0, 0}, Rational(1, 2)}, {{1, 1}, Rational(1, 2)}});
    REQUIRE(copy.conditional(Event{}.eq("B", 1), Event{}.eq("A", 1)) == 1);

    DetRng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto m = random_sparse(rng, 3);
        auto d2 = DiscreteJoint<Rational>::from_rows(m.vars, m.rows);
        Event e = random_event(rng, m.vars);
        Event g = random_event(rng, m.vars);
        bool compatible = true;
        for (const auto& ae : e.atoms)
            for (const auto& ag : g.atoms)
                if (ae.var == ag.var) compatible = false;
        if (!compatible) continue;
        Rational base = m.oracle_prob(g);
        if (base == 0) {
            REQUIRE_THROWS_AS(d2.conditional(e, g), ZeroConditioningMassError);
        } else {
            REQUIRE(d2.conditional(e, g) == m.oracle_prob(e.and_also(g)) / base);
        }
    }
}

TEST_CASE("conditional CDF endpoints") {
    auto d = two_fair_coins();
    REQUIRE(d.cond_cdf("A", 1, Event{}.eq("B", 0)) == 1);

    auto tilted = DiscreteJoint<Rational>::from_rows(
        {binary_variable("A"), binary_variable("B")},
        {{{0, 0}, Rational(1, 8)}, {{0, 1}, Rational(3, 8)},
         {{1, 0}, Rational(3, 8)}, {{1, 1}, Rational(1, 8)}});
    // P(B=1 | A=0) = 3/4, so the CDF at 0 is the complement
    REQUIRE(tilted.cond_cdf("B", 0, Event{}.eq("A", 0)) == Rational(1, 4));
}

TEST_CASE("expect_over: constants and the law of total probability") {
    auto d = two_fair_coins();
    auto c = d.expect_over({"A"}, [](const std::vector<Level>&) { return Rational(7, 3); });
    REQUIRE(c == Rational(7, 3));

    Event e = Event{}.eq("A", 1).eq("B", 0);
    auto lhs = d.expect_over({"A", "B"}, [&](const std::vector<Level>& levels) {
        return Rational(levels[0] == 1 && levels[1] == 0 ? 1 : 0);
    });
    REQUIRE(lhs == d.prob(e));
}

TEST_CASE("expect_over annotates inner errors with the offending assignment") {
    auto d = two_fair_coins();
    try {
        d.expect_over({"A"}, [&](const std::vector<Level>& levels) -> Rational {
            if (levels[0] == 1) throw ZeroConditioningMassError("inner");
            return Rational(0);
        });
        FAIL("expected annotated error");
    } catch (const Error& e) {
        REQUIRE(std::string(e.what()).find("A=1") != std::string::npos);
    }
}

TEST_CASE("prob is additive and monotone under atom weakening") {
    DetRng rng(12);
    for (int trial = 0; trial < 25; ++trial) {
        auto m = random_sparse(rng, 3);
        auto d = DiscreteJoint<Rational>::from_rows(m.vars, m.rows);
        const auto& v = m.vars[0];
        Rational sum = 0;
        for (std::size_t l = 0; l < v.support.size(); ++l)
            sum += d.prob(Event{}.eq(v.name, static_cast<Level>(l)));
        REQUIRE(sum == 1);
        for (std::size_t l = 0; l + 1 < v.support.size(); ++l) {
            REQUIRE(d.prob(Event{}.le(v.name, static_cast<Level>(l))) <=
                    d.prob(Event{}.le(v.name, static_cast<Level>(l + 1))));
        }
    }
}

TEST_CASE("conditional(.|given) is a probability measure") {
    DetRng rng(13);
    auto m = random_sparse(rng, 3);
    auto d = DiscreteJoint<Rational>::from_rows(m.vars, m.rows);
    Event g = Event{}.eq(m.vars[2].name, 0);
    if (m.oracle_prob(g) != 0) {
        Rational sum = 0;
        for (std::size_t l = 0; l < m.vars[0].support.size(); ++l)
            sum += d.conditional(Event{}.eq(m.vars[0].name, static_cast<Level>(l)), g);
        REQUIRE(sum == 1);
    }
}

TEST_CASE("decimal backend tracks the rational backend to 1e-12") {
    DetRng rng(14);
    for (int trial = 0; trial < 10; ++trial) {
        auto m = random_sparse(rng, 3);
        auto dr = DiscreteJoint<Rational>::from_rows(m.vars, m.rows);
        std::vector<std::pair<std::vector<Level>, Decimal>> drows;
        for (const auto& [levels, p] : m.rows)
            drows.emplace_back(levels, NumberTraits<Decimal>::from_rational(p));
        auto dd = DiscreteJoint<Decimal>::from_rows(m.vars, drows);
        for (int q = 0; q < 5; ++q) {
            Event e = random_event(rng, m.vars);
            Decimal expected = NumberTraits<Decimal>::from_rational(dr.prob(e));
            REQUIRE(NumberTraits<Decimal>::abs(dd.prob(e) - expected) < Decimal(1e-12));
        }
    }
}

TEST_CASE("CSV and JSON round-trips are bit-exact for rationals") {
    DetRng rng(15);
    auto m = random_sparse(rng, 3);
    auto d = DiscreteJoint<Rational>::from_rows(m.vars, m.rows);

    auto j = d.to_json();
    auto back = DiscreteJoint<Rational>::from_json(j);
    REQUIRE(back.to_json() == j);
    REQUIRE(back.to_csv() == d.to_csv());

    auto csv = d.to_csv();
    REQUIRE(csv.rfind("V0,V1,V2,prob\n", 0) == 0);
    REQUIRE(csv.find("/") != std::string::npos);  // rationals rendered num/den
}

TEST_CASE("table construction guards") {
    REQUIRE_THROWS_AS(DiscreteJoint<Rational>({binary_variable("A")},
                                              {Rational(1, 2), Rational(1, 3)}),
                      DistributionError);
    REQUIRE_THROWS_AS(DiscreteJoint<Rational>({binary_variable("A")}, {Rational(1)}),
                      DistributionError);
    REQUIRE_THROWS_AS(DiscreteJoint<Rational>({Variable{"A", {}}}, {}), DistributionError);

    // 25 binary variables exceed the 2^24 cell cap before any allocation
    std::vector<Variable> big;
    for (int i = 0; i < 25; ++i) big.push_back(binary_variable("V" + std::to_string(i)));
    REQUIRE_THROWS_AS(DiscreteJoint<Rational>::from_rows(big, {}), SizeLimitError);
}

TEST_CASE("group_mass equals per-assignment probabilities") {
    DetRng rng(16);
    auto m = random_sparse(rng, 4);
    auto d = DiscreteJoint<Rational>::from_rows(m.vars, m.rows);
    auto groups = d.group_mass({m.vars[1].name, m.vars[3].name});
    Rational seen = 0;
    for (const auto& [key, mass] : groups) {
        Event e;
        e.eq(m.vars[1].name, key[0]).eq(m.vars[3].name, key[1]);
        REQUIRE(mass == d.prob(e));
        seen += mass;
    }
    REQUIRE(seen == 1);
}

TEST_CASE("exact independence check by factorization") {
    auto ind = two_fair_coins();
    REQUIRE(independent_given(ind, {"A"}, {"B"}, {}));
    auto copy = DiscreteJoint<Rational>::from_rows(
        {binary_variable("A"), binary_variable("B")},
        {{{0, 0}, Rational(1, 2)}, {{1, 1}, Rational(1, 2)}});
    REQUIRE_FALSE(independent_given(copy, {"A"}, {"B"}, {}));
}
