#include "doctest.h"

#include "certbench/errors.hpp"
#include "certbench/pmdp.hpp"
#include "certbench/scenario.hpp"

#include <algorithm>
#include <random>
#include <sstream>

using namespace certbench;

namespace {

Rational q(long n, long d = 1) {
    Rational r(n, d);
    r.canonicalize();
    return r;
}

ParameterRegion unit2() { return ParameterRegion{{"p1", {0, 1}}, {"p2", {0, 1}}}; }

bool has(const ValidationReport& r, Finding::Kind k) {
    return std::any_of(r.begin(), r.end(), [&](const Finding& f) { return f.kind == k; });
}

/// 4 states: state 0 branches with [p1(1-p2), p1 p2, 1-p1]; states 1..3 self-loop.
PMDP three_way() {
    PmdpBuilder b(4);
    auto e = [&](const char* t) { return b.intern(ParamExpr::parse(t)); };
    b.add_choice(0, "go", {{1, e("p1*(1-p2)")}, {2, e("p1*p2")}, {3, e("1-p1")}});
    for (StateIndex s = 1; s < 4; ++s) b.add_choice(s, "wait", {{s, e("1")}});
    b.add_label("goal", 2);
    b.add_label("crash", 3);
    b.set_region(unit2());
    return std::move(b).build();
}

GridScenario open3() {
    GridScenario s;
    s.width = s.height = 3;
    s.robot_start = {2, 2};
    s.goal = {2, 0};
    return s;
}

}  // namespace

TEST_CASE("validate accepts the open scenario model") {
    CHECK(validate(build_open(GridScenario{})).empty());
    CHECK(validate(build_open(open3())).empty());
}

TEST_CASE("validate reports a deadlock") {
    PmdpBuilder b(2);
    b.add_choice(0, "go", {{1, b.intern(ParamExpr::constant(1))}});
    b.add_label("goal", 1);
    auto report = validate(std::move(b).build());
    REQUIRE(report.size() == 1);
    CHECK(report[0].kind == Finding::Kind::Deadlock);
    CHECK(report[0].state == 1);
}

TEST_CASE("validate reports a non-unit row") {
    PmdpBuilder b(2);
    b.add_choice(0, "go", {{0, b.intern(ParamExpr::parse("p1"))}, {1, b.intern(ParamExpr::parse("1-2*p1"))}});
    b.add_choice(1, "wait", {{1, b.intern(ParamExpr::constant(1))}});
    b.add_label("goal", 1);
    b.set_region(ParameterRegion{{"p1", {0, 1}}});
    auto report = validate(std::move(b).build());
    CHECK(has(report, Finding::Kind::NonUnitSum));
}

TEST_CASE("validate reports structural problems") {
    PmdpBuilder b(2);
    auto one = b.intern(ParamExpr::constant(1));
    b.add_choice(0, "go", {{7, one}});
    b.add_choice(1, "wait", {{0, b.intern(ParamExpr::parse("p1*p1"))}, {1, b.intern(ParamExpr::parse("1 - p1*p1"))}});
    b.add_label("goal", 1);
    b.add_label("crash", 1);
    b.set_initial(5);
    b.set_region(ParameterRegion{{"p1", {0, 1}}});
    auto report = validate(std::move(b).build());
    CHECK(has(report, Finding::Kind::StateOutOfRange));
    CHECK(has(report, Finding::Kind::InitialOutOfRange));
    CHECK(has(report, Finding::Kind::NotMultiAffine));
    CHECK(has(report, Finding::Kind::LabelOverlap));

    PmdpBuilder odd(1);
    odd.add_choice(0, "odd", {{0, odd.intern(ParamExpr::parse("q + 1 - q"))}});
    odd.add_label("goal", 0);
    odd.set_region(ParameterRegion{{"p1", {0, 1}}});
    CHECK(has(validate(std::move(odd).build()), Finding::Kind::UnboundParameter));

    PmdpBuilder nogoal(1);
    nogoal.add_choice(0, "wait", {{0, nogoal.intern(ParamExpr::constant(1))}});
    CHECK(has(validate(std::move(nogoal).build()), Finding::Kind::MissingGoalLabel));

    PmdpBuilder neg(2);
    neg.add_choice(0, "go", {{0, neg.intern(ParamExpr::parse("2*p1 - 1/2"))}, {1, neg.intern(ParamExpr::parse("3/2 - 2*p1"))}});
    neg.add_choice(1, "wait", {{1, neg.intern(ParamExpr::constant(1))}});
    neg.add_label("goal", 1);
    neg.set_region(ParameterRegion{{"p1", {0, 1}}});
    CHECK(has(validate(std::move(neg).build()), Finding::Kind::NegativeAtCorner));
}

TEST_CASE("builder merges edges that share a target") {
    PmdpBuilder b(2);
    b.add_choice(0, "go", {{1, b.intern(ParamExpr::parse("p1"))}, {1, b.intern(ParamExpr::parse("1-p1"))}});
    b.add_choice(1, "wait", {{1, b.intern(ParamExpr::constant(1))}});
    b.add_label("goal", 1);
    b.set_region(ParameterRegion{{"p1", {0, 1}}});
    PMDP m = std::move(b).build();
    REQUIRE(m.choices(0)[0].edges.size() == 1);
    CHECK(validate(m).empty());
    auto c = instantiate(m, Valuation{{"p1", q(1, 3)}});
    REQUIRE(c.edges(0, 0).size() == 1);
    CHECK(c.edges(0, 0)[0].probability == 1.0);
}

TEST_CASE("instantiate drops degenerate edges") {
    PmdpBuilder b(3);
    b.add_choice(0, "go", {{1, b.intern(ParamExpr::parse("p1"))}, {2, b.intern(ParamExpr::parse("1-p1"))}});
    b.add_choice(1, "wait", {{1, b.intern(ParamExpr::constant(1))}});
    b.add_choice(2, "wait", {{2, b.intern(ParamExpr::constant(1))}});
    b.add_label("goal", 2);
    b.set_region(ParameterRegion{{"p1", {0, 1}}});
    auto c = instantiate(std::move(b).build(), Valuation{{"p1", 0}});
    REQUIRE(c.edges(0, 0).size() == 1);
    CHECK(c.edges(0, 0)[0] == Edge{2, 1.0});
}

TEST_CASE("instantiate the three-way row") {
    auto c = instantiate(three_way(), Valuation{{"p1", q(1, 10)}, {"p2", q(2, 5)}});
    auto row = c.edges(0, 0);
    REQUIRE(row.size() == 3);
    CHECK(row[0] == Edge{1, 0.06});
    CHECK(row[1] == Edge{2, 0.04});
    CHECK(row[2] == Edge{3, 0.9});
}

TEST_CASE("instantiate rejects bad valuations") {
    CHECK_THROWS_AS(instantiate(three_way(), Valuation{{"p1", q(1, 10)}}), MissingParameter);
    CHECK_THROWS_AS(instantiate(three_way(), Valuation{{"p1", q(11, 10)}, {"p2", 0}}), ValuationOutOfRegion);
    PMDP narrow = [] {
        PmdpBuilder b(1);
        b.add_choice(0, "wait", {{0, b.intern(ParamExpr::parse("p1 + 1 - p1"))}});
        b.add_label("goal", 0);
        b.set_region(ParameterRegion{{"p1", {0, q(3, 20)}}});
        return std::move(b).build();
    }();
    CHECK_NOTHROW(instantiate(narrow, Valuation{{"p1", q(3, 20)}}));
    CHECK_THROWS_AS(instantiate(narrow, Valuation{{"p1", q(16, 100)}}), ValuationOutOfRegion);
}

TEST_CASE("open model rows sum to one at the nominal point") {
    PMDP m = build_open(GridScenario{});
    auto c = instantiate(m, Valuation{{"p1", q(1, 10)}, {"p2", q(2, 5)}});
    for (StateIndex s = 0; s < c.state_count(); ++s) {
        for (ActionIndex a = 0; a < c.action_count(s); ++a) {
            double sum = 0;
            for (const auto& e : c.edges(s, a)) sum += e.probability;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("property: instantiation preserves structure and is deterministic") {
    PMDP m = build_open(open3());
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<long> k(0, 1000);
    for (int i = 0; i < 100; ++i) {
        Valuation v{{"p1", q(k(rng), 1000)}, {"p2", q(k(rng), 1000)}};
        auto c = instantiate(m, v);
        REQUIRE(c.state_count() == m.state_count());
        CHECK(c.initial() == m.initial());
        for (const auto& [name, states] : m.labels()) {
            CHECK(c.label(name).members() == states);
        }
        for (StateIndex s = 0; s < c.state_count(); ++s) {
            REQUIRE(c.action_count(s) == m.choices(s).size());
            for (ActionIndex a = 0; a < c.action_count(s); ++a) {
                CHECK(c.action_name(s, a) == m.choices(s)[a].action);
                CHECK(c.edges(s, a).size() <= m.choices(s)[a].edges.size());
                double sum = 0;
                for (const auto& e : c.edges(s, a)) {
                    CHECK(e.probability > 0.0);
                    CHECK(e.probability <= 1.0);
                    sum += e.probability;
                }
                CHECK(std::abs(sum - 1.0) <= 1e-9);
            }
        }
        CHECK(instantiate(m, v) == c);
    }
}

TEST_CASE("labels are queried by name") {
    PMDP m = three_way();
    CHECK(m.label("goal") == std::vector<StateIndex>{2});
    CHECK_THROWS_AS(m.label("nope"), UnknownLabel);
    auto c = instantiate(m, Valuation{{"p1", q(1, 2)}, {"p2", q(1, 2)}});
    CHECK(c.label("crash").members() == std::vector<StateIndex>{3});
    CHECK_THROWS_AS(c.label("nope"), UnknownLabel);
}

TEST_CASE("write_model dumps transitions and labels") {
    std::ostringstream sym, num;
    write_model(sym, three_way());
    write_model(num, instantiate(three_way(), Valuation{{"p1", q(1, 10)}, {"p2", q(2, 5)}}));
    CHECK(sym.str().find("#labels") != std::string::npos);
    CHECK(sym.str().find("0 0 2 ") != std::string::npos);
    CHECK(num.str().find("0 0 2 0.04\n") != std::string::npos);
    CHECK(num.str().find("crash: 3\n") != std::string::npos);
}

TEST_CASE("StateSet algebra") {
    StateSet a(5), b(5);
    a.insert(1);
    a.insert(3);
    b.insert(3);
    b.insert(4);
    CHECK((a & b).members() == std::vector<StateIndex>{3});
    CHECK((a | b).count() == 3);
    CHECK(a.complement().members() == std::vector<StateIndex>{0, 2, 4});
    CHECK_FALSE(a.empty());
    CHECK(StateSet(3).empty());
}
