#include "doctest.h"

#include "convert.hpp"
#include "goldens.hpp"
#include "oracle.hpp"

#include "certbench/config.hpp"
#include "certbench/errors.hpp"
#include "certbench/scenario.hpp"
#include "certbench/sweep.hpp"

#include <filesystem>
#include <sstream>

using namespace certbench;
using testing_support::q;

namespace {

const std::filesystem::path kConfigs = CERTBENCH_CONFIG_DIR;

GridScenario rooftop5() {
    GridScenario s;
    s.context = ContextKind::Rooftop;
    s.rooftops = {{0, 0}, {1, 2}, {3, 2}, {3, 0}};
    s.rooftop_edges = {{{0, 0}, {1, 2}}, {{1, 2}, {3, 2}}, {{3, 2}, {3, 0}}};
    return s;
}

SweepSpec grid(unsigned points, ParameterRegion region) {
    SweepSpec spec;
    spec.mode = GridSampling{points};
    spec.region = std::move(region);
    return spec;
}

}  // namespace

TEST_CASE("grid of two points yields the endpoints") {
    auto spec = grid(2, ParameterRegion{{"p1", {0, 1}}, {"p2", {q(2, 5), q(2, 5)}}});
    auto vs = sample_valuations(spec);
    REQUIRE(vs.size() == 2);
    CHECK(vs[0] == Valuation{{"p1", 0}, {"p2", q(2, 5)}});
    CHECK(vs[1] == Valuation{{"p1", 1}, {"p2", q(2, 5)}});
}

TEST_CASE("grid sample count is points to the free dimensions") {
    for (unsigned points : {1u, 2u, 3u, 7u}) {
        CHECK(sample_valuations(grid(points, default_region())).size() == points * points);
        CHECK(sample_valuations(grid(points, ParameterRegion{{"p1", {0, 1}}, {"p2", {0, 0}}})).size() == points);
    }
    auto vs = sample_valuations(grid(10, default_region()));
    CHECK(vs.front() == Valuation{{"p1", 0}, {"p2", 0}});
    CHECK(vs.back() == Valuation{{"p1", 1}, {"p2", 1}});
}

TEST_CASE("random sampling is deterministic in the seed and stays in the region") {
    SweepSpec spec;
    spec.mode = RandomSampling{100, 7};
    spec.region = ParameterRegion{{"p1", {0, q(3, 20)}}, {"p2", {q(1, 20), 1}}};
    auto a = sample_valuations(spec);
    CHECK(a == sample_valuations(spec));
    CHECK(a.size() == 100);
    for (const auto& v : a) CHECK(spec.region.contains(v));
    spec.mode = RandomSampling{100, 8};
    CHECK(a != sample_valuations(spec));

    PMDP m = build_open(GridScenario{});
    spec.mode = RandomSampling{20, 7};
    CHECK(to_csv(run_sweep(m, UntilProperty{}, spec)) == to_csv(run_sweep(m, UntilProperty{}, spec)));
}

TEST_CASE("tied sampling copies one value to every tied parameter") {
    SweepSpec spec;
    spec.mode = TiedSampling{{"p1", "p2"}, {q(1, 20), q(19, 20)}, 25, std::nullopt};
    spec.region = ParameterRegion{{"p1", {q(1, 20), q(19, 20)}}, {"p2", {q(1, 20), q(19, 20)}}};
    auto vs = sample_valuations(spec);
    REQUIRE(vs.size() == 25);
    for (const auto& v : vs) CHECK(v.at("p1") == v.at("p2"));
    CHECK(vs.front().at("p1") == q(1, 20));
    CHECK(vs.back().at("p1") == q(19, 20));
    CHECK(sweep_columns(spec) == std::vector<std::vector<ParameterId>>{{"p1", "p2"}});

    auto r = run_sweep(build_rooftop(rooftop5()), UntilProperty{}, spec);
    CHECK(r.records.size() == 25);
    CHECK(r.min >= 1.0 - 1e-4);
}

TEST_CASE("invalid sweeps are rejected") {
    SweepSpec spec;
    spec.mode = TiedSampling{{"p1", "p2"}, {0, 1}, 10, std::nullopt};
    spec.region = ParameterRegion{{"p1", {0, 1}}, {"p2", {0, 1}}};
    CHECK_NOTHROW(spec.validate());
    spec.mode = TiedSampling{{"p1"}, {0, 1}, 10, std::nullopt};
    CHECK_THROWS_AS(spec.validate(), InvalidSweep);
    spec.mode = GridSampling{0};
    CHECK_THROWS_AS(spec.validate(), InvalidSweep);
    spec.mode = RandomSampling{0, 1};
    CHECK_THROWS_AS(spec.validate(), InvalidSweep);
    spec.mode = GridSampling{3};
    spec.region = ParameterRegion{};
    CHECK_THROWS_AS(spec.validate(), InvalidSweep);

    PMDP m = build_open(GridScenario{}, ParameterRegion{{"p1", {0, q(1, 2)}}, {"p2", {0, 1}}});
    CHECK_THROWS_AS(run_sweep(m, UntilProperty{}, grid(2, default_region())), InvalidSweep);
    CHECK_THROWS_AS(run_sweep(m, UntilProperty{}, grid(2, ParameterRegion{{"p1", {0, q(1, 2)}}})), InvalidSweep);
}

TEST_CASE("summaries agree with the records") {
    PMDP m = build_open(GridScenario{});
    auto r = run_sweep(m, UntilProperty{}, grid(4, default_region()));
    for (const auto& rec : r.records) {
        CHECK(rec.value >= 0.0);
        CHECK(rec.value <= 1.0);
        CHECK(r.min <= rec.value);
        CHECK(r.max >= rec.value);
    }
    CHECK(r.records[r.argmin].value == r.min);
    CHECK(r.records[r.argmax].value == r.max);
    auto copy = r;
    copy.summarize();
    CHECK(copy.argmin == r.argmin);
    CHECK(copy.argmax == r.argmax);
    auto j = summary_json(r);
    CHECK(j["samples"] == 16);
    CHECK(j["min"].get<double>() == r.min);
}

TEST_CASE("fixed policy never beats the optimum") {
    PMDP m = build_open(GridScenario{});
    const double eps = SolverConfig{}.epsilon;
    Valuation nominal{{"p1", q(1, 10)}, {"p2", q(2, 5)}};
    auto nominal_check = max_until(instantiate(m, nominal), UntilProperty{});

    auto spec = grid(5, default_region());
    auto optimal = run_sweep(m, UntilProperty{}, spec);
    auto fixed = evaluate_fixed_policy_sweep(m, nominal_check.policy, UntilProperty{}, spec);
    REQUIRE(fixed.records.size() == optimal.records.size());
    for (std::size_t i = 0; i < fixed.records.size(); ++i) {
        CHECK(fixed.records[i].valuation == optimal.records[i].valuation);
        CHECK(fixed.records[i].value <= optimal.records[i].value + 2 * eps);
    }
    CHECK(fixed.min <= optimal.min + 2 * eps);

    auto single = grid(1, ParameterRegion{{"p1", {q(1, 10), q(1, 10)}}, {"p2", {q(2, 5), q(2, 5)}}});
    auto self = evaluate_fixed_policy_sweep(m, nominal_check.policy, UntilProperty{}, single);
    REQUIRE(self.records.size() == 1);
    CHECK(std::abs(self.records[0].value - nominal_check.value_at_initial) <= 2 * eps);

    CHECK_THROWS_AS(evaluate_fixed_policy_sweep(m, Policy(3), UntilProperty{}, spec), PolicyIncomplete);
}

TEST_CASE("thread count does not change the result") {
    PMDP m = build_open(GridScenario{});
    SweepSpec spec;
    spec.mode = RandomSampling{24, 3};
    spec.region = default_region();
    spec.threads = 1;
    auto one = to_csv(run_sweep(m, UntilProperty{}, spec));
    spec.threads = 4;
    CHECK(to_csv(run_sweep(m, UntilProperty{}, spec)) == one);
}

TEST_CASE("non-convergence names the valuation") {
    PMDP m = build_open(GridScenario{});
    auto spec = grid(1, ParameterRegion{{"p1", {q(1, 10), q(1, 10)}}, {"p2", {q(2, 5), q(2, 5)}}});
    spec.solver.max_iterations = 2;
    try {
        run_sweep(m, UntilProperty{}, spec);
        FAIL("expected SweepNonConvergence");
    } catch (const SweepNonConvergence& e) {
        CHECK(e.valuation() == Valuation{{"p1", q(1, 10)}, {"p2", q(2, 5)}});
    }
}

TEST_CASE("CSV format and round trip") {
    SweepResult tied;
    tied.columns = {{"p1", "p2"}};
    tied.records = {{Valuation{{"p1", q(3, 10)}, {"p2", q(3, 10)}}, 0.95, 0, 0.0}};
    tied.summarize();
    CHECK(to_csv(tied) == "p1=p2,value\n0.3,0.95\n");

    SweepResult two;
    two.columns = {{"p1"}, {"p2"}};
    two.records = {{Valuation{{"p1", q(1, 10)}, {"p2", q(2, 5)}}, 0.9987001423921493, 0, 0.0}};
    two.summarize();
    CHECK(to_csv(two) == "p1,p2,value\n0.1,0.4,0.9987001423921493\n");

    PMDP m = build_open(GridScenario{});
    SweepSpec spec;
    spec.mode = RandomSampling{30, 5};
    spec.region = default_region();
    auto r = run_sweep(m, UntilProperty{}, spec);
    std::istringstream in(to_csv(r));
    auto back = read_csv(in);
    CHECK(back.columns == r.columns);
    REQUIRE(back.records.size() == r.records.size());
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        CHECK(std::abs(back.records[i].value - r.records[i].value) <= 1e-12);
        for (const auto& p : {"p1", "p2"}) {
            CHECK(std::abs(to_double(back.records[i].valuation.at(p)) - to_double(r.records[i].valuation.at(p))) <= 1e-12);
        }
    }
    CHECK(to_csv(back) == to_csv(r));
    CHECK(back.argmin == r.argmin);

    auto path = std::filesystem::temp_directory_path() / "certbench-sweep-roundtrip.csv";
    write_csv(r, path);
    CHECK(to_csv(read_csv(path)) == to_csv(r));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_csv(std::filesystem::path("/nonexistent/dir/x.csv")), IoError);
}

TEST_CASE("malformed CSV reports the line") {
    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream in(text);
        try {
            read_csv(in);
        } catch (const MalformedCsv& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("") == 1);
    CHECK(line_of("p1,p2\n") == 1);
    CHECK(line_of("p1,value\n0.1,0.5\n0.2\n") == 3);
    CHECK(line_of("p1,value\n0.1,abc\n") == 2);
    CHECK(line_of("p1,value\n1.5,0.5\n") == 2);
    CHECK(line_of("p1,value\n0.5,1.5\n") == 2);
    CHECK(line_of("p1,value\n") == 1);
}

TEST_CASE("tied 3x3 sweep matches the oracle and the frozen minimum") {
    auto cfg = load_config(kConfigs / "open-3x3-tied.json");
    PMDP m = build_scenario(cfg.scenario, cfg.parameters);
    auto r = run_sweep(m, cfg.property, cfg.sweep);
    REQUIRE(r.records.size() == 100);
    CHECK(to_csv(r) == to_csv(run_sweep(m, cfg.property, cfg.sweep)));

    oracle::Q exact_min = 2;
    std::size_t exact_argmin = 0;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& v = r.records[i].valuation;
        auto om = oracle::open_grid(3, 3, {0, 0}, {2, 2}, {2, 0}, v.at("p1"), v.at("p2"));
        oracle::Q exact = oracle::max_reach(om)[om.initial];
        CHECK(std::abs(r.records[i].value - exact.get_d()) <= 1e-6);
        if (exact < exact_min) {
            exact_min = exact;
            exact_argmin = i;
        }
    }
    CHECK(exact_argmin == r.argmin);
    CHECK(std::abs(exact_min.get_d() - goldens::kOpen3x3TiedMin) <= goldens::kRegressionTolerance);
    CHECK(std::abs(r.min - goldens::kOpen3x3TiedMin) <= goldens::kRegressionTolerance);
}
