// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "goldens.hpp"
#include "oracle.hpp"

#include "certbench/certify.hpp"
#include "certbench/checker.hpp"
#include "certbench/cli.hpp"
#include "certbench/config.hpp"
#include "certbench/errors.hpp"
#include "certbench/scenario.hpp"
#include "certbench/sweep.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace certbench;

namespace {

const std::filesystem::path kConfigs = CERTBENCH_CONFIG_DIR;

// pinned tolerances
constexpr double kOracleTol = 1e-6;
constexpr double kOracleSeconds = 1.0;
constexpr double kRooftopFloor = 1.0 - 1e-4;
constexpr double kRooftopSeconds = 30.0;
constexpr double kMonteCarloTol = 0.01;
constexpr std::uint64_t kEpisodes = 100'000;
constexpr std::uint64_t kHorizon = 10'000;
constexpr std::uint64_t kMonteCarloSeed = 20240611;
constexpr double kRowTol = 1e-12;
constexpr int kRowValuations = 1000;
constexpr double kTheta = 0.9;
constexpr double kRefineTol = 0.01;
constexpr double kBracketStep = 0.02;

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Rational q(long n, long d = 1) {
    Rational r(n, d);
    r.canonicalize();
    return r;
}

Valuation at(const Rational& p1, const Rational& p2) { return Valuation{{"p1", p1}, {"p2", p2}}; }

StateSet reachable(const ConcreteMDP& c) {
    StateSet seen(c.state_count());
    std::deque<StateIndex> queue{c.initial()};
    seen.insert(c.initial());
    while (!queue.empty()) {
        StateIndex s = queue.front();
        queue.pop_front();
        for (ActionIndex a = 0; a < c.action_count(s); ++a) {
            for (const auto& e : c.edges(s, a)) {
                if (!seen.contains(e.target)) {
                    seen.insert(e.target);
                    queue.push_back(e.target);
                }
            }
        }
    }
    return seen;
}

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(6);
    out << x;
    return out.str();
}

Outcome oracle_equivalence() {
    GridScenario s;
    s.width = s.height = 3;
    s.robot_start = {2, 2};
    s.goal = {2, 0};
    PMDP m = build_open(s);
    if (m.state_count() != 162) return {false, "3x3 model has " + std::to_string(m.state_count()) + " states"};

    // oracle numbering -> library numbering
    std::vector<StateIndex> map(162);
    for (int rx = 0; rx < 3; ++rx)
        for (int ry = 0; ry < 3; ++ry)
            for (int ux = 0; ux < 3; ++ux)
                for (int uy = 0; uy < 3; ++uy)
                    for (int g = 0; g < 2; ++g)
                        map[oracle::open_index(3, 3, {ux, uy}, g, {rx, ry})] =
                            encode({{ux, uy}, g ? FlightMode::Grounded : FlightMode::Flying, {rx, ry}}, s);

    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<long> k(0, 1000);
    double worst_initial = 0, worst_all = 0, slowest = 0;
    for (int i = 0; i < 10; ++i) {
        Valuation v = at(q(k(rng), 1000), q(k(rng), 1000));
        auto om = oracle::open_grid(3, 3, {0, 0}, {2, 2}, {2, 0}, v.at("p1"), v.at("p2"));
        auto exact = oracle::max_reach(om);

        auto start = Clock::now();
        auto r = max_until(instantiate(m, v), UntilProperty{});
        slowest = std::max(slowest, seconds_since(start));
        worst_initial = std::max(worst_initial, std::abs(r.value_at_initial - exact[om.initial].get_d()));
        for (std::size_t o = 0; o < exact.size(); ++o) {
            worst_all = std::max(worst_all, std::abs(r.values[map[o]] - exact[o].get_d()));
        }
    }
    bool ok = worst_initial <= kOracleTol && worst_all <= kOracleTol && slowest < kOracleSeconds;
    return {ok, "max |VI - exact| initial " + fmt(worst_initial) + ", all states " + fmt(worst_all) +
                    ", slowest solve " + fmt(slowest) + " s"};
}

Outcome rooftop_robustness() {
    auto start = Clock::now();
    auto cfg = load_config(kConfigs / "reference-rooftop.json");
    PMDP m = build_scenario(cfg.scenario, cfg.parameters);
    SweepSpec spec = cfg.sweep;
    spec.mode = GridSampling{10};
    spec.region = ParameterRegion{{"p1", {0, 1}}, {"p2", {q(1, 20), 1}}};
    auto r = run_sweep(m, cfg.property, spec);
    std::size_t crash_reachable = 0;
    for (const auto& rec : r.records) {
        auto c = instantiate(m, rec.valuation);
        if (!(reachable(c) & c.label(cfg.property.avoid)).empty()) ++crash_reachable;
    }
    double elapsed = seconds_since(start);
    bool ok = r.records.size() == 100 && r.min >= kRooftopFloor && crash_reachable == 0 && elapsed < kRooftopSeconds;
    return {ok, std::to_string(r.records.size()) + " samples, min " + format_double(r.min) + ", crash reachable at " +
                    std::to_string(crash_reachable) + ", " + fmt(elapsed) + " s"};
}

Outcome boundary_cases() {
    auto cfg = load_config(kConfigs / "reference-open.json");
    PMDP m = build_scenario(cfg.scenario, cfg.parameters);
    double certain = max_until(instantiate(m, at(0, q(1, 2))), cfg.property).value_at_initial;
    double hopeless = max_until(instantiate(m, at(1, 0)), cfg.property).value_at_initial;
    int distance = manhattan(cfg.scenario.uav_start, cfg.scenario.goal);
    bool ok = certain == 1.0 && hopeless == 0.0 && distance >= 2;
    return {ok, "p1=0: " + format_double(certain) + ", p1=1 p2=0: " + format_double(hopeless) + " (distance " +
                    std::to_string(distance) + ")"};
}

Outcome monte_carlo() {
    auto cfg = load_config(kConfigs / "reference-open.json");
    PMDP m = build_scenario(cfg.scenario, cfg.parameters);
    auto c = instantiate(m, at(q(1, 10), q(2, 5)));
    auto r = max_until(c, cfg.property);
    double freq = simulate(c, r.policy, cfg.property, SimulationConfig{kEpisodes, kHorizon, kMonteCarloSeed});
    double gap = std::abs(freq - r.value_at_initial);
    return {gap <= kMonteCarloTol, "frequency " + format_double(freq) + " vs value " + format_double(r.value_at_initial) +
                                       " over " + std::to_string(kEpisodes) + " episodes"};
}

Outcome well_formedness() {
    std::vector<PMDP> models;
    for (const char* name : {"reference-open.json", "reference-rooftop.json"}) {
        auto cfg = load_config(kConfigs / name);
        models.push_back(build_scenario(cfg.scenario, cfg.parameters));
    }
    std::size_t findings = 0;
    for (const auto& m : models) findings += validate(m).size();

    std::mt19937_64 rng(77);
    std::uniform_int_distribution<long> k(0, 1'000'000);
    std::size_t rows = 0, bad = 0;
    double worst = 0;
    for (int i = 0; i < kRowValuations; ++i) {
        Valuation v = at(q(k(rng), 1'000'000), q(k(rng), 1'000'000));
        const auto& m = models[i % models.size()];
        auto c = instantiate(m, v);
        for (StateIndex s = 0; s < c.state_count(); ++s) {
            for (ActionIndex a = 0; a < c.action_count(s); ++a) {
                double sum = 0;
                bool in_range = true;
                for (const auto& e : c.edges(s, a)) {
                    in_range &= e.probability >= 0.0 && e.probability <= 1.0;
                    sum += e.probability;
                }
                worst = std::max(worst, std::abs(sum - 1.0));
                ++rows;
                if (!in_range || std::abs(sum - 1.0) > kRowTol) ++bad;
            }
        }
    }
    return {bad == 0 && findings == 0, std::to_string(rows) + " rows at " + std::to_string(kRowValuations) +
                                           " valuations, worst |sum-1| " + fmt(worst) + ", bad rows " +
                                           std::to_string(bad) + ", validate findings " + std::to_string(findings)};
}

Outcome refinement_bracketing() {
    auto cfg = load_config(kConfigs / "reference-open.json");
    const auto& cert = *cfg.certification;
    ContextSpec ctx{cert.context, cfg.scenario, cert.contexts.at(cert.context)};
    Ledger ledger;
    CertificationHarness h(ledger);
    h.register_pair(UseContextPair{"bracket", Use{cfg.property, kTheta}, ctx, Stage::EarlyPhase, PairStatus::Proposed});
    SweepSpec spec = cfg.sweep;
    spec.mode = GridSampling{10};
    auto refined = h.refine_parameter_bound("bracket", "p1", spec, kRefineTol);
    const Rational b = refined.bound.hi;

    PMDP m = build_scenario(cfg.scenario, cfg.parameters);
    auto min_upto = [&](const Rational& hi) {
        SweepSpec s = spec;
        s.region = ctx.region;
        s.region.set("p1", Interval{ctx.region.at("p1").lo, hi});
        return run_sweep(m, cfg.property, s).min;
    };
    Rational beyond = std::min<Rational>(b + decimal_rational(kBracketStep), Rational(1));
    double at_b = min_upto(b), at_beyond = min_upto(beyond);
    bool exact = parse_rational("0.15") == q(3, 20) && suburban_context(cfg.scenario).region.at("p1").hi == q(3, 20) &&
                 cert.contexts.at("suburban").at("p1").hi == q(3, 20);
    bool ok = at_b >= kTheta && at_beyond < kTheta && exact;
    return {ok, "b = " + to_string(b) + " (min " + format_double(at_b) + "), b+0.02 = " + to_string(beyond) + " (min " +
                    format_double(at_beyond) + "), 0.15 exact: " + (exact ? "yes" : "no")};
}

Outcome determinism_regression() {
    const std::string config = (kConfigs / "open-3x3-tied.json").string();
    std::ostringstream a, b, err;
    int ca = run_cli({"--config", config, "sweep"}, a, err);
    int cb = run_cli({"--config", config, "sweep"}, b, err);
    if (ca != 0 || cb != 0) return {false, "sweep exited " + std::to_string(ca) + "/" + std::to_string(cb) + ": " + err.str()};
    std::istringstream in(a.str());
    auto r = read_csv(in);
    const auto& v = r.records[r.argmin].valuation;
    auto om = oracle::open_grid(3, 3, {0, 0}, {2, 2}, {2, 0}, decimal_rational(to_double(v.at("p1"))),
                                decimal_rational(to_double(v.at("p2"))));
    double exact = oracle::max_reach(om)[om.initial].get_d();
    bool same = a.str() == b.str();
    double drift = std::abs(r.min - goldens::kOpen3x3TiedMin);
    double oracle_gap = std::abs(exact - goldens::kOpen3x3TiedMin);
    bool ok = same && r.records.size() == 100 && drift <= goldens::kRegressionTolerance &&
              oracle_gap <= goldens::kRegressionTolerance;
    return {ok, std::string(same ? "identical" : "different") + " CSV bytes, " + std::to_string(r.records.size()) +
                    " samples, min " + format_double(r.min) + " vs golden " + format_double(goldens::kOpen3x3TiedMin) +
                    ", oracle at argmin " + format_double(exact)};
}

Outcome ledger_replay() {
    auto path = std::filesystem::temp_directory_path() / "certbench-acceptance-ledger.jsonl";
    std::filesystem::remove(path);
    GridScenario roof;
    roof.context = ContextKind::Rooftop;
    roof.rooftops = {{0, 0}, {1, 2}, {3, 2}, {3, 0}};
    roof.rooftop_edges = {{{0, 0}, {1, 2}}, {{1, 2}, {3, 2}}, {{3, 2}, {3, 0}}};

    std::size_t sequences = 0, entries = 0, mismatches = 0;
    std::mt19937_64 rng(5150);
    for (int round = 0; round < 5; ++round, ++sequences) {
        std::filesystem::remove(path);
        Ledger ledger(path);
        CertificationHarness h(ledger);
        const std::vector<std::string> ids{"roof", "open", "strict"};
        h.register_pair({"roof", Use{UntilProperty{}, 0.99}, urban_context(roof), Stage::EarlyPhase, PairStatus::Proposed});
        h.register_pair({"open", Use{UntilProperty{}, 0.9}, suburban_context(GridScenario{}), Stage::EarlyPhase,
                         PairStatus::Proposed});
        h.register_pair({"strict", Use{UntilProperty{}, 0.9995}, urban_context(GridScenario{}), Stage::EarlyPhase,
                         PairStatus::Proposed});
        SweepSpec spec;
        spec.mode = GridSampling{2};
        std::uniform_int_distribution<int> op(0, 2), who(0, 2), stage(0, 2);
        for (int step = 0; step < 10; ++step) {
            const auto& id = ids[who(rng)];
            switch (op(rng)) {
                case 0: h.evaluate_context(id, spec); break;
                case 1: h.transition_stage(id, static_cast<Stage>(stage(rng)), "step " + std::to_string(step)); break;
                default:
                    try {
                        h.refine_parameter_bound(id, "p1", spec, 0.05);
                    } catch (const NoFeasibleBound&) {
                    }
            }
        }
        auto loaded = Ledger::load(path);
        entries += loaded.size();
        auto states = replay(loaded);
        for (const auto& id : ids) {
            const auto& live = h.pair(id);
            auto it = states.find(id);
            PairState got = it == states.end() ? PairState{} : it->second;
            bool region_ok = !got.region || *got.region == live.context.region;
            if (got.stage != live.stage || got.status != live.status || !region_ok) ++mismatches;
        }
        if (replay(loaded) != replay(ledger.entries())) ++mismatches;
    }
    std::filesystem::remove(path);
    return {mismatches == 0, std::to_string(sequences) + " random sequences, " + std::to_string(entries) +
                                 " entries, mismatched pair states " + std::to_string(mismatches)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"rooftop robustness", rooftop_robustness},
        {"boundary cases", boundary_cases},
        {"monte carlo conformance", monte_carlo},
        {"well-formedness", well_formedness},
        {"refinement bracketing", refinement_bracketing},
        {"determinism and regression", determinism_regression},
        {"ledger replay", ledger_replay},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
