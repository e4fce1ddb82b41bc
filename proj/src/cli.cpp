#include "certbench/cli.hpp"

#include "certbench/certify.hpp"
#include "certbench/config.hpp"
#include "certbench/errors.hpp"
#include "certbench/json_io.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <stdexcept>

namespace certbench {

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> p1, p2;
    std::optional<double> theta;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> ledger;
    std::optional<std::string> to_stage;
    std::string rationale;
    bool print_config = false;
};

class Failed : public std::runtime_error {
public:
    Failed(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

RunConfig resolved_config(const Flags& f) {
    if (f.config.empty()) throw Failed(exit_code::usage, "--config is required for this subcommand");
    RunConfig cfg = load_config(f.config);
    if (f.p1) cfg.nominal.set("p1", parse_rational(*f.p1));
    if (f.p2) cfg.nominal.set("p2", parse_rational(*f.p2));
    if (f.seed) {
        cfg.simulation.seed = *f.seed;
        if (auto* r = std::get_if<RandomSampling>(&cfg.sweep.mode)) r->seed = *f.seed;
        if (auto* t = std::get_if<TiedSampling>(&cfg.sweep.mode)) t->seed = *f.seed;
    }
    if (f.theta) {
        if (!cfg.certification) throw ValidationError("certification", "--theta needs a certification block");
        if (!(*f.theta >= 0.0 && *f.theta <= 1.0)) throw ValidationError("--theta", "must lie in [0, 1]");
        cfg.certification->theta = *f.theta;
    }
    cfg.validate();
    return cfg;
}

std::filesystem::path ledger_path(const Flags& f, const std::optional<RunConfig>& cfg) {
    if (const char* env = std::getenv("PMDP_CERTIFY_LEDGER"); env && *env) return env;
    if (f.ledger) return *f.ledger;
    if (cfg && cfg->outputs.ledger) return *cfg->outputs.ledger;
    return "certify-ledger.jsonl";
}

/// Writes through `write` to `path`, or to `fallback` when no path is set.
void emit(const std::optional<std::filesystem::path>& path, std::ostream& fallback,
          const std::function<void(std::ostream&)>& write) {
    if (!path) {
        write(fallback);
        return;
    }
    std::ofstream file(*path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path->string() + "' for writing");
    write(file);
    if (!file) throw IoError("failed writing '" + path->string() + "'");
}

std::optional<std::filesystem::path> out_or(const Flags& f, const std::optional<std::filesystem::path>& fallback) {
    if (f.out) return std::filesystem::path(*f.out);
    return fallback;
}

std::vector<std::string> policy_header(const RunConfig& cfg) {
    return {"scenario " + to_string(cfg.scenario.context) + " " + std::to_string(cfg.scenario.width) + "x" +
                std::to_string(cfg.scenario.height),
            "valuation " + cfg.nominal.to_string(),
            "property P=? [ !" + cfg.property.avoid + " U " + cfg.property.reach + " ]"};
}

UseContextPair pair_from(const RunConfig& cfg, const Ledger& ledger) {
    const auto& c = cfg.certification.value();
    UseContextPair pair;
    pair.id = c.pair_id;
    pair.use = Use{cfg.property, c.theta};
    pair.context = ContextSpec{c.context, cfg.scenario, c.contexts.at(c.context)};
    auto states = replay(ledger.entries());
    if (auto it = states.find(pair.id); it != states.end()) {
        pair.stage = it->second.stage;
        pair.status = it->second.status;
    }
    return pair;
}

const CertificationConfig& need_certification(const RunConfig& cfg) {
    if (!cfg.certification) throw ValidationError("certification", "this subcommand needs a certification block");
    return *cfg.certification;
}

// ---------------------------------------------------------------------------

int cmd_check(const Flags& f, std::ostream& out) {
    RunConfig cfg = resolved_config(f);
    PMDP model = build_scenario(cfg.scenario, cfg.parameters);
    ConcreteMDP mdp = instantiate(model, cfg.nominal);
    CheckResult r = max_until(mdp, cfg.property, cfg.solver);
    if (auto path = out_or(f, cfg.outputs.policy)) {
        emit(path, out, [&](std::ostream& o) { write_policy(o, r.policy, policy_header(cfg)); });
    }
    nlohmann::json j{{"value", r.value_at_initial},
                     {"valuation", valuation_to_json(cfg.nominal)},
                     {"states", mdp.state_count()},
                     {"iterations", r.iterations},
                     {"residual", r.residual}};
    out << j.dump() << '\n';
    return exit_code::ok;
}

int cmd_sweep(const Flags& f, std::ostream& out) {
    RunConfig cfg = resolved_config(f);
    PMDP model = build_scenario(cfg.scenario, cfg.parameters);
    SweepResult r = run_sweep(model, cfg.property, cfg.sweep);
    auto csv = out_or(f, cfg.outputs.csv);
    emit(csv, out, [&](std::ostream& o) { write_csv(r, o); });
    const std::string summary = summary_json(r).dump() + "\n";
    if (cfg.outputs.summary) {
        emit(cfg.outputs.summary, out, [&](std::ostream& o) { o << summary; });
    } else if (csv) {
        out << summary;
    }
    return exit_code::ok;
}

int cmd_synthesize(const Flags& f, std::ostream& out) {
    RunConfig cfg = resolved_config(f);
    PMDP model = build_scenario(cfg.scenario, cfg.parameters);
    CheckResult r = max_until(instantiate(model, cfg.nominal), cfg.property, cfg.solver);
    emit(out_or(f, cfg.outputs.policy), out, [&](std::ostream& o) { write_policy(o, r.policy, policy_header(cfg)); });
    return exit_code::ok;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
    RunConfig cfg = resolved_config(f);
    PMDP model = build_scenario(cfg.scenario, cfg.parameters);
    ConcreteMDP mdp = instantiate(model, cfg.nominal);
    CheckResult r = max_until(mdp, cfg.property, cfg.solver);
    double estimate = simulate(mdp, r.policy, cfg.property, cfg.simulation);
    nlohmann::json j{{"estimate", estimate},
                     {"value", r.value_at_initial},
                     {"valuation", valuation_to_json(cfg.nominal)},
                     {"episodes", cfg.simulation.episodes},
                     {"horizon", cfg.simulation.horizon},
                     {"seed", cfg.simulation.seed}};
    out << j.dump() << '\n';
    return exit_code::ok;
}

int cmd_certify(const Flags& f, std::ostream& out) {
    RunConfig cfg = resolved_config(f);
    need_certification(cfg);
    Ledger ledger(ledger_path(f, cfg));
    CertificationHarness harness(ledger);
    auto pair = pair_from(cfg, ledger);
    const std::string id = pair.id;
    harness.register_pair(std::move(pair));
    Verdict v = harness.evaluate_context(id, cfg.sweep);
    nlohmann::json j{{"pair", id},
                     {"verdict", to_string(v.outcome)},
                     {"sequence", ledger.entries().back().sequence},
                     {"evidence", v.evidence}};
    out << j.dump() << '\n';
    switch (v.outcome) {
        case Verdict::Outcome::Pass: return exit_code::ok;
        case Verdict::Outcome::Fail: return exit_code::fail;
        case Verdict::Outcome::Undetermined: return exit_code::numerical;
    }
    return exit_code::numerical;
}

int cmd_refine(const Flags& f, std::ostream& out) {
    RunConfig cfg = resolved_config(f);
    const auto& c = need_certification(cfg);
    Ledger ledger(ledger_path(f, cfg));
    CertificationHarness harness(ledger);
    auto pair = pair_from(cfg, ledger);
    const std::string id = pair.id;
    harness.register_pair(std::move(pair));
    Refinement r = harness.refine_parameter_bound(id, c.refine_parameter, cfg.sweep, c.refine_tolerance);
    nlohmann::json j{{"pair", id},
                     {"parameter", c.refine_parameter},
                     {"bound", {rational_to_json(r.bound.lo), rational_to_json(r.bound.hi)}},
                     {"fails_at", r.fails ? rational_to_json(*r.fails) : nlohmann::json(nullptr)},
                     {"sequence", r.entry.sequence}};
    out << j.dump() << '\n';
    return exit_code::ok;
}

int cmd_stage(const Flags& f, std::ostream& out) {
    RunConfig cfg = resolved_config(f);
    need_certification(cfg);
    if (!f.to_stage) throw Failed(exit_code::usage, "stage needs --to");
    Stage to = stage_from_string(*f.to_stage);
    Ledger ledger(ledger_path(f, cfg));
    CertificationHarness harness(ledger);
    auto pair = pair_from(cfg, ledger);
    const std::string id = pair.id;
    harness.register_pair(std::move(pair));
    auto entry = harness.transition_stage(id, to, f.rationale);
    out << entry.to_json().dump() << '\n';
    return exit_code::ok;
}

std::optional<RunConfig> optional_config(const Flags& f) {
    if (f.config.empty()) return std::nullopt;
    return resolved_config(f);
}

std::vector<LedgerEntry> read_ledger(const Flags& f) {
    auto path = ledger_path(f, optional_config(f));
    if (!std::filesystem::exists(path)) throw IoError("no ledger at '" + path.string() + "'");
    return Ledger::load(path);
}

int cmd_ledger_show(const Flags& f, std::ostream& out) {
    for (const auto& e : read_ledger(f)) out << e.to_json().dump() << '\n';
    return exit_code::ok;
}

int cmd_report(const Flags& f, std::ostream& out) {
    out << render_report(read_ledger(f));
    return exit_code::ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Parametric MDP verification and certification workbench", "certbench"};
    app.fallthrough();
    app.require_subcommand(1);

    Flags f;
    app.add_option("--config", f.config, "Run configuration (JSON)");
    app.add_option("--p1", f.p1, "Valuation override for p1");
    app.add_option("--p2", f.p2, "Valuation override for p2");
    app.add_option("--theta", f.theta, "Certification threshold override");
    app.add_option("--seed", f.seed, "Seed override for sampling and simulation");
    app.add_option("--out", f.out, "Output path (policy for check/synthesize, CSV for sweep)");
    app.add_option("--ledger", f.ledger, "Ledger path (PMDP_CERTIFY_LEDGER takes precedence)");
    app.add_flag("--print-config", f.print_config, "Print the resolved config and exit");

    std::function<int()> action;
    auto sub = [&](const char* name, const char* help, int (*fn)(const Flags&, std::ostream&)) {
        auto* s = app.add_subcommand(name, help);
        s->callback([&, fn] { action = [&, fn] { return fn(f, out); }; });
        return s;
    };
    sub("check", "Maximal reach-avoid probability at one valuation", cmd_check);
    sub("sweep", "Sample the parameter region and write a CSV", cmd_sweep);
    sub("synthesize", "Export the optimal policy at one valuation", cmd_synthesize);
    sub("simulate", "Monte Carlo estimate under the optimal policy", cmd_simulate);
    auto* certify = sub("certify", "Evaluate a use/context pair and append a ledger entry", cmd_certify);
    auto* report = certify->add_subcommand("report", "Summarise the ledger per pair");
    report->callback([&] { action = [&] { return cmd_report(f, out); }; });
    certify->callback([&, report] {
        if (!report->parsed()) action = [&] { return cmd_certify(f, out); };
    });
    sub("refine", "Bisect a parameter's upper bound and append a ledger entry", cmd_refine);
    auto* stage = sub("stage", "Move a pair to another testing stage", cmd_stage);
    stage->add_option("--to", f.to_stage, "early-phase, transitional or confirmatory")->required();
    stage->add_option("--rationale", f.rationale, "Free-text reason");
    auto* ledger = app.add_subcommand("ledger", "Ledger inspection");
    ledger->require_subcommand(1);
    auto* show = ledger->add_subcommand("show", "Print ledger entries as JSON lines");
    show->callback([&] { action = [&] { return cmd_ledger_show(f, out); }; });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::usage;
    }

    try {
        if (f.print_config) {
            out << config_to_json(resolved_config(f)).dump(2) << '\n';
            return exit_code::ok;
        }
        return action();
    } catch (const Failed& e) {
        err << "error: " << e.what() << '\n';
        return e.code();
    } catch (const NoFeasibleBound& e) {
        err << "no feasible bound: " << e.what() << '\n';
        return exit_code::fail;
    } catch (const NonConvergence& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_code::numerical;
    } catch (const ValidationError& e) {
        err << "invalid config: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const std::logic_error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_code::numerical;
    }
}

}  // namespace certbench
