#include "certbench/config.hpp"

#include "certbench/errors.hpp"
#include "certbench/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace certbench {

namespace {

const std::set<std::string> kScenarioLabels{"crash", "goal"};

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    throw ParseError("field '" + field + "' " + what);
}

const nlohmann::json& object_at(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_object()) bad(key, "must be an object");
    return v;
}

std::uint64_t count_at(const nlohmann::json& j, const char* key, const std::string& field, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j[key];
    if (!v.is_number_integer() || v.get<long long>() < 0) bad(field + "." + key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

double probability_at(const nlohmann::json& j, const char* key, const std::string& field, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) bad(field + "." + key, "must be a number");
    double x = j[key].get<double>();
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError(field + "." + key, "must lie in [0, 1]");
    return x;
}

std::optional<std::filesystem::path> path_at(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) bad(std::string("outputs.") + key, "must be a path string");
    return std::filesystem::path(j[key].get<std::string>());
}

Valuation valuation_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_object()) bad(field, "must map parameter names to values");
    Valuation v;
    for (const auto& [name, value] : j.items()) v.set(name, rational_from_json(value, field + "." + name));
    return v;
}

nlohmann::json exact_valuation_json(const Valuation& v) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, value] : v.values()) j[name] = rational_to_json(value);
    return j;
}

/// A tied sweep without an explicit region pins untied parameters at the nominal point.
ParameterRegion tied_region(const TiedSampling& tied, const ParameterRegion& params, const Valuation& nominal) {
    ParameterRegion r;
    for (const auto& [name, b] : params.bounds()) {
        if (std::find(tied.parameters.begin(), tied.parameters.end(), name) != tied.parameters.end()) {
            r.set(name, tied.range);
        } else {
            Rational at = nominal.values().count(name) ? nominal.at(name) : b.lo;
            r.set(name, Interval{at, at});
        }
    }
    return r;
}

}  // namespace

void RunConfig::validate() const {
    if (auto p = scenario.problem()) throw ValidationError("scenario." + p->first, p->second);
    for (const char* name : {"p1", "p2"}) {
        if (!parameters.contains(name)) throw ValidationError("parameters", std::string("must bound '") + name + "'");
    }
    if (!kScenarioLabels.count(property.avoid)) throw ValidationError("property.avoid", "unknown label '" + property.avoid + "'");
    if (!kScenarioLabels.count(property.reach)) throw ValidationError("property.reach", "unknown label '" + property.reach + "'");
    if (!parameters.encloses(sweep.region)) throw ValidationError("sweep.region", "must lie inside 'parameters'");
    try {
        sweep.validate();
    } catch (const InvalidSweep& e) {
        throw ValidationError("sweep", e.what());
    }
    for (const auto& [name, value] : nominal.values()) {
        if (!parameters.contains(name)) throw ValidationError("nominal." + name, "is not a declared parameter");
        const auto& b = parameters.at(name);
        if (value < b.lo || value > b.hi) throw ValidationError("nominal." + name, "lies outside 'parameters'");
    }
    if (simulation.episodes < 1) throw ValidationError("simulation.episodes", "must be at least 1");
    if (simulation.horizon < 1) throw ValidationError("simulation.horizon", "must be at least 1");
    if (certification) {
        const auto& c = *certification;
        if (c.modules.empty()) throw ValidationError("certification.modules", "at least one module is required");
        if (c.pair_id.empty()) throw ValidationError("certification.pair.id", "must not be empty");
        if (!c.contexts.count(c.context)) {
            throw ValidationError("certification.pair.context", "unknown context '" + c.context + "'");
        }
        for (const auto& [name, region] : c.contexts) {
            if (!parameters.encloses(region)) {
                throw ValidationError("certification.contexts." + name, "region must lie inside 'parameters'");
            }
        }
        if (!c.context.empty() && !c.contexts.at(c.context).contains(c.refine_parameter)) {
            throw ValidationError("certification.refine.parameter", "not bounded by the pair's context");
        }
        if (!(c.refine_tolerance > 0.0)) throw ValidationError("certification.refine.tolerance", "must be positive");
    }
}

RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    static const std::set<std::string> known{"scenario", "parameters", "property", "solver",       "sweep",
                                             "nominal",  "simulation", "certification", "outputs"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ParseError("unknown top-level field '" + key + "'");
    }
    RunConfig cfg;
    if (!j.contains("scenario")) throw ParseError("field 'scenario' is required");
    cfg.scenario = scenario_from_json(j["scenario"]);
    if (j.contains("parameters")) cfg.parameters = region_from_json(j["parameters"], "parameters");
    if (j.contains("property")) cfg.property = property_from_json(j["property"], "property");
    if (j.contains("solver")) cfg.solver = solver_from_json(j["solver"], "solver");
    if (j.contains("nominal")) cfg.nominal = valuation_from_json(j["nominal"], "nominal");

    cfg.sweep.solver = cfg.solver;
    cfg.sweep.region = cfg.parameters;
    if (j.contains("sweep")) {
        const auto& s = object_at(j, "sweep");
        nlohmann::json mode = s;
        mode.erase("region");
        mode.erase("threads");
        cfg.sweep.mode = sampling_from_json(mode, "sweep");
        cfg.sweep.threads = static_cast<unsigned>(count_at(s, "threads", "sweep", 0));
        if (s.contains("region")) {
            cfg.sweep.region = region_from_json(s["region"], "sweep.region");
        } else if (const auto* tied = std::get_if<TiedSampling>(&cfg.sweep.mode)) {
            cfg.sweep.region = tied_region(*tied, cfg.parameters, cfg.nominal);
        }
    } else {
        cfg.sweep.mode = GridSampling{};
    }

    if (j.contains("simulation")) {
        const auto& s = object_at(j, "simulation");
        cfg.simulation.episodes = count_at(s, "episodes", "simulation", cfg.simulation.episodes);
        cfg.simulation.horizon = count_at(s, "horizon", "simulation", cfg.simulation.horizon);
        if (!s.contains("seed")) throw ValidationError("simulation.seed", "simulation needs an explicit seed");
        cfg.simulation.seed = count_at(s, "seed", "simulation", 0);
    }

    if (j.contains("certification")) {
        const auto& c = object_at(j, "certification");
        CertificationConfig cert;
        if (c.contains("modules")) {
            if (!c["modules"].is_array()) bad("certification.modules", "must be a list of names");
            cert.modules.clear();
            for (const auto& m : c["modules"]) {
                if (!m.is_string()) bad("certification.modules", "must be a list of names");
                cert.modules.push_back(m.get<std::string>());
            }
        }
        if (c.contains("contexts")) {
            if (!c["contexts"].is_object()) bad("certification.contexts", "must map names to regions");
            for (const auto& [name, ctx] : c["contexts"].items()) {
                const std::string field = "certification.contexts." + name;
                if (!ctx.is_object() || !ctx.contains("region")) bad(field, "must hold a 'region'");
                cert.contexts[name] = region_from_json(ctx["region"], field + ".region");
            }
        } else {
            cert.contexts["suburban"] = suburban_context(cfg.scenario).region;
            cert.contexts["urban"] = urban_context(cfg.scenario).region;
        }
        if (c.contains("pair")) {
            const auto& p = c["pair"];
            if (!p.is_object()) bad("certification.pair", "must be an object");
            if (p.contains("id")) {
                if (!p["id"].is_string()) bad("certification.pair.id", "must be a string");
                cert.pair_id = p["id"].get<std::string>();
            }
            if (p.contains("context")) {
                if (!p["context"].is_string()) bad("certification.pair.context", "must be a string");
                cert.context = p["context"].get<std::string>();
            }
            cert.theta = probability_at(p, "theta", "certification.pair", cert.theta);
        }
        if (cert.context.empty() && !cert.contexts.empty()) cert.context = cert.contexts.begin()->first;
        if (c.contains("refine")) {
            const auto& r = c["refine"];
            if (!r.is_object()) bad("certification.refine", "must be an object");
            if (r.contains("parameter")) {
                if (!r["parameter"].is_string()) bad("certification.refine.parameter", "must be a string");
                cert.refine_parameter = r["parameter"].get<std::string>();
            }
            if (r.contains("tolerance")) {
                if (!r["tolerance"].is_number()) bad("certification.refine.tolerance", "must be a number");
                cert.refine_tolerance = r["tolerance"].get<double>();
            }
        }
        cfg.certification = std::move(cert);
    }

    if (j.contains("outputs")) {
        const auto& o = object_at(j, "outputs");
        cfg.outputs.csv = path_at(o, "csv");
        cfg.outputs.summary = path_at(o, "summary");
        cfg.outputs.policy = path_at(o, "policy");
        cfg.outputs.ledger = path_at(o, "ledger");
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line
        std::string text = buffer.str();
        auto upto = std::min<std::size_t>(e.byte, text.size());
        auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ParseError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json sweep = sampling_to_json(cfg.sweep.mode);
    sweep["region"] = region_to_json(cfg.sweep.region);
    sweep["threads"] = cfg.sweep.threads;

    nlohmann::json j{{"scenario", scenario_to_json(cfg.scenario)},
                     {"parameters", region_to_json(cfg.parameters)},
                     {"property", property_to_json(cfg.property)},
                     {"solver", solver_to_json(cfg.solver)},
                     {"sweep", sweep},
                     {"nominal", exact_valuation_json(cfg.nominal)},
                     {"simulation",
                      {{"episodes", cfg.simulation.episodes},
                       {"horizon", cfg.simulation.horizon},
                       {"seed", cfg.simulation.seed}}}};
    if (cfg.certification) {
        const auto& c = *cfg.certification;
        nlohmann::json contexts = nlohmann::json::object();
        for (const auto& [name, region] : c.contexts) contexts[name] = {{"region", region_to_json(region)}};
        j["certification"] = {{"modules", c.modules},
                              {"contexts", contexts},
                              {"pair", {{"id", c.pair_id}, {"context", c.context}, {"theta", c.theta}}},
                              {"refine", {{"parameter", c.refine_parameter}, {"tolerance", c.refine_tolerance}}}};
    }
    nlohmann::json outputs = nlohmann::json::object();
    auto put = [&](const char* key, const std::optional<std::filesystem::path>& p) {
        outputs[key] = p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
    };
    put("csv", cfg.outputs.csv);
    put("summary", cfg.outputs.summary);
    put("policy", cfg.outputs.policy);
    put("ledger", cfg.outputs.ledger);
    j["outputs"] = outputs;
    return j;
}

}  // namespace certbench
