#include "certbench/json_io.hpp"

#include "certbench/errors.hpp"

namespace certbench {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    throw ParseError("field '" + field + "' " + what);
}

std::uint64_t unsigned_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_number_integer() || j.get<long long>() < 0) bad(field, "must be a non-negative integer");
    return j.get<std::uint64_t>();
}

}  // namespace

nlohmann::json rational_to_json(const Rational& r) { return to_string(r); }

Rational rational_from_json(const nlohmann::json& j, const std::string& field) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number_integer()) return Rational(j.get<long>());
        if (j.is_number_float()) return decimal_rational(j.get<double>());
    } catch (const Error& e) {
        bad(field, e.what());
    }
    bad(field, "must be a number or a numeric string");
}

nlohmann::json region_to_json(const ParameterRegion& region) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, b] : region.bounds()) j[name] = {rational_to_json(b.lo), rational_to_json(b.hi)};
    return j;
}

ParameterRegion region_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_object() || j.empty()) bad(field, "must map parameter names to [lo, hi]");
    ParameterRegion region;
    for (const auto& [name, bounds] : j.items()) {
        const std::string sub = field + "." + name;
        if (!bounds.is_array() || bounds.size() != 2) bad(sub, "must be a [lo, hi] pair");
        Interval iv{rational_from_json(bounds[0], sub), rational_from_json(bounds[1], sub)};
        try {
            region.set(name, iv);
        } catch (const Error& e) {
            throw ValidationError(sub, e.what());
        }
    }
    return region;
}

nlohmann::json valuation_to_json(const Valuation& v) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, value] : v.values()) j[name] = to_double(value);
    return j;
}

nlohmann::json solver_to_json(const SolverConfig& cfg) {
    return {{"epsilon", cfg.epsilon}, {"max_iterations", cfg.max_iterations}};
}

SolverConfig solver_from_json(const nlohmann::json& j, const std::string& field) {
    SolverConfig cfg;
    if (!j.is_object()) bad(field, "must be an object");
    if (j.contains("epsilon")) {
        if (!j["epsilon"].is_number()) bad(field + ".epsilon", "must be a number");
        cfg.epsilon = j["epsilon"].get<double>();
        if (!(cfg.epsilon > 0.0)) throw ValidationError(field + ".epsilon", "must be positive");
    }
    if (j.contains("max_iterations")) {
        cfg.max_iterations = unsigned_from_json(j["max_iterations"], field + ".max_iterations");
        if (cfg.max_iterations < 1) throw ValidationError(field + ".max_iterations", "must be at least 1");
    }
    return cfg;
}

nlohmann::json property_to_json(const UntilProperty& prop) { return {{"avoid", prop.avoid}, {"reach", prop.reach}}; }

UntilProperty property_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_object()) bad(field, "must be an object");
    UntilProperty prop;
    for (const char* key : {"avoid", "reach"}) {
        if (!j.contains(key)) continue;
        if (!j[key].is_string() || j[key].get<std::string>().empty()) bad(field + "." + key, "must be a label name");
    }
    prop.avoid = j.value("avoid", prop.avoid);
    prop.reach = j.value("reach", prop.reach);
    return prop;
}

nlohmann::json sampling_to_json(const SamplingMode& mode) {
    if (const auto* grid = std::get_if<GridSampling>(&mode)) return {{"mode", "grid"}, {"points", grid->points}};
    if (const auto* random = std::get_if<RandomSampling>(&mode)) {
        return {{"mode", "random"}, {"samples", random->samples}, {"seed", random->seed}};
    }
    const auto& tied = std::get<TiedSampling>(mode);
    nlohmann::json j{{"mode", "tied"},
                     {"parameters", tied.parameters},
                     {"range", {rational_to_json(tied.range.lo), rational_to_json(tied.range.hi)}},
                     {"samples", tied.samples}};
    if (tied.seed) j["seed"] = *tied.seed;
    return j;
}

SamplingMode sampling_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_object()) bad(field, "must be an object");
    const std::string kind = j.value("mode", std::string("random"));
    auto count = [&](const char* key, unsigned fallback) {
        if (!j.contains(key)) return fallback;
        auto n = unsigned_from_json(j[key], field + "." + key);
        if (n < 1) throw ValidationError(field + "." + key, "must be at least 1");
        return static_cast<unsigned>(n);
    };
    if (kind == "grid") return GridSampling{count("points", 10)};
    if (kind == "random") {
        if (!j.contains("seed")) throw ValidationError(field + ".seed", "random sweeps need an explicit seed");
        return RandomSampling{count("samples", 100), unsigned_from_json(j["seed"], field + ".seed")};
    }
    if (kind == "tied") {
        TiedSampling tied;
        if (j.contains("parameters")) {
            if (!j["parameters"].is_array() || j["parameters"].empty()) bad(field + ".parameters", "must list parameters");
            tied.parameters.clear();
            for (const auto& p : j["parameters"]) {
                if (!p.is_string()) bad(field + ".parameters", "must list parameter names");
                tied.parameters.push_back(p.get<std::string>());
            }
        }
        if (j.contains("range")) {
            const auto& r = j["range"];
            if (!r.is_array() || r.size() != 2) bad(field + ".range", "must be a [lo, hi] pair");
            tied.range = {rational_from_json(r[0], field + ".range"), rational_from_json(r[1], field + ".range")};
            if (tied.range.lo < 0 || tied.range.hi > 1 || tied.range.lo > tied.range.hi) {
                throw ValidationError(field + ".range", "must satisfy 0 <= lo <= hi <= 1");
            }
        }
        tied.samples = count("samples", 100);
        if (j.contains("seed")) tied.seed = unsigned_from_json(j["seed"], field + ".seed");
        return tied;
    }
    bad(field + ".mode", "must be \"grid\", \"random\" or \"tied\"");
}

}  // namespace certbench
