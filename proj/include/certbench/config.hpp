#pragma once

#include "certbench/certify.hpp"
#include "certbench/checker.hpp"
#include "certbench/scenario.hpp"
#include "certbench/sweep.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace certbench {

struct CertificationConfig {
    std::vector<std::string> modules{"uav", "robot", "environment"};
    std::map<std::string, ParameterRegion> contexts;  // name -> region
    std::string pair_id = "delivery";
    std::string context;  // key into contexts
    double theta = 0.0;
    std::string refine_parameter = "p1";
    double refine_tolerance = 0.01;
};

struct OutputPaths {
    std::optional<std::filesystem::path> csv;
    std::optional<std::filesystem::path> summary;
    std::optional<std::filesystem::path> policy;
    std::optional<std::filesystem::path> ledger;
};

/// Everything one CLI run needs, with defaults filled in.
struct RunConfig {
    GridScenario scenario;
    ParameterRegion parameters = default_region();
    UntilProperty property;
    SolverConfig solver;
    SweepSpec sweep;
    Valuation nominal;  // used by check / synthesize / simulate
    SimulationConfig simulation;
    std::optional<CertificationConfig> certification;
    OutputPaths outputs;

    /// Cross-checks references between sections. Throws ValidationError.
    void validate() const;
};

RunConfig parse_config(const nlohmann::json& j);                    // throws ParseError / ValidationError
RunConfig load_config(const std::filesystem::path& path);           // throws IoError / ParseError / ValidationError
nlohmann::json config_to_json(const RunConfig& cfg);               // round-trips through parse_config

}  // namespace certbench
