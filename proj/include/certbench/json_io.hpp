#pragma once

// JSON forms shared by the config loader, the ledger and CLI output.
// Rationals are written as strings ("0.15", "1/3") so bounds survive exactly;
// on input both strings and JSON numbers are accepted, numbers being read as
// their shortest decimal form.

#include "certbench/checker.hpp"
#include "certbench/param_expr.hpp"
#include "certbench/sweep.hpp"

#include "json.hpp"

#include <string>

namespace certbench {

nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json region_to_json(const ParameterRegion& region);
ParameterRegion region_from_json(const nlohmann::json& j, const std::string& field);

/// Numeric form used in evidence and summaries.
nlohmann::json valuation_to_json(const Valuation& v);

nlohmann::json solver_to_json(const SolverConfig& cfg);
SolverConfig solver_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json property_to_json(const UntilProperty& prop);
UntilProperty property_from_json(const nlohmann::json& j, const std::string& field);

/// Sampling mode only; region and solver are serialised separately.
nlohmann::json sampling_to_json(const SamplingMode& mode);
SamplingMode sampling_from_json(const nlohmann::json& j, const std::string& field);

}  // namespace certbench
