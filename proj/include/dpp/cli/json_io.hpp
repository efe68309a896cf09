#pragma once

#include "dpp/analysis.hpp"
#include "dpp/montecarlo.hpp"
#include "dpp/oracle.hpp"

#include <json.hpp>

namespace dpp {

void to_json(nlohmann::json& j, const BoundConstants& k);
void to_json(nlohmann::json& j, const StationarySolution& s);
void to_json(nlohmann::json& j, const WilsonInterval& w);
void to_json(nlohmann::json& j, const InvariantViolation& v);
void to_json(nlohmann::json& j, const CheckResult& c);
void to_json(nlohmann::json& j, const BatchSummary& s);

/// Inverse of to_json for BoundConstants; throws InvalidInput on missing fields.
BoundConstants bound_constants_from_json(const nlohmann::json& j);

}  // namespace dpp
