#pragma once

#include <string>

#include <json.hpp>

#include "problem.hpp"
#include "robots.hpp"

namespace tcsdp {

// JSON forms (schema version 1, see README). Readers throw InvalidInput on
// malformed documents.
constexpr int kSchemaVersion = 1;

nlohmann::json problem_to_json(const TcsdpProblem& p);
TcsdpProblem problem_from_json(const nlohmann::json& j);

nlohmann::json point_to_json(const Point& pt);
Point point_from_json(const TcsdpProblem& p, const nlohmann::json& j);

nlohmann::json certificate_to_json(const DualCertificate& d, const CertificateReport* report = nullptr);

nlohmann::json scenario_to_json(const PnpScenario& s);
nlohmann::json scenario_to_json(const HandEyeScenario& s);
nlohmann::json scenario_to_json(const DualCalScenario& s);
PnpScenario pnp_scenario_from_json(const nlohmann::json& j);
HandEyeScenario handeye_scenario_from_json(const nlohmann::json& j);
DualCalScenario dualcal_scenario_from_json(const nlohmann::json& j);

}  // namespace tcsdp
