#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "sfc/fields.hpp"
#include "sfc/maps.hpp"
#include "sfc/symbolic.hpp"

namespace sfc {

// Contents of the run configuration file shared by all subcommands.
struct RunConfig {
    FieldSpec field;
    CalibrationRequest request;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json run_config_to_json(const RunConfig& rc);

nlohmann::ordered_json certificate_to_json(const EtaCertificate& c);

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg, const FieldSpec& spec);

struct LoadedScenario {
    ScenarioConfig cfg;
    FieldSpec field;
    double stored_delta1 = 0.0;  // value found in the file before recomputation
};

// delta1 is recomputed as k_eta delta2^c_eta on load; the stored value is kept for comparison.
LoadedScenario scenario_from_json(const nlohmann::json& j);

// Doubles for the public fields plus 45-digit strings for the base-curve parameters.
nlohmann::ordered_json itinerary_to_json(const ItineraryResult& r);

// Columns j, psi, delta, phi, membership, level with j re-indexed by the sequence offset.
std::string orbit_csv(const ItineraryResult& r);

nlohmann::json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace sfc
