#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "sfc/maps.hpp"

namespace sfc {

// Relative slack tolerated by the bracket rows.
inline constexpr double kBracketSlack = 1e-7;

// One bound checked over a sample. slack is the worst relative margin (negative when violated).
struct VerifyRow {
    std::string name;
    double worst = 0.0;  // worst sampled value of the bounded quantity
    double bound = 0.0;  // bound it is compared against at that sample
    double slack = 0.0;
    std::size_t samples = 0;
    std::size_t violations = 0;
    bool pass = false;
    std::string note;
};

struct VerifyReport {
    std::vector<VerifyRow> rows;
    bool pass() const;
    const VerifyRow* find(const std::string& name) const;
};

struct VerifyOptions {
    std::size_t strip_samples = 1000;
    std::size_t disk_samples = 1000;
    // Lower end of the log-uniform height sample, as a fraction of delta_beta.
    double strip_depth = 1e-4;
};

// psi uniform in [-alpha, alpha], delta log-uniform in [d_lo, d_hi]; deterministic in cfg.seed.
std::vector<PlanePoint> strip_sample(const ScenarioConfig& cfg, std::size_t count, double d_lo, double d_hi);

// Points of the disk of radius a, deterministic in seed.
std::vector<PlanePoint> disk_sample(double a, std::size_t count, std::uint64_t seed);

// flow_envelopes, travel_time_bracket, exit_radius_bracket on the given points.
std::vector<VerifyRow> bracket_rows(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts);

VerifyRow outer_near_identity_row(const ScenarioConfig& cfg, const FieldSpec& spec, std::size_t count);
VerifyRow inner_image_bound_row(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts);
VerifyRow strip_containment_row(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts);
VerifyRow angle_gap_row(const ScenarioConfig& cfg, const FieldSpec& spec);
VerifyRow return_radius_floor_row(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts);

// Certificate, every bound above and the calibration conditions.
VerifyReport run_verify(const ScenarioConfig& cfg, const FieldSpec& spec, const VerifyOptions& opts = {});

nlohmann::ordered_json report_to_json(const VerifyReport& rep);

}  // namespace sfc
