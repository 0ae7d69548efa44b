#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "sfc/maps.hpp"

namespace sfc {

// Base-curve parameters of deep refinements are far below double resolution.
using Wide = boost::multiprecision::cpp_bin_float_50;

struct WidePoint {
    Wide psi;
    Wide delta;
};

enum class Membership { M0, M1, Neither };

const char* to_string(Membership m);

inline constexpr double kBoundaryTol = 1e-10;  // angle distance treated as a band boundary
inline constexpr double kLevelTol = 1e-10;     // slack on level containment
inline constexpr double kStepTol = 1e-8;       // re-simulation tolerance per orbit step
inline constexpr double kModelSpan = 1e-9;     // orbit spread below which R is replaced by its quadratic model
inline constexpr double kAngleJump = kPi / 8;  // sampling refinement threshold for the exit angle
inline constexpr std::size_t kInitialSamples = 256;
inline constexpr std::size_t kMaxSamples = std::size_t{1} << 20;

Membership classify_angle(const ScenarioConfig& cfg, double phi);

// Band of the lifted exit angle; p must lie in [-alpha, alpha] x [delta1, delta2].
Membership membership(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p);

// m2 - m1 for the configured levels.
double angle_gap(const ScenarioConfig& cfg, const FieldSpec& spec);

struct SymbolSequence {
    std::vector<int> symbols;
    int offset = 0;
};

// Parses a string over {0, 1}; empty or other characters are a usage error.
SymbolSequence parse_symbols(const std::string& text, int offset = 0);

struct CurveSegment {
    Wide t_lo;
    Wide t_hi;
    int depth = 0;
};

struct Crossings {
    // Level parameter m of the depth-j curve (its second coordinate) at each crossing.
    double m_a0 = 0.0, m_b0 = 0.0, m_a1 = 0.0, m_b1 = 0.0;
    // Angle crossings bounding the two bands: psi-pi .. psi and psi .. psi+pi.
    double m_band0_lo = 0.0, m_band0_hi = 0.0, m_band1_lo = 0.0, m_band1_hi = 0.0;
    // Base parameters, ordered a0 < b0 < a1 < b1 after reparametrization.
    Wide a0, b0, a1, b1;
    bool reversed = false;  // t decreases as m increases on this curve
    std::size_t samples = 0;
};

struct CurveSample {
    Wide t;
    double m = 0.0;      // second coordinate of the curve point
    double psi = 0.0;    // first coordinate of the curve point
    double phi = 0.0;    // lifted exit angle at the curve point
    double image_psi = 0.0;
    double level = 0.0;  // second coordinate of its return-map image
};

struct ItineraryResult {
    SymbolSequence symbols;
    Wide t_lo, t_hi, witness_t;
    std::vector<std::pair<Wide, Wide>> intervals;  // after each refinement step
    std::vector<PlanePoint> orbit;
    std::vector<double> angles;
    std::vector<Membership> memberships;
    std::vector<double> levels;
    std::vector<double> step_residuals;
    double tol_scale = 1.0;
    std::optional<double> window_discrepancy;
};

// Nested curve refinement with a prefix cache shared by all requested sequences.
class ItineraryBuilder {
public:
    ItineraryBuilder(const ScenarioConfig& cfg, const FieldSpec& spec);
    ~ItineraryBuilder();
    ItineraryBuilder(const ItineraryBuilder&) = delete;
    ItineraryBuilder& operator=(const ItineraryBuilder&) = delete;

    const Crossings& crossings(const std::vector<int>& prefix);
    CurveSegment segment(const std::vector<int>& prefix);
    std::vector<CurveSample> samples(const std::vector<int>& prefix);
    ItineraryResult forward(const SymbolSequence& seq);

    const ScenarioConfig& config() const;
    std::size_t node_count() const;
    std::size_t evaluations() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Crossings on the base segment c(t) = (0, t), t in [delta1, delta2].
Crossings find_crossings(const ScenarioConfig& cfg, const FieldSpec& spec, const CurveSegment& seg);

// Forward itinerary with one retry at 100x tighter integrator tolerances on refinement inconsistency.
ItineraryResult build_forward_itinerary(const ScenarioConfig& cfg, const FieldSpec& spec, const SymbolSequence& seq,
                                        int n);

// Sequence given on indices -window .. n_forward-1 (offset = -window); the orbit is re-indexed accordingly.
// When compare_previous is set the window-1 orbit is also built and its distance at index 0 reported.
ItineraryResult build_window_trajectory(const ScenarioConfig& cfg, const FieldSpec& spec, const SymbolSequence& seq,
                                        int window, int n_forward, bool compare_previous = false);

// Independent re-check of a realized orbit: memberships, levels and per-step residuals.
struct RealizationCheck {
    bool memberships_ok = true;
    bool levels_ok = true;
    bool steps_ok = true;
    int first_bad_index = -1;
    double worst_level_excess = 0.0;
    double worst_step = 0.0;
    bool ok() const { return memberships_ok && levels_ok && steps_ok; }
};

RealizationCheck check_realization(const ScenarioConfig& cfg, const FieldSpec& spec, const ItineraryResult& r);

std::string wide_to_string(const Wide& w);

}  // namespace sfc
