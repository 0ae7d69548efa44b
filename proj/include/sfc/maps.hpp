#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfc/fields.hpp"
#include "sfc/flow.hpp"
#include "sfc/geometry.hpp"
#include "sfc/sampling.hpp"

namespace sfc {

enum class OuterBackendKind { Analytic, Ode };

struct OuterBackend {
    OuterBackendKind kind = OuterBackendKind::Analytic;
    // Half width h of the chart box that receives the outer image (omega_I = delta_I = h).
    double image_halfwidth = 0.95;
    // Analytic backend: scale lambda of the twist rho so that |D rho| <= 1 on the domain disk.
    double rho_scale = 1.0;
    // ODE backend: expected excursion time; the landing is searched in [tau/2, 2 tau].
    double tau_hint = 0.0;
};

struct ScenarioConfig {
    double epsilon = 0.1;
    double eta = 0.01;
    double beta = 0.25;
    double omega_eps = 0.0;
    Eigen::Matrix2d kappa = Eigen::Matrix2d::Identity();
    double psi_eps = 0.0;
    double alpha = 0.0;
    double delta_beta = 0.0;
    double delta2 = 0.0;
    double delta1 = 0.0;
    double r_eps1 = 0.0;
    double delta_I1 = 0.0;
    double omega_I = 0.0;
    double delta_I = 0.0;
    double c_eta = 1.0;
    double k_eta = 1.0;
    double m1 = 0.0;
    double m2 = 0.0;
    OuterBackend outer;

    double tol_scale = 1.0;
    double alpha_cap = kPi / 4;
    double delta2_hint = 1.0;
    int grid_count = 4096;
    std::uint64_t seed = kDefaultSeed;

    IntegratorOptions integrator() const { return IntegratorOptions{}.scaled(tol_scale); }
};

struct InnerResult {
    Vec3 exit_point;
    double travel_time = 0.0;
    double exit_radius = 0.0;
    double exit_angle = 0.0;  // lifted angle of P_L exit_point
    std::optional<Trajectory5> trajectory;
};

// First time y3 reaches 1 from x on M_I with 0 < x3 < 1.
double travel_time(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& x);

InnerResult inner_map(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p,
                      bool keep_trajectory = false);

// Lifted exit angle Phi(psi, delta).
double exit_angle(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p);

// Near-identity planar map N(w) = w + beta lambda rho(w) of the analytic backend.
PlanePoint analytic_N(double beta, double rho_scale, const PlanePoint& w);

Vec3 outer_map_analytic(const ScenarioConfig& cfg, const Vec3& z);
Vec3 outer_map_ode(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& z);
Vec3 outer_map(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& z);

struct ReturnEval {
    PlanePoint image;
    double angle = 0.0;        // lifted exit angle of the inner leg
    double exit_radius = 0.0;
};

// Return map without the strip precondition or containment postcondition.
ReturnEval return_map_eval(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p);

// Return map on [-alpha, alpha] x (0, delta_I1); images of the strip (0, delta_beta] must stay in [-alpha, alpha]^2.
PlanePoint return_map(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p);

// Chart coordinates of K^{-1} E (kappa P_L)^{-1}(v) for the configured backend.
PlanePoint outer_in_kappa_frame(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& v);

struct ConditionRow {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

// Named calibration conditions: beta_bound, box_inside_domain, contraction_exponent, level_separation,
// plus the ordering of the level constants and the delta1 identity.
std::vector<ConditionRow> check_conditions(const ScenarioConfig& cfg, const FieldSpec& spec);

// delta_beta from alpha and kappa.
double delta_beta_formula(const Eigentriple& e, double alpha, const Eigen::Matrix2d& kappa);

struct CalibrationRequest {
    double epsilon = 0.1;
    double eta = 0.01;
    double beta = 0.25;
    double delta2_hint = 1.0;
    double alpha_cap = kPi / 4;
    double omega_eps = 0.0;  // analytic backend only; the ODE backend measures it
    Eigen::Matrix2d kappa = Eigen::Matrix2d::Identity();  // analytic backend only
    OuterBackend outer;
    int grid_count = 4096;
    std::uint64_t seed = kDefaultSeed;
    double tol_scale = 1.0;
};

ScenarioConfig calibrate(const FieldSpec& spec, const CalibrationRequest& req);

struct PsiSelection {
    double m1 = 0.0;  // max of Phi(., delta1) over [-alpha, alpha]
    double m2 = 0.0;  // min of Phi(., delta2) over [-alpha, alpha]
    double psi = 0.0;
};

// Extremum of Phi(., delta) on [-alpha, alpha] by a 64-point scan and Brent refinement.
double phi_extremum(const ScenarioConfig& cfg, const FieldSpec& spec, double delta, bool maximize);

PsiSelection select_psi(const ScenarioConfig& cfg, const FieldSpec& spec);

}  // namespace sfc
