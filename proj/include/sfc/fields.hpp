#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "sfc/geometry.hpp"
#include "sfc/sampling.hpp"

namespace sfc {

// Eigenvalues u > 0 and sigma +- i mu of the linear part.
struct Eigentriple {
    double sigma = -0.5;
    double mu = 1.0;
    double u = 1.0;

    bool hypothesis_H() const { return sigma + u > 0.0; }
    bool signs_ok() const { return sigma < 0.0 && mu > 0.0 && u > 0.0; }
};

enum class NonlinearityKind { None, BuiltinQuadratic, User };

// Nonlinear part g of V(x) = A x + g(x) for user-supplied fields.
using UserNonlinearity = std::function<Vec3(const Vec3&)>;

struct FieldSpec {
    Eigentriple eigen;
    NonlinearityKind kind = NonlinearityKind::None;
    double eta0 = 0.0;        // builtin quadratic strength
    double r_V = 1.0;         // invariance radius declared for user fields
    std::string user_name;    // registry key for user fields loaded from JSON
    UserNonlinearity user;

    static FieldSpec linear(Eigentriple e);
    static FieldSpec builtin_quadratic(Eigentriple e, double eta0);
    static FieldSpec user_field(Eigentriple e, UserNonlinearity g, double r_V, std::string name = "user");

    void validate() const;
};

Vec3 eval_A(const Eigentriple& e, const Vec3& x);
Eigen::Matrix3d matrix_A(const Eigentriple& e);

Vec3 eval_V(const FieldSpec& spec, const Vec3& x);
// V_eps(x) = V(eps x) / eps.
Vec3 eval_V_scaled(const FieldSpec& spec, double epsilon, const Vec3& x);

Vec3 remainder_L(const FieldSpec& spec, double epsilon, const Vec3& x);
Vec3 remainder_U(const FieldSpec& spec, double epsilon, const Vec3& x);

// Radial and tangential remainder coefficients used by the polar equations.
double coeff_A_cal(const FieldSpec& spec, double epsilon, const Vec3& x);
double coeff_B_cal(const FieldSpec& spec, double epsilon, const Vec3& x);

// Central-difference Jacobian of V_eps at y (equal to DV(eps y)).
Eigen::Matrix3d jacobian_V_scaled(const FieldSpec& spec, double epsilon, const Vec3& y, double h = 1e-5);

// Operator 2-norm by power iteration on M^T M.
double spectral_norm_power(const Eigen::Matrix3d& m, int iterations = 20);

// Scalar constants derived from (eigen, eta).
double c_eta(const Eigentriple& e, double eta);
double k_eta(const Eigentriple& e, double eta);
// Exponent (-sigma+eta)/(u-eta) of the lower radius bracket.
double p_eta(const Eigentriple& e, double eta);
// Exponent (-sigma-eta)/(u+eta) of the upper radius bracket.
double q_eta(const Eigentriple& e, double eta);

struct EtaCertificate {
    double eta_target = 0.0;
    double epsilon = 0.0;
    double eta_measured = 0.0;        // max of the two remainder quotients
    double jacobian_deviation = 0.0;  // max of |DV(eps y) - A|
    int grid_count = 0;
    std::uint64_t seed = kDefaultSeed;
    Vec3 max_violation_point;
    Vec3 max_jacobian_point;

    bool eta_ok = false;
    bool jacobian_ok = false;
    bool spectrum_ok = false;      // sigma < 0 < mu, u > 0
    bool hypothesis_H = false;     // sigma + u > 0
    bool eta_positive = false;
    bool eta_below_mu = false;
    bool eta_below_half_sigma = false;  // eta < -sigma/2
    bool eta_below_half_u = false;      // eta < u/2
    bool contraction_exponent = false;  // c_eta (-sigma+eta)/(u-eta) < 1

    bool pass() const;
    // Name of the first failing flag, empty when all pass.
    std::string first_failure() const;
};

EtaCertificate check_hypotheses(const FieldSpec& spec, double epsilon, double eta_target, int grid_count = 4096,
                                std::uint64_t seed = kDefaultSeed);

struct BlockConjugation {
    Eigentriple eigen;
    Eigen::Matrix3d I;  // I M I^{-1} = A
};

BlockConjugation conjugate_to_blockform(const Eigen::Matrix3d& M);

}  // namespace sfc
