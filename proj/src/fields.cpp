#include "sfc/fields.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>

#include "sfc/errors.hpp"

namespace sfc {

FieldSpec FieldSpec::linear(Eigentriple e) {
    FieldSpec s;
    s.eigen = e;
    return s;
}

FieldSpec FieldSpec::builtin_quadratic(Eigentriple e, double eta0) {
    FieldSpec s;
    s.eigen = e;
    s.kind = NonlinearityKind::BuiltinQuadratic;
    s.eta0 = eta0;
    s.validate();
    return s;
}

FieldSpec FieldSpec::user_field(Eigentriple e, UserNonlinearity g, double r_V, std::string name) {
    FieldSpec s;
    s.eigen = e;
    s.kind = NonlinearityKind::User;
    s.user = std::move(g);
    s.r_V = r_V;
    s.user_name = std::move(name);
    s.validate();
    return s;
}

void FieldSpec::validate() const {
    if (!std::isfinite(eigen.sigma) || !std::isfinite(eigen.mu) || !std::isfinite(eigen.u)) {
        throw Error(ErrorKind::Parameter, "eigenvalues must be finite");
    }
    if (kind == NonlinearityKind::BuiltinQuadratic && !(eta0 >= 0.0)) {
        throw Error(ErrorKind::Parameter, "builtin quadratic strength eta0 must be >= 0");
    }
    if (kind == NonlinearityKind::User) {
        if (!(r_V > 0.0)) throw Error(ErrorKind::Parameter, "user field needs r_V > 0");
        if (!user) throw Error(ErrorKind::Parameter, "user field has no callable");
    }
}

Vec3 eval_A(const Eigentriple& e, const Vec3& x) {
    return {e.sigma * x.x1 + e.mu * x.x2, -e.mu * x.x1 + e.sigma * x.x2, e.u * x.x3};
}

Eigen::Matrix3d matrix_A(const Eigentriple& e) {
    Eigen::Matrix3d a;
    a << e.sigma, e.mu, 0.0, -e.mu, e.sigma, 0.0, 0.0, 0.0, e.u;
    return a;
}

namespace {

Vec3 call_user(const FieldSpec& spec, const Vec3& x) {
    Vec3 g;
    try {
        g = spec.user(x);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& ex) {
        throw Error(ErrorKind::FieldEvaluation, ex.what());
    }
    if (!g.finite()) throw Error(ErrorKind::FieldEvaluation, "user nonlinearity returned a non-finite value");
    return g;
}

}  // namespace

Vec3 eval_V(const FieldSpec& spec, const Vec3& x) {
    const Vec3 ax = eval_A(spec.eigen, x);
    switch (spec.kind) {
        case NonlinearityKind::None: return ax;
        case NonlinearityKind::BuiltinQuadratic: {
            const double k = spec.eta0;
            const Vec3 g{k * x.x1 * x.x3, -k * x.x2 * x.x3, k * x.x3 * (x.x1 * x.x1 + x.x2 * x.x2)};
            return ax + g;
        }
        case NonlinearityKind::User: return ax + call_user(spec, x);
    }
    return ax;
}

Vec3 eval_V_scaled(const FieldSpec& spec, double epsilon, const Vec3& x) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Parameter, "epsilon must be > 0");
    const Vec3 ax = eval_A(spec.eigen, x);
    switch (spec.kind) {
        case NonlinearityKind::None: return ax;
        case NonlinearityKind::BuiltinQuadratic: {
            // (1/eps) g(eps x): the mixed terms pick up eps, the cubic term eps^2.
            const double k = spec.eta0;
            const double e = epsilon;
            const Vec3 g{k * e * x.x1 * x.x3, -k * e * x.x2 * x.x3, k * e * e * x.x3 * (x.x1 * x.x1 + x.x2 * x.x2)};
            return ax + g;
        }
        case NonlinearityKind::User: {
            const Vec3 g = call_user(spec, epsilon * x);
            return ax + (1.0 / epsilon) * g;
        }
    }
    return ax;
}

Vec3 remainder_L(const FieldSpec& spec, double epsilon, const Vec3& x) {
    return project_L(eval_V_scaled(spec, epsilon, x) - eval_A(spec.eigen, x));
}

Vec3 remainder_U(const FieldSpec& spec, double epsilon, const Vec3& x) {
    return project_U(eval_V_scaled(spec, epsilon, x) - eval_A(spec.eigen, x));
}

double coeff_A_cal(const FieldSpec& spec, double epsilon, const Vec3& x) {
    const double r2 = x.x1 * x.x1 + x.x2 * x.x2;
    if (!(r2 > 0.0)) throw Error(ErrorKind::DegenerateRadius, "x1^2 + x2^2 = 0");
    const Vec3 r = remainder_L(spec, epsilon, x);
    return (r.x1 * x.x1 + r.x2 * x.x2) / r2;
}

double coeff_B_cal(const FieldSpec& spec, double epsilon, const Vec3& x) {
    const double r2 = x.x1 * x.x1 + x.x2 * x.x2;
    if (!(r2 > 0.0)) throw Error(ErrorKind::DegenerateRadius, "x1^2 + x2^2 = 0");
    const Vec3 r = remainder_L(spec, epsilon, x);
    return (-r.x1 * x.x2 + r.x2 * x.x1) / r2;
}

Eigen::Matrix3d jacobian_V_scaled(const FieldSpec& spec, double epsilon, const Vec3& y, double h) {
    Eigen::Matrix3d j;
    for (int c = 0; c < 3; ++c) {
        Vec3 dp = y, dm = y;
        double* pp = c == 0 ? &dp.x1 : c == 1 ? &dp.x2 : &dp.x3;
        double* pm = c == 0 ? &dm.x1 : c == 1 ? &dm.x2 : &dm.x3;
        *pp += h;
        *pm -= h;
        const Vec3 d = (1.0 / (2.0 * h)) * (eval_V_scaled(spec, epsilon, dp) - eval_V_scaled(spec, epsilon, dm));
        j(0, c) = d.x1;
        j(1, c) = d.x2;
        j(2, c) = d.x3;
    }
    return j;
}

double spectral_norm_power(const Eigen::Matrix3d& m, int iterations) {
    const Eigen::Matrix3d mtm = m.transpose() * m;
    Eigen::Vector3d v(1.0, 0.7, 0.4);
    double lambda = 0.0;
    for (int i = 0; i < iterations; ++i) {
        Eigen::Vector3d w = mtm * v;
        const double n = w.norm();
        if (n == 0.0) return 0.0;
        v = w / n;
        lambda = n;
    }
    return std::sqrt(lambda);
}

double c_eta(const Eigentriple& e, double eta) {
    return (e.u + eta) * (e.mu + eta) / ((e.u - eta) * (e.mu - eta));
}

double k_eta(const Eigentriple& e, double eta) { return std::exp(-6.0 * kPi * (e.u + eta) / (e.mu - eta)); }

double p_eta(const Eigentriple& e, double eta) { return (-e.sigma + eta) / (e.u - eta); }

double q_eta(const Eigentriple& e, double eta) { return (-e.sigma - eta) / (e.u + eta); }

bool EtaCertificate::pass() const { return first_failure().empty(); }

std::string EtaCertificate::first_failure() const {
    if (!spectrum_ok) return "spectrum_signs";
    if (!hypothesis_H) return "hypothesis_H";
    if (!eta_positive) return "eta_positive";
    if (!eta_below_mu) return "eta_below_mu";
    if (!eta_below_half_sigma) return "eta_below_half_sigma";
    if (!eta_below_half_u) return "eta_below_half_u";
    if (!contraction_exponent) return "contraction_exponent";
    if (!eta_ok) return "eta_measured";
    if (!jacobian_ok) return "jacobian_deviation";
    return {};
}

EtaCertificate check_hypotheses(const FieldSpec& spec, double epsilon, double eta_target, int grid_count,
                                std::uint64_t seed) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Parameter, "epsilon must be > 0");
    if (grid_count < 1000) throw Error(ErrorKind::Parameter, "grid_count must be at least 1000");
    EtaCertificate c;
    c.eta_target = eta_target;
    c.epsilon = epsilon;
    c.grid_count = grid_count;
    c.seed = seed;
    const Eigentriple& e = spec.eigen;
    const Eigen::Matrix3d a = matrix_A(e);

    constexpr double kSkip = 1e-9;
    for (const Vec3& x : b1_grid(static_cast<std::size_t>(grid_count), seed)) {
        const Vec3 rem = eval_V_scaled(spec, epsilon, x) - eval_A(e, x);
        const double pu = radius_U(x);
        const double pl = radius_L(x);
        if (pu >= kSkip) {
            const double qu = std::abs(rem.x3) / pu;
            if (qu > c.eta_measured) {
                c.eta_measured = qu;
                c.max_violation_point = x;
            }
        }
        if (pl >= kSkip) {
            const double ql = std::hypot(rem.x1, rem.x2) / pl;
            if (ql > c.eta_measured) {
                c.eta_measured = ql;
                c.max_violation_point = x;
            }
        }
        const double jd = spectral_norm_power(jacobian_V_scaled(spec, epsilon, x) - a);
        if (jd > c.jacobian_deviation) {
            c.jacobian_deviation = jd;
            c.max_jacobian_point = x;
        }
    }

    const double eta = eta_target;
    c.eta_ok = c.eta_measured <= eta;
    c.jacobian_ok = c.jacobian_deviation <= eta;
    c.spectrum_ok = e.signs_ok();
    c.hypothesis_H = e.hypothesis_H();
    c.eta_positive = eta > 0.0;
    c.eta_below_mu = eta < e.mu;
    c.eta_below_half_sigma = eta < -e.sigma / 2.0;
    c.eta_below_half_u = eta < e.u / 2.0;
    c.contraction_exponent = c.eta_below_half_u && c.eta_below_mu && c_eta(e, eta) * p_eta(e, eta) < 1.0;
    return c;
}

BlockConjugation conjugate_to_blockform(const Eigen::Matrix3d& M) {
    Eigen::EigenSolver<Eigen::Matrix3d> es(M);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::Spectrum, "eigen decomposition failed");
    const auto vals = es.eigenvalues();
    const auto vecs = es.eigenvectors();
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    int real_idx = -1;
    int complex_idx = -1;
    int n_real = 0;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(vals[i].imag()) <= 1e-12 * scale) {
            ++n_real;
            real_idx = i;
        } else if (vals[i].imag() > 0.0) {
            complex_idx = i;
        }
    }
    if (n_real != 1 || complex_idx < 0) {
        throw Error(ErrorKind::Spectrum, "spectrum is not one real eigenvalue plus a complex pair");
    }
    BlockConjugation out;
    out.eigen.u = vals[real_idx].real();
    out.eigen.sigma = vals[complex_idx].real();
    out.eigen.mu = vals[complex_idx].imag();
    if (!(out.eigen.u > 0.0) || !(out.eigen.sigma < 0.0)) {
        throw Error(ErrorKind::Spectrum, "need real eigenvalue u > 0 and complex pair with negative real part");
    }
    // Columns p1 = Re v, p2 = Im v for M v = (sigma + i mu) v, p3 = real eigenvector; then M P = P A.
    Eigen::Matrix3d P;
    const Eigen::Vector3cd v = vecs.col(complex_idx);
    P.col(0) = v.real();
    P.col(1) = v.imag();
    P.col(2) = vecs.col(real_idx).real();
    if (std::abs(P.determinant()) < 1e-14) throw Error(ErrorKind::Spectrum, "degenerate eigenbasis");
    out.I = P.inverse();
    return out;
}

}  // namespace sfc
