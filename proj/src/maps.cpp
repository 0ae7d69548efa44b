#include "sfc/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "sfc/errors.hpp"

namespace sfc {

namespace {

double sigma_min(const Eigen::Matrix2d& m) {
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
    return svd.singularValues()(1);
}

double sigma_max(const Eigen::Matrix2d& m) {
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
    return svd.singularValues()(0);
}

PlanePoint apply(const Eigen::Matrix2d& m, double a, double b) {
    return {m(0, 0) * a + m(0, 1) * b, m(1, 0) * a + m(1, 1) * b};
}

double escape_rate(const ScenarioConfig& cfg, const FieldSpec& spec) {
    const double rate = spec.eigen.u - cfg.eta;
    if (!(rate > 0.0)) throw Error(ErrorKind::Parameter, "u - eta must be positive");
    return rate;
}

void require_inner_start(const PlanePoint& p) {
    if (!(p.psi > -kPi && p.psi < kPi)) throw Error(ErrorKind::Domain, "psi outside (-pi, pi)");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw Error(ErrorKind::Domain, "delta outside (0, 1)");
}

// |D rho| on the disk |w|^2 <= s is bounded by g(min(s, 3)) with g(s) = (s^2 + 3 s) / (1 + s)^2.
double rho_derivative_bound(double s) {
    const double t = std::min(s, 3.0);
    return (t * t + 3.0 * t) / ((1.0 + t) * (1.0 + t));
}

}  // namespace

double travel_time(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& x) {
    if (std::abs(radius_L(x) - 1.0) > kTolSection) throw Error(ErrorKind::NotOnSection, "x is not on M_I");
    if (!(x.x3 > 0.0 && x.x3 < 1.0)) throw Error(ErrorKind::Domain, "x3 outside (0, 1)");
    const double t_cap = 10.0 * (-std::log(x.x3)) / escape_rate(cfg, spec);
    IntegratorOptions opts = cfg.integrator();
    opts.store = false;
    opts.require_rising_y3 = true;
    const Flow3 f = integrate(spec, cfg.epsilon, x, t_cap, {EventSpec::y3_level(1.0)}, opts);
    if (!f.event) throw Error(ErrorKind::EscapeFailure, "no exit through y3 = 1 before t_cap");
    return f.event->t;
}

InnerResult inner_map(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p, bool keep_trajectory) {
    require_inner_start(p);
    const Vec3 x = chart_K(p, cfg.omega_eps);
    const double t_cap = 10.0 * (-std::log(p.delta)) / escape_rate(cfg, spec);
    IntegratorOptions opts = cfg.integrator();
    opts.store = keep_trajectory;
    opts.require_rising_y3 = true;
    Flow5 f = integrate_polar(spec, cfg.epsilon, x, cfg.omega_eps + p.psi, t_cap, {EventSpec::y3_level(1.0)}, opts);
    if (!f.event) throw Error(ErrorKind::EscapeFailure, "no exit through y3 = 1 before t_cap");
    const auto& s = f.event->state;
    InnerResult res;
    res.exit_point = {s[0], s[1], s[2]};
    res.travel_time = f.event->t;
    res.exit_radius = std::hypot(s[0], s[1]);
    // Branch from the integrated lift, fractional part from the exit point itself.
    res.exit_angle = s[4] + wrap_to_pi(std::atan2(s[1], s[0]) - s[4]);
    if (keep_trajectory) res.trajectory = std::move(f.trajectory);
    return res;
}

double exit_angle(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p) {
    return inner_map(cfg, spec, p).exit_angle;
}

PlanePoint analytic_N(double beta, double rho_scale, const PlanePoint& w) {
    const double s = w.psi * w.psi + w.delta * w.delta;
    const double f = beta * rho_scale * s / (1.0 + s);
    return {w.psi + f * w.delta, w.delta - f * w.psi};
}

Vec3 outer_map_analytic(const ScenarioConfig& cfg, const Vec3& z) {
    if (std::abs(z.x3 - 1.0) > kTolSection) throw Error(ErrorKind::NotOnSection, "z is not on M_E");
    if (!(radius_L(z) < cfg.r_eps1)) throw Error(ErrorKind::OutOfDomain, "|P_L z| >= r_eps1");
    const PlanePoint w = apply(cfg.kappa, z.x1, z.x2);
    return chart_K(analytic_N(cfg.beta, cfg.outer.rho_scale, w), cfg.omega_eps);
}

Vec3 outer_map_ode(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& z) {
    if (std::abs(z.x3 - 1.0) > kTolSection) throw Error(ErrorKind::NotOnSection, "z is not on M_E");
    if (cfg.r_eps1 > 0.0 && !(radius_L(z) < cfg.r_eps1)) throw Error(ErrorKind::OutOfDomain, "|P_L z| >= r_eps1");
    const double tau = cfg.outer.tau_hint;
    if (!(tau > 0.0)) throw Error(ErrorKind::Parameter, "tau_hint must be positive");
    IntegratorOptions opts = cfg.integrator();
    opts.store = false;
    opts.event_t_min = 0.5 * tau;
    const Flow3 f = integrate(spec, cfg.epsilon, z, 2.0 * tau, {EventSpec::cylinder_radius(1.0)}, opts);
    if (!f.event) throw Error(ErrorKind::OuterExcursion, "no landing on M_I within [tau/2, 2 tau]");
    const auto& s = f.event->state;
    return {s[0], s[1], s[2]};
}

Vec3 outer_map(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& z) {
    return cfg.outer.kind == OuterBackendKind::Analytic ? outer_map_analytic(cfg, z) : outer_map_ode(cfg, spec, z);
}

ReturnEval return_map_eval(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p) {
    const InnerResult in = inner_map(cfg, spec, p);
    ReturnEval out;
    out.angle = in.exit_angle;
    out.exit_radius = in.exit_radius;
    if (cfg.outer.kind == OuterBackendKind::Analytic) {
        if (!(in.exit_radius < cfg.r_eps1)) throw Error(ErrorKind::OutOfDomain, "|P_L z| >= r_eps1");
        // K^{-1} of chart_K(N(w)) is N(w) itself whenever the chart is defined there.
        const PlanePoint n = analytic_N(cfg.beta, cfg.outer.rho_scale, apply(cfg.kappa, in.exit_point.x1, in.exit_point.x2));
        if (!(std::abs(n.psi) < kPi - kChartCutTol)) throw Error(ErrorKind::ChartCut, "outer image on the chart cut");
        out.image = n;
    } else {
        Vec3 z = in.exit_point;
        z.x3 = 1.0;
        out.image = chart_K_inverse(outer_map_ode(cfg, spec, z), cfg.omega_eps);
    }
    return out;
}

PlanePoint return_map(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& p) {
    if (!(std::abs(p.psi) <= cfg.alpha)) throw Error(ErrorKind::Domain, "psi outside [-alpha, alpha]");
    if (!(p.delta > 0.0 && p.delta < cfg.delta_I1)) throw Error(ErrorKind::Domain, "delta outside (0, delta_I1)");
    const PlanePoint img = return_map_eval(cfg, spec, p).image;
    if (p.delta <= cfg.delta_beta && !(std::abs(img.psi) <= cfg.alpha && std::abs(img.delta) <= cfg.alpha)) {
        throw Error(ErrorKind::CalibrationFailure, "return map image leaves [-alpha, alpha]^2");
    }
    return img;
}

PlanePoint outer_in_kappa_frame(const ScenarioConfig& cfg, const FieldSpec& spec, const PlanePoint& v) {
    if (cfg.outer.kind == OuterBackendKind::Analytic) return analytic_N(cfg.beta, cfg.outer.rho_scale, v);
    const PlanePoint zl = apply(cfg.kappa.inverse(), v.psi, v.delta);
    return chart_K_inverse(outer_map_ode(cfg, spec, {zl.psi, zl.delta, 1.0}), cfg.omega_eps);
}

double delta_beta_formula(const Eigentriple& e, double alpha, const Eigen::Matrix2d& kappa) {
    return std::pow(2.0 * alpha / (3.0 * (sigma_max(kappa) + 1.0)), 3.0 * e.u / (-e.sigma));
}

std::vector<ConditionRow> check_conditions(const ScenarioConfig& cfg, const FieldSpec& spec) {
    const Eigentriple& e = spec.eigen;
    const double p = p_eta(e, cfg.eta);
    std::vector<ConditionRow> rows;
    rows.push_back({"beta_bound", cfg.beta, 0.5, cfg.beta > 0.0 && cfg.beta <= 0.5});
    const double box = std::min(cfg.omega_I, cfg.delta_I1);
    rows.push_back({"box_inside_domain", cfg.alpha, box, cfg.alpha > 0.0 && cfg.alpha < box});
    const double ce = cfg.c_eta * p;
    rows.push_back({"contraction_exponent", ce, 1.0, ce < 1.0});
    const double lhs = 2.0 * std::sqrt(2.0) * cfg.delta2;
    const double rhs = sigma_min(cfg.kappa) * std::pow(cfg.k_eta, p) * std::pow(cfg.delta2, cfg.c_eta * p);
    rows.push_back({"level_separation", lhs, rhs, lhs < rhs});
    rows.push_back({"delta1_below_delta2", cfg.delta1, cfg.delta2, cfg.delta1 > 0.0 && cfg.delta1 < cfg.delta2});
    rows.push_back({"delta2_below_delta_beta", cfg.delta2, cfg.delta_beta, cfg.delta2 <= cfg.delta_beta});
    rows.push_back({"delta_beta_below_two_thirds_alpha", cfg.delta_beta, 2.0 * cfg.alpha / 3.0,
                    cfg.delta_beta <= 2.0 * cfg.alpha / 3.0});
    const double d1 = cfg.k_eta * std::pow(cfg.delta2, cfg.c_eta);
    rows.push_back({"delta1_identity", cfg.delta1, d1, cfg.delta1 == d1});
    return rows;
}

double phi_extremum(const ScenarioConfig& cfg, const FieldSpec& spec, double delta, bool maximize) {
    const double a = cfg.alpha;
    const double sign = maximize ? -1.0 : 1.0;
    auto f = [&](double psi) { return sign * exit_angle(cfg, spec, {psi, delta}); };
    constexpr int kScan = 64;
    std::vector<double> xs(kScan), fs(kScan);
    int best = 0;
    for (int k = 0; k < kScan; ++k) {
        xs[k] = -a + 2.0 * a * k / (kScan - 1);
        fs[k] = f(xs[k]);
        if (fs[k] < fs[best]) best = k;
    }
    const double lo = xs[std::max(best - 1, 0)];
    const double hi = xs[std::min(best + 1, kScan - 1)];
    const auto r = boost::math::tools::brent_find_minima(f, lo, hi, 40);
    const double fv = std::min(r.second, fs[best]);
    return sign * fv;
}

PsiSelection select_psi(const ScenarioConfig& cfg, const FieldSpec& spec) {
    PsiSelection sel;
    sel.m1 = phi_extremum(cfg, spec, cfg.delta1, true);
    sel.m2 = phi_extremum(cfg, spec, cfg.delta2, false);
    if (sel.m1 + 4.0 * kPi > sel.m2) {
        throw Error(ErrorKind::GapFailure, "angle gap m2 - m1 = " + std::to_string(sel.m2 - sel.m1) + " is below 4 pi");
    }
    const PlanePoint w = apply(cfg.kappa.inverse(), 0.0, 1.0);
    const double theta = std::atan2(w.delta, w.psi);
    sel.psi = theta + kTwoPi * std::ceil((sel.m1 + kPi - theta) / kTwoPi);
    if (sel.psi > sel.m2 - kPi) throw Error(ErrorKind::GapFailure, "no lift of the w direction in [m1 + pi, m2 - pi]");
    return sel;
}

namespace {

// Every sample of the circle of radius r maps into the open chart box of half width h.
bool circle_image_in_box(const ScenarioConfig& cfg, const FieldSpec& spec, double r, double h) {
    constexpr int kSamples = 1024;
    try {
        for (int k = 0; k < kSamples; ++k) {
            const double th = kTwoPi * k / kSamples;
            const Vec3 z{r * std::cos(th), r * std::sin(th), 1.0};
            PlanePoint img;
            if (cfg.outer.kind == OuterBackendKind::Analytic) {
                img = analytic_N(cfg.beta, cfg.outer.rho_scale, apply(cfg.kappa, z.x1, z.x2));
            } else {
                img = chart_K_inverse(outer_map_ode(cfg, spec, z), cfg.omega_eps);
            }
            if (!(std::abs(img.psi) < h && std::abs(img.delta) < h)) return false;
        }
    } catch (const Error&) {
        return false;
    }
    return true;
}

// Near-identity contract on [-alpha, alpha]^2 in the kappa frame, sampled.
bool near_identity_holds(const ScenarioConfig& cfg, const FieldSpec& spec, double alpha, std::size_t count) {
    const Eigen::Matrix2d kinv = cfg.kappa.inverse();
    std::vector<PlanePoint> pts;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            if (i || j) pts.push_back({alpha * i, alpha * j});
    for (const auto& q : halton2(count, cfg.seed)) pts.push_back({alpha * (2.0 * q[0] - 1.0), alpha * (2.0 * q[1] - 1.0)});
    try {
        for (const auto& v : pts) {
            const PlanePoint zl = apply(kinv, v.psi, v.delta);
            if (!(std::hypot(zl.psi, zl.delta) < cfg.r_eps1)) return false;
            const PlanePoint img = outer_in_kappa_frame(cfg, spec, v);
            if (!(std::hypot(img.psi - v.psi, img.delta - v.delta) <= cfg.beta * v.norm())) return false;
        }
    } catch (const Error&) {
        return false;
    }
    return true;
}

}  // namespace

ScenarioConfig calibrate(const FieldSpec& spec, const CalibrationRequest& req) {
    if (!(req.beta > 0.0 && req.beta <= 0.5)) throw Error(ErrorKind::Parameter, "beta_bound violated: beta must lie in (0, 1/2]");
    if (!(req.epsilon > 0.0)) throw Error(ErrorKind::Parameter, "epsilon must be positive");
    if (!(req.alpha_cap > 0.0)) throw Error(ErrorKind::Parameter, "alpha_cap must be positive");
    if (!(req.delta2_hint > 0.0)) throw Error(ErrorKind::Parameter, "delta2_hint must be positive");
    const double h = req.outer.image_halfwidth;
    if (!(h > 0.0 && h < kPi - kChartCutTol)) throw Error(ErrorKind::Parameter, "image_halfwidth must lie in (0, pi)");

    const EtaCertificate cert = check_hypotheses(spec, req.epsilon, req.eta, req.grid_count, req.seed);
    if (!cert.pass()) throw Error(ErrorKind::CalibrationInfeasible, "certificate fails: " + cert.first_failure());

    const Eigentriple& e = spec.eigen;
    ScenarioConfig cfg;
    cfg.epsilon = req.epsilon;
    cfg.eta = req.eta;
    cfg.beta = req.beta;
    cfg.outer = req.outer;
    cfg.tol_scale = req.tol_scale;
    cfg.alpha_cap = req.alpha_cap;
    cfg.delta2_hint = req.delta2_hint;
    cfg.grid_count = req.grid_count;
    cfg.seed = req.seed;
    cfg.c_eta = c_eta(e, req.eta);
    cfg.k_eta = k_eta(e, req.eta);
    cfg.omega_I = h;
    cfg.delta_I = h;

    // Exit-plane points inside B1 form the domain of the outer map.
    double r_dom = 1.0;
    if (cfg.outer.kind == OuterBackendKind::Analytic) {
        if (std::abs(req.kappa.determinant()) < 1e-12) throw Error(ErrorKind::Parameter, "kappa must be invertible");
        cfg.omega_eps = req.omega_eps;
        cfg.kappa = req.kappa;
        r_dom = std::min(1.0, h * std::sqrt(2.0) / ((1.0 - cfg.beta) * sigma_min(cfg.kappa)));
        const double s_max = std::pow(r_dom * sigma_max(cfg.kappa), 2);
        cfg.outer.rho_scale = 1.0 / std::max(1.0, rho_derivative_bound(s_max));
    } else {
        // Landing angle and kappa measured from the excursion through e3.
        ScenarioConfig probe = cfg;
        probe.r_eps1 = 0.0;
        const Vec3 land = outer_map_ode(probe, spec, {0.0, 0.0, 1.0});
        cfg.omega_eps = std::atan2(land.x2, land.x1);
        probe.omega_eps = cfg.omega_eps;
        constexpr double step = 1e-6;
        Eigen::Matrix2d jac;
        for (int c = 0; c < 2; ++c) {
            const Vec3 zp{c == 0 ? step : 0.0, c == 1 ? step : 0.0, 1.0};
            const Vec3 zm{c == 0 ? -step : 0.0, c == 1 ? -step : 0.0, 1.0};
            const PlanePoint a = chart_K_inverse(outer_map_ode(probe, spec, zp), cfg.omega_eps);
            const PlanePoint b = chart_K_inverse(outer_map_ode(probe, spec, zm), cfg.omega_eps);
            jac(0, c) = (a.psi - b.psi) / (2.0 * step);
            jac(1, c) = (a.delta - b.delta) / (2.0 * step);
        }
        if (std::abs(jac.determinant()) < 1e-12) throw Error(ErrorKind::CalibrationInfeasible, "measured kappa is singular");
        cfg.kappa = jac;
    }

    // r_eps1: largest radius whose circle lands inside the chart box.
    {
        ScenarioConfig probe = cfg;
        probe.r_eps1 = 0.0;
        double lo = 0.0, hi = r_dom;
        if (circle_image_in_box(probe, spec, hi, h)) {
            lo = hi;
        } else {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (circle_image_in_box(probe, spec, mid, h) ? lo : hi) = mid;
            }
        }
        if (!(lo > 1e-6)) throw Error(ErrorKind::CalibrationInfeasible, "no admissible outer domain radius");
        cfg.r_eps1 = lo * (1.0 - 1e-9);
    }

    // delta_I1: strip heights whose inner images stay inside the outer domain.
    {
        const double q = q_eta(e, cfg.eta);
        double d = std::min(std::pow(cfg.r_eps1, 1.0 / q), cfg.delta_I) * (1.0 - 1e-9);
        d = std::min(d, 1.0 - 1e-9);
        bool ok = false;
        for (int attempt = 0; attempt < 60 && !ok; ++attempt) {
            ok = true;
            for (int k = 0; k < 33 && ok; ++k) {
                const double psi = cfg.omega_I * (1.0 - 1e-9) * (2.0 * k / 32.0 - 1.0);
                ok = inner_map(cfg, spec, {psi, d}).exit_radius < cfg.r_eps1;
            }
            if (!ok) d *= 0.9;
        }
        if (!ok) throw Error(ErrorKind::CalibrationInfeasible, "no admissible inner strip height");
        cfg.delta_I1 = d;
    }

    // alpha: largest value with the near-identity contract, below the box bound.
    {
        const double cap = std::min(req.alpha_cap, std::min(cfg.omega_I, cfg.delta_I1) * (1.0 - 1e-9));
        double a = cap;
        if (!near_identity_holds(cfg, spec, a, 1000)) {
            double lo = 0.0, hi = cap;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (near_identity_holds(cfg, spec, mid, 1000) ? lo : hi) = mid;
            }
            a = lo;
        }
        while (a > 1e-6 && !near_identity_holds(cfg, spec, a, 10000)) a *= 0.9;
        if (!(a > 1e-6)) throw Error(ErrorKind::CalibrationInfeasible, "no alpha above 1e-6 satisfies the near-identity bound");
        cfg.alpha = a;
    }

    cfg.delta_beta = delta_beta_formula(e, cfg.alpha, cfg.kappa);

    // delta2: halve until the level separation holds.
    {
        const double p = p_eta(e, cfg.eta);
        const double smin = sigma_min(cfg.kappa);
        double d2 = std::min(req.delta2_hint, cfg.delta_beta);
        auto separated = [&](double d) {
            return 2.0 * std::sqrt(2.0) * d < smin * std::pow(cfg.k_eta, p) * std::pow(d, cfg.c_eta * p);
        };
        while (!separated(d2)) {
            d2 *= 0.5;
            if (d2 < 1e-12) throw Error(ErrorKind::PrecisionInfeasible, "level_separation unsatisfiable above delta2 = 1e-12");
        }
        cfg.delta2 = d2;
        cfg.delta1 = cfg.k_eta * std::pow(d2, cfg.c_eta);
    }

    const PsiSelection sel = select_psi(cfg, spec);
    cfg.m1 = sel.m1;
    cfg.m2 = sel.m2;
    cfg.psi_eps = sel.psi;

    for (const auto& row : check_conditions(cfg, spec)) {
        if (!row.pass) throw Error(ErrorKind::CalibrationFailure, "condition " + row.name + " fails after calibration");
    }
    return cfg;
}

}  // namespace sfc
