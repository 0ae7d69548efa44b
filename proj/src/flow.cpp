#include "sfc/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "sfc/errors.hpp"
#include "sfc/io.hpp"

namespace sfc {

double EventSpec::operator()(double y1, double y2, double y3) const {
    switch (kind) {
        case EventKind::HitY3Level: return y3 - value;
        case EventKind::HitCylinderRadius: return std::hypot(y1, y2) - value;
        case EventKind::ExitB1: return std::max(std::hypot(y1, y2), std::abs(y3)) - 1.0 - value;
    }
    return 0.0;
}

PolarState to_polar_state(const std::array<double, 5>& s) { return {{s[0], s[1], s[2]}, s[3], s[4]}; }

template <int N>
typename Trajectory<N>::State Trajectory<N>::at(double t) const {
    if (times.empty()) throw Error(ErrorKind::Domain, "empty trajectory");
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
    const double th = (t - times[k]) / step_h[k];
    const double th1 = 1.0 - th;
    const auto& d = dense[k];
    State y;
    for (int i = 0; i < N; ++i) {
        y[i] = d[0][i] + th * (d[1][i] + th1 * (d[2][i] + th * (d[3][i] + th1 * d[4][i])));
    }
    return y;
}

template struct Trajectory<3>;
template struct Trajectory<5>;

namespace {

// Dormand-Prince 5(4) coefficients with the continuous extension of Hairer, Norsett and Wanner.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

template <int N>
using State = std::array<double, N>;

// Error scale per component; y1 and y2 share the scale of |P_L y| so that zero crossings of a
// rotating component do not force tiny steps.
template <int N>
void error_scales(const State<N>& y0, const State<N>& y1, double atol, double rtol, State<N>& sc) {
    const double l0 = std::hypot(y0[0], y0[1]);
    const double l1 = std::hypot(y1[0], y1[1]);
    const double sl = atol + rtol * std::max(l0, l1);
    sc[0] = sl;
    sc[1] = sl;
    for (int i = 2; i < N; ++i) sc[i] = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
}

template <int N>
double rms_norm(const State<N>& v, const State<N>& sc) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
        const double q = v[i] / sc[i];
        s += q * q;
    }
    return std::sqrt(s / N);
}

template <int N>
State<N> dense_eval(const std::array<State<N>, 5>& d, double th) {
    const double th1 = 1.0 - th;
    State<N> y;
    for (int i = 0; i < N; ++i) y[i] = d[0][i] + th * (d[1][i] + th1 * (d[2][i] + th * (d[3][i] + th1 * d[4][i])));
    return y;
}

bool direction_matches(Direction d, double g0, double g1) {
    switch (d) {
        case Direction::Increasing: return g0 < 0.0 && g1 >= 0.0;
        case Direction::Decreasing: return g0 > 0.0 && g1 <= 0.0;
        case Direction::Any: return (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
    }
    return false;
}

template <int N>
double event_value(const EventSpec& ev, const State<N>& y) {
    return ev(y[0], y[1], y[2]);
}

// Root of the event function on [ta, tb] of one step, on the dense interpolant.
template <int N>
double locate(const EventSpec& ev, const std::array<State<N>, 5>& d, double t0, double h, double ta, double tb,
              double ga, double tol_rel) {
    auto g = [&](double t) { return event_value<N>(ev, dense_eval<N>(d, (t - t0) / h)); };
    double lo = ta, hi = tb, glo = ga;
    for (int it = 0; it < 80; ++it) {
        const double tol = tol_rel * std::max(1.0, std::abs(hi));
        if (hi - lo <= tol) break;
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((glo < 0.0 && gm >= 0.0) || (glo > 0.0 && gm <= 0.0)) {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    // Secant polish inside the final bracket.
    const double ghi = g(hi);
    if (ghi == 0.0) return hi;
    if (glo != ghi) {
        const double ts = lo - glo * (hi - lo) / (ghi - glo);
        if (ts > lo && ts < hi) return ts;
    }
    return hi;
}

template <int N, class Rhs>
FlowResult<N> dopri5(Rhs&& rhs, const State<N>& y_init, double t_max, const std::vector<EventSpec>& events,
                     const IntegratorOptions& opts) {
    FlowResult<N> res;
    auto& tr = res.trajectory;
    double t = 0.0;
    State<N> y = y_init;
    State<N> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, err, sc;
    rhs(y, k1);

    if (opts.store) {
        tr.times.push_back(t);
        tr.states.push_back(y);
    }

    std::vector<double> gprev(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        gprev[e] = event_value<N>(events[e], y);
        // Starting exactly on a bidirectional event surface counts as an immediate hit.
        if (events[e].direction == Direction::Any && std::abs(gprev[e]) <= 1e-12 && opts.event_t_min <= 0.0) {
            res.event = EventRecord<N>{e, t, y};
            res.t_end = t;
            res.y_end = y;
            return res;
        }
    }

    // Initial step guess.
    double h;
    {
        error_scales<N>(y, y, opts.atol, opts.rtol, sc);
        const double dn0 = rms_norm<N>(y, sc);
        const double dn1 = rms_norm<N>(k1, sc);
        double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
        h0 = std::min(h0, t_max);
        for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h0 * k1[i];
        rhs(ytmp, k2);
        State<N> df;
        for (int i = 0; i < N; ++i) df[i] = (k2[i] - k1[i]);
        const double dn2 = rms_norm<N>(df, sc) / h0;
        const double m = std::max(dn1, dn2);
        const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
        h = std::min(100.0 * h0, h1);
    }

    bool last_rejected = false;
    while (t < t_max) {
        if (res.steps + res.rejected >= opts.max_steps) {
            throw Error(ErrorKind::Stiffness, "maximum number of integration steps exceeded");
        }
        if (h < opts.h_min) throw Error(ErrorKind::Stiffness, "step size underflow at t = " + std::to_string(t));
        if (t + h > t_max) h = t_max - t;

        for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(ytmp, k2);
        for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(ytmp, k3);
        for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(ytmp, k4);
        for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(ytmp, k5);
        for (int i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(ytmp, k6);
        for (int i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        rhs(ynew, k7);
        for (int i = 0; i < N; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        error_scales<N>(y, ynew, opts.atol, opts.rtol, sc);
        const double en = rms_norm<N>(err, sc);

        if (!(en <= 1.0)) {
            if (!std::isfinite(en)) {
                h *= 0.1;
            } else {
                h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            }
            ++res.rejected;
            last_rejected = true;
            continue;
        }

        std::array<State<N>, 5> d;
        for (int i = 0; i < N; ++i) {
            const double dy = ynew[i] - y[i];
            const double bspl = h * k1[i] - dy;
            d[0][i] = y[i];
            d[1][i] = dy;
            d[2][i] = bspl;
            d[3][i] = dy - h * k7[i] - bspl;
            d[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        const double t0 = t;
        const double t1 = t + h;
        ++res.steps;
        if (opts.require_rising_y3 && !(k7[2] > 0.0 && k1[2] > 0.0)) {
            throw Error(ErrorKind::EscapeFailure, "y3 is not increasing along the inner flight");
        }

        // Event search on this step.
        std::optional<EventRecord<N>> hit;
        for (std::size_t e = 0; e < events.size(); ++e) {
            double ta = t0;
            double ga = gprev[e];
            if (t1 < opts.event_t_min) {
                gprev[e] = event_value<N>(events[e], ynew);
                continue;
            }
            if (t0 < opts.event_t_min) {
                ta = opts.event_t_min;
                ga = event_value<N>(events[e], dense_eval<N>(d, (ta - t0) / h));
            }
            const double gb = event_value<N>(events[e], ynew);
            gprev[e] = gb;
            if (!direction_matches(events[e].direction, ga, gb)) continue;
            const double te = locate<N>(events[e], d, t0, h, ta, t1, ga, opts.locate_tol);
            if (!hit || te < hit->t) hit = EventRecord<N>{e, te, dense_eval<N>(d, (te - t0) / h)};
        }

        if (hit) {
            if (opts.store) {
                // The final node sits at the event; the step keeps its original length for interpolation.
                tr.times.push_back(hit->t);
                tr.states.push_back(hit->state);
                tr.dense.push_back(d);
                tr.step_h.push_back(h);
            }
            res.event = hit;
            res.t_end = hit->t;
            res.y_end = hit->state;
            return res;
        }

        t = t1;
        y = ynew;
        k1 = k7;
        if (opts.store) {
            tr.times.push_back(t);
            tr.states.push_back(y);
            tr.dense.push_back(d);
            tr.step_h.push_back(h);
        }
        double ny = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        if (!(ny <= opts.blowup_norm)) throw Error(ErrorKind::Blowup, "state norm exceeded " + std::to_string(opts.blowup_norm));

        double fac = en == 0.0 ? 10.0 : 0.9 * std::pow(en, -0.2);
        fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
        h *= fac;
        last_rejected = false;
    }
    res.t_end = t;
    res.y_end = y;
    return res;
}

}  // namespace

Flow3 integrate(const FieldSpec& spec, double epsilon, const Vec3& x0, double t_max,
                const std::vector<EventSpec>& events, const IntegratorOptions& opts) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Parameter, "epsilon must be > 0");
    if (!(t_max > 0.0)) throw Error(ErrorKind::Parameter, "t_max must be > 0");
    if (!x0.finite()) throw Error(ErrorKind::Parameter, "initial state must be finite");
    auto rhs = [&](const State<3>& y, State<3>& dy) {
        const Vec3 v = eval_V_scaled(spec, epsilon, {y[0], y[1], y[2]});
        dy = {v.x1, v.x2, v.x3};
    };
    return dopri5<3>(rhs, State<3>{x0.x1, x0.x2, x0.x3}, t_max, events, opts);
}

Flow5 integrate_polar(const FieldSpec& spec, double epsilon, const Vec3& x0, double phi0, double t_max,
                      const std::vector<EventSpec>& events, const IntegratorOptions& opts) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Parameter, "epsilon must be > 0");
    if (!(t_max > 0.0)) throw Error(ErrorKind::Parameter, "t_max must be > 0");
    const double r0 = radius_L(x0);
    if (!(r0 > 0.0)) throw Error(ErrorKind::DegenerateRadius, "initial point lies on the U axis");
    if (std::abs(wrap_to_pi(std::atan2(x0.x2, x0.x1) - phi0)) > 1e-9) {
        throw Error(ErrorKind::Initialization, "phi0 does not match the angle of (x1, x2)");
    }
    const Eigentriple e = spec.eigen;
    auto rhs = [&](const State<5>& y, State<5>& dy) {
        const Vec3 p{y[0], y[1], y[2]};
        const Vec3 v = eval_V_scaled(spec, epsilon, p);
        const double r2 = y[0] * y[0] + y[1] * y[1];
        if (!(r2 > 0.0) || !(y[3] > 1e-300)) throw Error(ErrorKind::DegenerateRadius, "radius collapsed to zero");
        const double rl1 = v.x1 - (e.sigma * y[0] + e.mu * y[1]);
        const double rl2 = v.x2 - (-e.mu * y[0] + e.sigma * y[1]);
        const double acal = (rl1 * y[0] + rl2 * y[1]) / r2;
        const double bcal = (-rl1 * y[1] + rl2 * y[0]) / r2;
        dy = {v.x1, v.x2, v.x3, (e.sigma + acal) * y[3], -e.mu + bcal};
    };
    return dopri5<5>(rhs, State<5>{x0.x1, x0.x2, x0.x3, r0, phi0}, t_max, events, opts);
}

EnvelopeReport check_envelopes(const Trajectory5& traj, const Eigentriple& eigen, double eta) {
    EnvelopeReport rep;
    if (traj.size() == 0) return rep;
    const double t0 = traj.times.front();
    const double r0 = traj.states.front()[3];
    const double p0 = traj.states.front()[4];
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.states[k];
        if (!in_B1({s[0], s[1], s[2]}, 1e-9)) rep.inside_B1 = false;
        const double dt = traj.times[k] - t0;
        const double r_lo = r0 * std::exp((eigen.sigma - eta) * dt);
        const double r_hi = r0 * std::exp((eigen.sigma + eta) * dt);
        const double r = s[3];
        const double r_excess = std::max(r - r_hi, r_lo - r) / r_hi;
        rep.worst_r_violation = std::max(rep.worst_r_violation, std::max(0.0, r_excess));
        if (dt > 0.0) rep.min_r_slack = std::min(rep.min_r_slack, -r_excess);
        const double p_lo = p0 + (-eigen.mu - eta) * dt;
        const double p_hi = p0 + (-eigen.mu + eta) * dt;
        const double scale = std::max(1.0, std::abs(eigen.mu * dt));
        const double p_excess = std::max(s[4] - p_hi, p_lo - s[4]) / scale;
        rep.worst_phi_violation = std::max(rep.worst_phi_violation, std::max(0.0, p_excess));
        if (dt > 0.0) rep.min_phi_slack = std::min(rep.min_phi_slack, -p_excess);
    }
    rep.pass = rep.inside_B1 && rep.worst_r_violation <= kEnvelopeSlack && rep.worst_phi_violation <= kEnvelopeSlack;
    return rep;
}

NodeRates node_rates(const Trajectory5& traj, const FieldSpec& spec, double epsilon) {
    NodeRates nr;
    for (const auto& s : traj.states) {
        const Vec3 y{s[0], s[1], s[2]};
        nr.max_r_rate_dev = std::max(nr.max_r_rate_dev, std::abs(coeff_A_cal(spec, epsilon, y)));
        nr.max_phi_rate_dev = std::max(nr.max_phi_rate_dev, std::abs(coeff_B_cal(spec, epsilon, y)));
    }
    return nr;
}

double polar_consistency(const Trajectory5& traj) {
    double worst = 0.0;
    for (const auto& s : traj.states) {
        worst = std::max(worst, std::hypot(s[0] - s[3] * std::cos(s[4]), s[1] - s[3] * std::sin(s[4])));
    }
    return worst;
}

void write_trajectory_csv(std::ostream& out, const Trajectory3& traj) {
    out << "t,y1,y2,y3\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.states[k];
        out << format_real(traj.times[k]) << ',' << format_real(s[0]) << ',' << format_real(s[1]) << ','
            << format_real(s[2]) << '\n';
    }
}

void write_trajectory_csv(std::ostream& out, const Trajectory5& traj) {
    out << "t,y1,y2,y3,r,phi\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.states[k];
        out << format_real(traj.times[k]);
        for (double v : s) out << ',' << format_real(v);
        out << '\n';
    }
}

}  // namespace sfc
