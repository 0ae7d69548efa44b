#include "sfc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfc/errors.hpp"
#include "sfc/io.hpp"
#include "sfc/symbolic.hpp"

namespace sfc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tracks the worst relative margin of value <= bound style checks.
struct Tally {
    VerifyRow row;
    double tol = 0.0;

    explicit Tally(std::string name, double tolerance = 0.0) : tol(tolerance) {
        row.name = std::move(name);
        row.slack = kInf;
    }

    void add(double value, double bound, double slack) {
        ++row.samples;
        if (slack < row.slack) {
            row.slack = slack;
            row.worst = value;
            row.bound = bound;
        }
        if (slack < -tol) ++row.violations;
    }

    void fail(const std::string& why) {
        ++row.samples;
        ++row.violations;
        row.slack = -kInf;
        if (row.note.empty()) row.note = why;
    }

    VerifyRow done() {
        if (row.samples == 0) row.slack = 0.0;
        row.pass = row.samples > 0 && row.violations == 0;
        return row;
    }
};

// Margin of x inside [lo, hi] relative to scale.
double bracket_slack(double x, double lo, double hi, double scale) { return std::min(x - lo, hi - x) / scale; }

PlanePoint apply(const Eigen::Matrix2d& m, double a, double b) {
    return {m(0, 0) * a + m(0, 1) * b, m(1, 0) * a + m(1, 1) * b};
}

double strip_floor(const ScenarioConfig& cfg, const VerifyOptions& opts) {
    return std::min(cfg.delta1, cfg.delta_beta * opts.strip_depth);
}

}  // namespace

bool VerifyReport::pass() const {
    return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const VerifyRow& r) { return r.pass; });
}

const VerifyRow* VerifyReport::find(const std::string& name) const {
    for (const auto& r : rows)
        if (r.name == name) return &r;
    return nullptr;
}

std::vector<PlanePoint> strip_sample(const ScenarioConfig& cfg, std::size_t count, double d_lo, double d_hi) {
    if (!(d_lo > 0.0 && d_lo <= d_hi)) throw Error(ErrorKind::Parameter, "strip sample needs 0 < d_lo <= d_hi");
    const double a = cfg.alpha;
    std::vector<PlanePoint> pts{{-a, d_lo}, {a, d_lo}, {-a, d_hi}, {a, d_hi}};
    if (count < pts.size()) pts.resize(count);
    const double l0 = std::log(d_lo), l1 = std::log(d_hi);
    for (const auto& q : halton2(count - pts.size(), cfg.seed)) {
        pts.push_back({a * (2.0 * q[0] - 1.0), std::exp(l0 + (l1 - l0) * q[1])});
    }
    return pts;
}

std::vector<PlanePoint> disk_sample(double a, std::size_t count, std::uint64_t seed) {
    std::vector<PlanePoint> pts;
    pts.reserve(count);
    for (const auto& q : halton2(count, seed)) {
        const double r = a * std::sqrt(q[0]);
        const double th = kTwoPi * q[1];
        pts.push_back({r * std::cos(th), r * std::sin(th)});
    }
    return pts;
}

std::vector<VerifyRow> bracket_rows(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts) {
    const Eigentriple& e = spec.eigen;
    const double eta = cfg.eta;
    Tally env("flow_envelopes", kBracketSlack);
    Tally tt("travel_time_bracket", kBracketSlack);
    Tally er("exit_radius_bracket", kBracketSlack);
    for (const auto& p : pts) {
        InnerResult in;
        try {
            in = inner_map(cfg, spec, p, true);
        } catch (const Error& err) {
            env.fail(err.what());
            tt.fail(err.what());
            er.fail(err.what());
            continue;
        }
        const EnvelopeReport rep = check_envelopes(*in.trajectory, e, eta);
        if (!rep.inside_B1) {
            env.fail("trajectory leaves B1");
        } else {
            const double s = std::min(rep.min_r_slack, rep.min_phi_slack);
            env.add(std::max(rep.worst_r_violation, rep.worst_phi_violation), 0.0, s);
        }
        const double ld = -std::log(p.delta);
        const double t_lo = ld / (e.u + eta), t_hi = ld / (e.u - eta);
        tt.add(in.travel_time, t_hi, bracket_slack(in.travel_time, t_lo, t_hi, in.travel_time));
        const double r_lo = std::pow(p.delta, p_eta(e, eta)), r_hi = std::pow(p.delta, q_eta(e, eta));
        er.add(in.exit_radius, r_hi, bracket_slack(in.exit_radius, r_lo, r_hi, in.exit_radius));
    }
    return {env.done(), tt.done(), er.done()};
}

VerifyRow outer_near_identity_row(const ScenarioConfig& cfg, const FieldSpec& spec, std::size_t count) {
    Tally t("outer_near_identity");
    const Eigen::Matrix2d kinv = cfg.kappa.inverse();
    for (const auto& v : disk_sample(cfg.alpha, count, cfg.seed)) {
        try {
            const PlanePoint zl = apply(kinv, v.psi, v.delta);
            if (!(std::hypot(zl.psi, zl.delta) < cfg.r_eps1)) {
                t.fail("disk point outside the outer domain");
                continue;
            }
            const PlanePoint img = outer_in_kappa_frame(cfg, spec, v);
            const double d = std::hypot(img.psi - v.psi, img.delta - v.delta);
            const double b = cfg.beta * v.norm();
            t.add(d, b, b > 0.0 ? (b - d) / b : (d == 0.0 ? 0.0 : -kInf));
        } catch (const Error& err) {
            t.fail(err.what());
        }
    }
    return t.done();
}

VerifyRow inner_image_bound_row(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts) {
    Tally t("inner_image_bound");
    const double b = 2.0 * cfg.alpha / 3.0;
    for (const auto& p : pts) {
        if (p.delta > cfg.delta_beta) continue;
        try {
            const InnerResult in = inner_map(cfg, spec, p);
            const PlanePoint w = apply(cfg.kappa, in.exit_point.x1, in.exit_point.x2);
            const double n = w.norm();
            t.add(n, b, (b - n) / b);
        } catch (const Error& err) {
            t.fail(err.what());
        }
    }
    return t.done();
}

VerifyRow strip_containment_row(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts) {
    Tally t("strip_containment");
    if (!(cfg.delta2 <= cfg.delta_beta)) {
        t.fail("delta2 exceeds delta_beta");
        t.row.note = "delta2 = " + format_real(cfg.delta2) + " exceeds delta_beta = " + format_real(cfg.delta_beta);
    }
    for (const auto& p : pts) {
        try {
            const PlanePoint img = return_map_eval(cfg, spec, p).image;
            const double n = std::max(std::abs(img.psi), std::abs(img.delta));
            t.add(n, cfg.alpha, (cfg.alpha - n) / cfg.alpha);
        } catch (const Error& err) {
            t.fail(err.what());
        }
    }
    return t.done();
}

VerifyRow angle_gap_row(const ScenarioConfig& cfg, const FieldSpec& spec) {
    Tally t("angle_gap");
    try {
        const double gap = angle_gap(cfg, spec);
        const double b = 4.0 * kPi;
        t.add(gap, b, (gap - b) / b);
    } catch (const Error& err) {
        t.fail(err.what());
    }
    return t.done();
}

VerifyRow return_radius_floor_row(const ScenarioConfig& cfg, const FieldSpec& spec, const std::vector<PlanePoint>& pts) {
    Tally t("return_radius_floor");
    const double b = std::sqrt(2.0) * cfg.delta2;
    for (const auto& p : pts) {
        try {
            const double n = return_map_eval(cfg, spec, p).image.norm();
            // Strict inequality: a sample exactly on the floor counts as a violation.
            const double s = (n - b) / b;
            t.add(n, b, n > b ? s : std::min(s, -std::numeric_limits<double>::min()));
        } catch (const Error& err) {
            t.fail(err.what());
        }
    }
    return t.done();
}

VerifyReport run_verify(const ScenarioConfig& cfg, const FieldSpec& spec, const VerifyOptions& opts) {
    VerifyReport rep;
    {
        const EtaCertificate c = check_hypotheses(spec, cfg.epsilon, cfg.eta, cfg.grid_count, cfg.seed);
        VerifyRow row;
        row.name = "certificate";
        row.worst = c.eta_measured;
        row.bound = cfg.eta;
        row.slack = cfg.eta > 0.0 ? (cfg.eta - c.eta_measured) / cfg.eta : 0.0;
        row.samples = static_cast<std::size_t>(c.grid_count);
        row.pass = c.pass();
        row.violations = row.pass ? 0 : 1;
        row.note = c.first_failure();
        rep.rows.push_back(row);
    }
    const double floor = strip_floor(cfg, opts);
    const auto strip = strip_sample(cfg, opts.strip_samples, floor, cfg.delta_beta);
    for (auto& r : bracket_rows(cfg, spec, strip)) rep.rows.push_back(std::move(r));
    rep.rows.push_back(outer_near_identity_row(cfg, spec, opts.disk_samples));
    rep.rows.push_back(inner_image_bound_row(cfg, spec, strip));
    const double top = std::max(cfg.delta2, cfg.delta_beta);
    rep.rows.push_back(strip_containment_row(cfg, spec, strip_sample(cfg, opts.strip_samples, floor, top)));
    rep.rows.push_back(angle_gap_row(cfg, spec));
    if (cfg.delta1 < cfg.delta2) {
        rep.rows.push_back(
            return_radius_floor_row(cfg, spec, strip_sample(cfg, opts.strip_samples, cfg.delta1, cfg.delta2)));
    }
    for (const auto& c : check_conditions(cfg, spec)) {
        VerifyRow row;
        row.name = c.name;
        row.worst = c.lhs;
        row.bound = c.rhs;
        row.slack = c.rhs != 0.0 ? (c.rhs - c.lhs) / std::abs(c.rhs) : 0.0;
        row.samples = 1;
        row.pass = c.pass;
        row.violations = c.pass ? 0 : 1;
        rep.rows.push_back(row);
    }
    return rep;
}

nlohmann::ordered_json report_to_json(const VerifyReport& rep) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : rep.rows) {
        nlohmann::ordered_json j;
        j["name"] = r.name;
        j["worst"] = r.worst;
        j["bound"] = r.bound;
        j["slack"] = r.slack;
        j["samples"] = r.samples;
        j["violations"] = r.violations;
        j["pass"] = r.pass;
        if (!r.note.empty()) j["note"] = r.note;
        rows.push_back(j);
    }
    nlohmann::ordered_json out;
    out["pass"] = rep.pass();
    out["rows"] = rows;
    return out;
}

}  // namespace sfc
