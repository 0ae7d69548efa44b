// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sfc/errors.hpp"
#include "sfc/io.hpp"
#include "sfc/maps.hpp"
#include "sfc/scenario_io.hpp"
#include "sfc/symbolic.hpp"
#include "sfc/verify.hpp"

#ifndef SFC_SOURCE_DIR
#define SFC_SOURCE_DIR "."
#endif

using namespace sfc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

RunConfig default_run_config() {
    return run_config_from_json(read_json_file(std::string(SFC_SOURCE_DIR) + "/scenarios/default.json"));
}

const ScenarioConfig& calibrated() {
    static const ScenarioConfig cfg = [] {
        const RunConfig rc = default_run_config();
        return calibrate(rc.field, rc.request);
    }();
    return cfg;
}

const FieldSpec& default_field() {
    static const FieldSpec f = default_run_config().field;
    return f;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string row_summary(const VerifyRow& r) {
    return r.name + " violations=" + std::to_string(r.violations) + "/" + std::to_string(r.samples) + " slack=" + fmt(r.slack);
}

Outcome linear_oracle() {
    const Eigentriple e{-0.5, 1.0, 1.0};
    const FieldSpec lin = FieldSpec::linear(e);
    ScenarioConfig cfg;
    cfg.epsilon = 0.37;
    cfg.eta = 0.0;
    cfg.omega_eps = 0.3;
    cfg.alpha = 0.5;
    const double psi = 0.2;
    const double t = travel_time(cfg, lin, chart_K({psi, 0.1}, cfg.omega_eps));
    const InnerResult r = inner_map(cfg, lin, {psi, 0.1});
    const double dt = std::abs(t - std::log(10.0));
    const double dr = std::abs(r.exit_radius - std::pow(10.0, -0.5));
    const double da = std::abs(r.exit_angle - (cfg.omega_eps + psi - std::log(10.0)));
    return {dt <= 1e-9 && dr <= 1e-9 && da <= 1e-8,
            "|dt|=" + fmt(dt) + " (1e-9) |dr|=" + fmt(dr) + " (1e-9) |dphi|=" + fmt(da) + " (1e-8)"};
}

Outcome bracket_suite() {
    const ScenarioConfig& c = calibrated();
    const auto pts = strip_sample(c, 1000, c.delta_beta * 1e-4, c.delta_beta);
    const auto rows = bracket_rows(c, default_field(), pts);
    bool ok = true;
    std::string d = "eta=" + fmt(c.eta);
    for (const auto& r : rows) {
        ok = ok && r.pass && r.violations == 0 && r.samples == 1000;
        d += "; " + row_summary(r);
    }
    return {ok, d};
}

Outcome near_identity() {
    ScenarioConfig c = calibrated();
    c.beta = 0.25;
    const VerifyRow r = outer_near_identity_row(c, default_field(), 1000);
    return {r.pass && r.violations == 0 && r.samples == 1000, row_summary(r)};
}

Outcome calibration_consistency() {
    const RunConfig rc = default_run_config();
    const ScenarioConfig c = calibrate(rc.field, rc.request);
    const auto pts = strip_sample(c, 1000, c.delta_beta * 1e-4, c.delta_beta);
    std::size_t outside = 0;
    double worst = 0.0;
    for (const auto& p : pts) {
        const PlanePoint img = return_map_eval(c, rc.field, p).image;
        const double m = std::max(std::abs(img.psi), std::abs(img.delta));
        worst = std::max(worst, m);
        if (m > c.alpha) ++outside;
    }
    const LoadedScenario l = scenario_from_json(nlohmann::json::parse(dump_json(scenario_to_json(c, rc.field))));
    const bool reload = l.cfg.delta1 == c.delta1 && l.cfg.delta1 == l.cfg.k_eta * std::pow(l.cfg.delta2, l.cfg.c_eta);
    return {outside == 0 && reload, "outside=" + std::to_string(outside) + "/1000 max|R|=" + fmt(worst) + " alpha=" + fmt(c.alpha) +
                                        " delta1 reload " + (reload ? "exact" : "MISMATCH")};
}

Outcome gap() {
    const ScenarioConfig& c = calibrated();
    const double g = angle_gap(c, default_field());
    const Eigentriple e{-0.5, 1.0, 1.0};
    const double alpha = 0.6;
    ScenarioConfig lin;
    lin.epsilon = 1.0;
    lin.eta = 0.0;
    lin.beta = 0.0;
    lin.alpha = alpha;
    lin.c_eta = c_eta(e, 0.0);
    lin.k_eta = k_eta(e, 0.0);
    lin.delta2 = 0.01;
    lin.delta1 = lin.k_eta * std::pow(lin.delta2, lin.c_eta);
    const double gl = angle_gap(lin, FieldSpec::linear(e));
    const double err = std::abs(gl - (6 * kPi - 2 * alpha));
    return {g >= 4 * kPi && err <= 1e-6, "calibrated gap=" + fmt(g) + " (>= 4pi); linear |gap-(6pi-2alpha)|=" + fmt(err) + " (1e-6)"};
}

Outcome realization() {
    const ScenarioConfig& c = calibrated();
    ItineraryBuilder b(c, default_field());
    std::vector<std::pair<Wide, Wide>> intervals;
    int bad = 0;
    std::string first_bad;
    for (int code = 0; code < 256; ++code) {
        SymbolSequence s;
        for (int k = 7; k >= 0; --k) s.symbols.push_back((code >> k) & 1);
        try {
            const ItineraryResult r = b.forward(s);
            if (!check_realization(c, default_field(), r).ok()) throw Error(ErrorKind::RefinementInconsistency, "re-check failed");
            intervals.emplace_back(r.t_lo, r.t_hi);
        } catch (const Error& e) {
            if (bad++ == 0) first_bad = "code " + std::to_string(code) + ": " + e.what();
        }
    }
    std::sort(intervals.begin(), intervals.end());
    int overlaps = 0;
    for (std::size_t k = 0; k + 1 < intervals.size(); ++k) {
        if (!(intervals[k].second < intervals[k + 1].first)) ++overlaps;
    }
    std::string d = "realized=" + std::to_string(256 - bad) + "/256 overlaps=" + std::to_string(overlaps) +
                    " curve nodes=" + std::to_string(b.node_count());
    if (bad) d += " first failure " + first_bad;
    return {bad == 0 && overlaps == 0, d};
}

Outcome windows() {
    const ScenarioConfig& c = calibrated();
    std::mt19937_64 rng(c.seed);
    std::bernoulli_distribution coin(0.5);
    int bad = 0;
    double dmax = 0.0;
    std::ostringstream diag;
    for (int s = 0; s < 20; ++s) {
        SymbolSequence seq;
        seq.offset = -4;
        for (int k = 0; k < 12; ++k) seq.symbols.push_back(coin(rng) ? 1 : 0);
        std::string text;
        for (int v : seq.symbols) text += static_cast<char>('0' + v);
        try {
            const ItineraryResult r = build_window_trajectory(c, default_field(), seq, 4, 8, true);
            const RealizationCheck rc = check_realization(c, default_field(), r);
            if (!rc.memberships_ok || !rc.levels_ok || r.orbit.size() != 12) ++bad;
            const double d = r.window_discrepancy.value_or(NAN);
            dmax = std::max(dmax, d);
            std::printf("  window %2d %s J3-vs-J4 discrepancy at 0: %.3e\n", s, text.c_str(), d);
        } catch (const Error& e) {
            ++bad;
            std::printf("  window %2d %s failed: %s\n", s, text.c_str(), e.what());
        }
    }
    return {bad == 0, "failed=" + std::to_string(bad) + "/20 max discrepancy=" + fmt(dmax) + " (diagnostic only)"};
}

// Error message of calibrate on the edited config, or empty when it succeeds.
std::string rejection(const std::function<void(RunConfig&)>& edit, ErrorKind* kind) {
    RunConfig rc = default_run_config();
    edit(rc);
    try {
        calibrate(rc.field, rc.request);
    } catch (const Error& e) {
        *kind = e.kind();
        return e.what();
    }
    return "";
}

Outcome rejections() {
    struct Case {
        const char* name;
        std::function<void(RunConfig&)> edit;
    };
    const Case cases[] = {
        {"hypothesis_H", [](RunConfig& rc) { rc.field.eigen.u = 0.4; }},
        {"beta_bound", [](RunConfig& rc) { rc.request.beta = 0.6; }},
        {"contraction_exponent",
         [](RunConfig& rc) {
             rc.field = FieldSpec::builtin_quadratic({-0.95, 1.0, 1.0}, 0.01);
             rc.request.eta = 0.02;
         }},
    };
    bool ok = true;
    std::string d;
    for (const auto& cs : cases) {
        ErrorKind k{};
        const std::string msg = rejection(cs.edit, &k);
        const bool named = !msg.empty() && msg.find(cs.name) != std::string::npos;
        ok = ok && named;
        if (!d.empty()) d += "; ";
        d += std::string(cs.name) + (named ? " rejected" : msg.empty() ? " ACCEPTED" : " rejected without naming it: " + msg);
    }
    return {ok, d};
}

}  // namespace

int main() {
    const std::vector<Criterion> all = {
        {1, "linear oracle", 1.0, linear_oracle},
        {2, "bracket suite", 60.0, bracket_suite},
        {3, "near-identity outer map", 1.0, near_identity},
        {4, "calibration consistency", 120.0, calibration_consistency},
        {5, "angle gap", 30.0, gap},
        {6, "symbolic realization", 1800.0, realization},
        {7, "window trajectories", 600.0, windows},
        {8, "hypothesis rejection", 1.0, rejections},
    };
    // The calibrated scenario is shared setup for criteria 2, 3, 5, 6 and 7.
    calibrated();
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = s <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("criterion %d (%s): %s [%.2f s of %.0f s] %s%s\n", c.id, c.name, pass ? "PASS" : "FAIL", s, c.budget_s,
                    o.detail.c_str(), in_time ? "" : " (over time budget)");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed ? 1 : 0;
}
