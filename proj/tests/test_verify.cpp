#include "doctest.h"

#include <cmath>
#include <set>

#include "sfc/verify.hpp"
#include "support.hpp"

using namespace sfc;

TEST_CASE("samplers are deterministic and stay in range") {
    const ScenarioConfig& c = testing::default_scenario();
    const auto a = strip_sample(c, 500, 1e-9, 1e-5);
    const auto b = strip_sample(c, 500, 1e-9, 1e-5);
    REQUIRE(a.size() == 500);
    std::set<std::pair<double, double>> seen;
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k] == b[k]);
        CHECK(std::abs(a[k].psi) <= c.alpha);
        CHECK(a[k].delta >= 1e-9);
        CHECK(a[k].delta <= 1e-5);
        seen.insert({a[k].psi, a[k].delta});
    }
    CHECK(seen.size() == a.size());
    // Corners come first.
    CHECK(a[0] == PlanePoint{-c.alpha, 1e-9});

    const auto d = disk_sample(0.3, 1000, 5);
    CHECK(d == disk_sample(0.3, 1000, 5));
    CHECK(d != disk_sample(0.3, 1000, 6));
    double rmax = 0.0;
    for (const auto& p : d) rmax = std::max(rmax, std::hypot(p.psi, p.delta));
    CHECK(rmax <= 0.3);
    CHECK(rmax >= 0.29);
}

TEST_CASE("default scenario passes every row") {
    const ScenarioConfig& c = testing::default_scenario();
    const VerifyReport rep = run_verify(c, testing::default_field());
    for (const auto& row : rep.rows) {
        INFO(row.name << " worst=" << row.worst << " bound=" << row.bound << " " << row.note);
        CHECK(row.pass);
        CHECK(row.violations == 0);
    }
    CHECK(rep.pass());
    for (const char* name : {"certificate", "flow_envelopes", "travel_time_bracket", "exit_radius_bracket", "outer_near_identity",
                             "inner_image_bound", "strip_containment", "angle_gap", "return_radius_floor", "beta_bound",
                             "box_inside_domain", "contraction_exponent", "level_separation"}) {
        INFO(name);
        CHECK(rep.find(name) != nullptr);
    }
    CHECK(rep.find("no_such_row") == nullptr);
    CHECK(rep.find("flow_envelopes")->samples == 1000);
    CHECK(rep.find("outer_near_identity")->samples == 1000);

    const VerifyRow* gap = rep.find("angle_gap");
    CHECK(gap->worst == c.m2 - c.m1);
    CHECK(gap->bound == 4 * kPi);
    CHECK(gap->slack > 0.0);

    const auto j = report_to_json(rep);
    CHECK(j["pass"] == true);
    CHECK(j["rows"].size() == rep.rows.size());
    CHECK(j["rows"][0]["name"] == "certificate");
}

TEST_CASE("brackets catch an understated eta") {
    // The builtin deviation oscillates with cos 2phi and mostly averages out along an orbit, so the
    // cumulative envelopes only break once eta is far below the pointwise bound.
    ScenarioConfig c = testing::default_scenario();
    c.eta = 1e-6;
    const auto pts = strip_sample(c, 50, c.delta_beta * 1e-4, c.delta_beta);
    const auto rows = bracket_rows(c, testing::default_field(), pts);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].name == "flow_envelopes");
    CHECK_FALSE(rows[0].pass);
    CHECK(rows[0].violations > 0);
    CHECK(rows[0].slack < 0.0);
}

TEST_CASE("strip containment fails when delta2 exceeds delta_beta") {
    ScenarioConfig c = testing::default_scenario();
    c.delta2 = 10 * c.delta_beta;
    const auto pts = strip_sample(c, 20, c.delta_beta * 1e-2, c.delta2);
    const VerifyRow row = strip_containment_row(c, testing::default_field(), pts);
    CHECK_FALSE(row.pass);
    CHECK_FALSE(row.note.empty());
}

TEST_CASE("return radius floor is strict") {
    ScenarioConfig c = testing::default_scenario();
    const auto pts = strip_sample(c, 200, c.delta1, c.delta2);
    const VerifyRow ok = return_radius_floor_row(c, testing::default_field(), pts);
    CHECK(ok.pass);
    CHECK(ok.slack > 0.0);
    CHECK(ok.worst > ok.bound);
    // Raising the floor above the smallest observed radius flips the row.
    c.delta2 = ok.worst;
    const VerifyRow bad = return_radius_floor_row(c, testing::default_field(), pts);
    CHECK_FALSE(bad.pass);
    CHECK(bad.slack < 0.0);
}
