#include "doctest.h"

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sfc/flow.hpp"
#include "support.hpp"

using namespace sfc;
using testing::kind_of;

namespace {

const Eigentriple kE{-0.5, 1.0, 1.0};
const FieldSpec kLinear = FieldSpec::linear(kE);
const FieldSpec kBuiltin = FieldSpec::builtin_quadratic(kE, 0.05);
constexpr double kEta = 0.01;  // certified for kBuiltin at epsilon = 0.1

}  // namespace

TEST_CASE("linear field matches the closed-form solution") {
    const Vec3 x0{0.6, -0.3, 0.01};
    const Flow3 f = integrate(kLinear, 0.37, x0, 10.0, {});
    REQUIRE(f.trajectory.size() > 10);
    CHECK(f.t_end == 10.0);
    double worst_l = 0.0, worst_u = 0.0;
    for (std::size_t k = 0; k < f.trajectory.size(); ++k) {
        const auto ex = oracle::linear_flow(kE.sigma, kE.mu, kE.u, {x0.x1, x0.x2, x0.x3}, f.trajectory.times[k]);
        const auto& s = f.trajectory.states[k];
        worst_l = std::max(worst_l, std::hypot(s[0] - ex[0], s[1] - ex[1]) / std::hypot(ex[0], ex[1]));
        worst_u = std::max(worst_u, std::abs(s[2] - ex[2]) / std::abs(ex[2]));
    }
    CHECK(worst_l <= 1e-9);
    CHECK(worst_u <= 1e-9);

    // Dense output reproduces the nodes and stays accurate between them.
    double node_gap = 0.0, mid_err = 0.0;
    for (std::size_t k = 0; k + 1 < f.trajectory.size(); ++k) {
        const double t0 = f.trajectory.times[k], t1 = f.trajectory.times[k + 1];
        const auto a = f.trajectory.at(t1 - 0.0);
        node_gap = std::max(node_gap, std::abs(a[2] - f.trajectory.states[k + 1][2]) / std::abs(a[2]));
        const double tm = 0.5 * (t0 + t1);
        const auto m = f.trajectory.at(tm);
        const auto ex = oracle::linear_flow(kE.sigma, kE.mu, kE.u, {x0.x1, x0.x2, x0.x3}, tm);
        mid_err = std::max(mid_err, std::hypot(m[0] - ex[0], m[1] - ex[1]) / std::hypot(ex[0], ex[1]));
    }
    CHECK(node_gap <= 1e-12);
    CHECK(mid_err <= 1e-8);
}

TEST_CASE("integrate examples") {
    const Flow3 a = integrate(kLinear, 1.0, {0, 0, 0.1}, 10.0, {EventSpec::y3_level(1.0)});
    REQUIRE(a.event);
    CHECK(std::abs(a.event->t - std::log(10.0)) <= 1e-9);
    CHECK(std::abs(a.event->state[2] - 1.0) <= 1e-12);
    CHECK(a.event->state[0] == 0.0);
    CHECK(a.event->state[1] == 0.0);

    const Flow3 b = integrate(kLinear, 1.0, {1, 0, 0}, 2 * kPi, {});
    CHECK(!b.event);
    CHECK(std::abs(b.y_end[0] - std::exp(-kPi)) <= 1e-10);
    CHECK(std::abs(b.y_end[1]) <= 1e-10);
    CHECK(std::abs(std::exp(-kPi) - 0.043214) < 1e-6);

    const Flow3 c = integrate(kBuiltin, 0.1, {1, 0, 0.01}, 100.0, {EventSpec::y3_level(1.0)});
    REQUIRE(c.event);
    const double l = std::log(100.0);
    CHECK(c.event->t >= l / (kE.u + kEta));
    CHECK(c.event->t <= l / (kE.u - kEta));
}

TEST_CASE("event directions and idempotence") {
    const Flow3 a = integrate(kLinear, 1.0, {0.5, 0, 0.1}, 10.0, {EventSpec::y3_level(1.0)});
    REQUIRE(a.event);
    const auto& s = a.event->state;
    const Flow3 again = integrate(kLinear, 1.0, {s[0], s[1], s[2]}, 10.0, {EventSpec::y3_level(1.0, Direction::Any)});
    REQUIRE(again.event);
    CHECK(again.event->t <= 1e-10);

    // A decreasing-only event ignores the rising crossing.
    const Flow3 d = integrate(kLinear, 1.0, {0.5, 0, 0.1}, 3.0, {EventSpec::y3_level(1.0, Direction::Decreasing)});
    CHECK(!d.event);

    // Earliest of several events wins; ties resolve by list order.
    const Flow3 m = integrate(kLinear, 1.0, {0, 0, 0.1}, 10.0, {EventSpec::y3_level(1.0), EventSpec::y3_level(0.5)});
    REQUIRE(m.event);
    CHECK(m.event->index == 1);
    CHECK(std::abs(m.event->t - std::log(5.0)) <= 1e-9);

    // Cylinder radius crossing of the decaying spiral at r = 0.5.
    const Flow3 r = integrate(kLinear, 1.0, {1, 0, 0}, 10.0, {EventSpec::cylinder_radius(0.5)});
    REQUIRE(r.event);
    CHECK(std::abs(r.event->t - 2 * std::log(2.0)) <= 1e-9);

    // Leaving B1 through the top.
    const Flow3 e = integrate(kLinear, 1.0, {0.1, 0, 0.2}, 10.0, {EventSpec::exit_B1(0.0)});
    REQUIRE(e.event);
    CHECK(std::abs(e.event->t - std::log(5.0)) <= 1e-9);
}

TEST_CASE("integrator errors") {
    CHECK(kind_of([] { integrate(kLinear, 1.0, {0, 0, 1}, 20.0, {}); }) == ErrorKind::Blowup);
    CHECK(kind_of([] { integrate(kLinear, 0.0, {0, 0, 1}, 1.0, {}); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { integrate(kLinear, 1.0, {0, 0, 1}, -1.0, {}); }) == ErrorKind::Parameter);
    IntegratorOptions o;
    o.max_steps = 3;
    CHECK(kind_of([&] { integrate(kLinear, 1.0, {1, 0, 0.01}, 10.0, {}, o); }) == ErrorKind::Stiffness);
}

TEST_CASE("integrate_polar examples") {
    const Flow5 a = integrate_polar(kLinear, 1.0, {1, 0, 0}, 0.0, 1.0, {});
    CHECK(std::abs(a.y_end[3] - std::exp(-0.5)) <= 1e-10);
    CHECK(std::abs(a.y_end[4] + 1.0) <= 1e-10);
    CHECK(std::abs(std::exp(-0.5) - 0.606531) < 1e-6);

    const Flow5 b = integrate_polar(kLinear, 1.0, {1, 0, 0}, 2 * kPi, 1.0, {});
    CHECK(std::abs(b.y_end[4] - (2 * kPi - 1.0)) <= 1e-10);
    CHECK(std::abs(b.y_end[0] - a.y_end[0]) <= 1e-10);
    CHECK(std::abs(b.y_end[1] - a.y_end[1]) <= 1e-10);

    CHECK(kind_of([] { integrate_polar(kLinear, 1.0, {1, 0, 0}, 1.0, 1.0, {}); }) == ErrorKind::Initialization);
    CHECK(kind_of([] { integrate_polar(kLinear, 1.0, {0, 0, 0.5}, 0.0, 1.0, {}); }) == ErrorKind::DegenerateRadius);
}

TEST_CASE("polar rates stay inside the certified band") {
    for (double d : {0.5, 0.1, 1e-3, 1e-6}) {
        const Vec3 x0 = chart_K({0.3, d}, 0.2);
        const Flow5 f = integrate_polar(kBuiltin, 0.1, x0, 0.5, 100.0, {EventSpec::y3_level(1.0)});
        REQUIRE(f.event);
        const NodeRates nr = node_rates(f.trajectory, kBuiltin, 0.1);
        CHECK(nr.max_r_rate_dev <= kEta);
        CHECK(nr.max_phi_rate_dev <= kEta);
        CHECK(polar_consistency(f.trajectory) <= 1e-8);
        double rmin = 1.0;
        for (const auto& s : f.trajectory.states) rmin = std::min(rmin, s[3]);
        CHECK(rmin > 1e-300);
        const EnvelopeReport rep = check_envelopes(f.trajectory, kE, kEta);
        CHECK(rep.inside_B1);
        CHECK(rep.pass);
    }
}

TEST_CASE("envelope monitor on the linear field") {
    const Flow5 f = integrate_polar(kLinear, 1.0, chart_K({0, 0.05}, 0), 0.0, 100.0, {EventSpec::y3_level(1.0)});
    const EnvelopeReport zero = check_envelopes(f.trajectory, kE, 0.0);
    CHECK(zero.pass);
    CHECK(zero.worst_r_violation <= 1e-9);
    CHECK(zero.worst_phi_violation <= 1e-9);
    const EnvelopeReport wide = check_envelopes(f.trajectory, kE, 0.05);
    CHECK(wide.pass);
    CHECK(wide.worst_r_violation == 0.0);
    // Slack at the first step after t = 0 is about eta t relative.
    CHECK(wide.min_phi_slack > 0.0);
    CHECK(wide.min_r_slack > 0.0);
    // Declaring a band narrower than the true rates shows up as a violation.
    const EnvelopeReport wrong = check_envelopes(f.trajectory, {-0.4, 1.0, 1.0}, 0.0);
    CHECK_FALSE(wrong.pass);
}

TEST_CASE("trajectory csv format") {
    const Flow3 f = integrate(kLinear, 1.0, {0, 0, 0.1}, 10.0, {EventSpec::y3_level(1.0)});
    std::ostringstream ss;
    write_trajectory_csv(ss, f.trajectory);
    std::istringstream in(ss.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,y1,y2,y3");
    std::getline(in, line);
    CHECK(line == "0,0,0,0.10000000000000001");
    std::size_t rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == f.trajectory.size());

    const Flow5 p = integrate_polar(kLinear, 1.0, {1, 0, 0}, 0.0, 1.0, {});
    std::ostringstream sp;
    write_trajectory_csv(sp, p.trajectory);
    CHECK(sp.str().rfind("t,y1,y2,y3,r,phi\n0,1,0,0,1,0\n", 0) == 0);
}
