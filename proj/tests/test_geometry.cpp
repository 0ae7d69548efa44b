#include "doctest.h"

#include <cmath>
#include <random>

#include "sfc/errors.hpp"
#include "sfc/geometry.hpp"
#include "support.hpp"

using namespace sfc;

using testing::kind_of;

TEST_CASE("projections split a vector into its L and U parts") {
    CHECK(project_L({1, 2, 3}) == Vec3{1, 2, 0});
    CHECK(project_L({0, 0, 5}) == Vec3{0, 0, 0});
    CHECK(project_L({0.3, -0.4, 0.1}) == Vec3{0.3, -0.4, 0});
    CHECK(project_U({1, 2, 3}) == Vec3{0, 0, 3});
    CHECK(project_U({1, 2, 0}) == Vec3{0, 0, 0});
    CHECK(project_U({0, 0, -1}) == Vec3{0, 0, -1});
}

TEST_CASE("projection identities hold on random vectors") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-10, 10);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 x{d(rng), d(rng), d(rng)};
        const Vec3 s = project_L(x) + project_U(x);
        CHECK(s == x);
        CHECK(project_L(project_L(x)) == project_L(x));
        const double lhs = std::pow(project_U(x).norm(), 2) + std::pow(project_L(x).norm(), 2);
        const double rhs = std::pow(x.norm(), 2);
        CHECK(std::abs(lhs - rhs) <= 4 * std::numeric_limits<double>::epsilon() * rhs);
    }
}

TEST_CASE("in_B1 membership and margin") {
    CHECK(in_B1({0.5, 0.5, 0.9}, 0));
    CHECK_FALSE(in_B1({1, 1, 0}, 0));
    CHECK(in_B1({0, 0, 1.0005}, 0.001));
    CHECK_FALSE(in_B1({0, 0, 1.0005}, 0));
}

TEST_CASE("chart_K examples") {
    const Vec3 a = chart_K({0, 0.3}, 0);
    CHECK(a.x1 == 1.0);
    CHECK(a.x2 == 0.0);
    CHECK(a.x3 == 0.3);
    const Vec3 b = chart_K({kPi / 2, 0.1}, 0);
    CHECK(b.x1 == doctest::Approx(0).epsilon(1e-15));
    CHECK(b.x2 == doctest::Approx(1).epsilon(1e-15));
    const Vec3 c = chart_K({0.2, 0.05}, 1.0);
    CHECK(std::abs(c.x1 - 0.362358) < 1e-6);
    CHECK(std::abs(c.x2 - 0.932039) < 1e-6);
    CHECK(c.x3 == 0.05);
    CHECK(kind_of([] { chart_K({kPi, 0.1}, 0); }) == ErrorKind::Domain);
    CHECK(kind_of([] { chart_K({-4.0, 0.1}, 0); }) == ErrorKind::Domain);
}

TEST_CASE("chart_K_inverse examples and errors") {
    const PlanePoint a = chart_K_inverse({1, 0, 0.3}, 0);
    CHECK(a.psi == 0.0);
    CHECK(a.delta == 0.3);
    const PlanePoint b = chart_K_inverse({0, 1, 0.1}, 0);
    CHECK(std::abs(b.psi - kPi / 2) < 1e-15);
    CHECK(kind_of([] { chart_K_inverse({-1, 0, 0.1}, 0); }) == ErrorKind::ChartCut);
    CHECK(kind_of([] { chart_K_inverse({0.5, 0, 0.1}, 0); }) == ErrorKind::NotOnSection);
    CHECK(kind_of([] { chart_K_inverse({1 + 1e-8, 0, 0.1}, 0); }) == ErrorKind::NotOnSection);
    CHECK_NOTHROW(chart_K_inverse({1 + 1e-10, 0, 0.1}, 0));
}

TEST_CASE("chart_K lands on M_I and round-trips") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> psi(-kPi + 0.01, kPi - 0.01), delta(0.0, 1.0), omega(-4, 4);
    double worst_section = 0.0, worst_trip = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const PlanePoint p{psi(rng), delta(rng)};
        const double w = omega(rng);
        const Vec3 x = chart_K(p, w);
        worst_section = std::max(worst_section, std::abs(radius_L(x) - 1.0));
        CHECK(on_section(x, SectionId::InnerCylinder));
        const PlanePoint q = chart_K_inverse(x, w);
        worst_trip = std::max({worst_trip, std::abs(q.psi - p.psi), std::abs(q.delta - p.delta)});
    }
    CHECK(worst_section <= 1e-14);
    CHECK(worst_trip <= 1e-12);
}

TEST_CASE("continuous_angle lifts") {
    const auto a = continuous_angle({{1, 0}, {0, 1}, {-1, 0}}, 0.0);
    REQUIRE(a.size() == 3);
    CHECK(a[0] == 0.0);
    CHECK(std::abs(a[1] - kPi / 2) < 1e-15);
    CHECK(std::abs(a[2] - kPi) < 1e-15);

    const auto b = continuous_angle({{1, 0}, {1, 0}}, kTwoPi);
    CHECK(b[0] == kTwoPi);
    CHECK(b[1] == kTwoPi);

    // Two turns in 100 steps on a shrinking spiral, against the summed atan2 increments.
    std::vector<std::array<double, 2>> s;
    for (int k = 0; k <= 100; ++k) {
        const double th = 4 * kPi * k / 100.0 + 0.3;
        const double r = std::exp(-0.01 * k);
        s.push_back({r * std::cos(th), r * std::sin(th)});
    }
    const auto c = continuous_angle(s, 0.3);
    double sum = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        sum += std::remainder(std::atan2(s[k][1], s[k][0]) - std::atan2(s[k - 1][1], s[k - 1][0]), 2 * kPi);
    }
    CHECK(std::abs((c.back() - c.front()) - 4 * kPi) < 1e-9);
    CHECK(std::abs((c.back() - c.front()) - sum) < 1e-12);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k] - c[k - 1]) < kPi);

    CHECK(kind_of([] { continuous_angle({{1, 0}, {0, 0}}, 0); }) == ErrorKind::DegenerateRadius);
    CHECK(kind_of([] { continuous_angle({{1, 0}, {-1, 0}}, 0); }) == ErrorKind::Undersampling);
}

TEST_CASE("wrap_to_pi representative") {
    CHECK(wrap_to_pi(0.0) == 0.0);
    CHECK(std::abs(wrap_to_pi(3 * kPi) - kPi) < 1e-15);
    CHECK(std::abs(wrap_to_pi(-kPi / 2 + 4 * kPi) + kPi / 2) < 1e-14);
    CHECK(wrap_to_pi(-kPi) == doctest::Approx(kPi));
}
