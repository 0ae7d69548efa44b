#include "sfc/geometry.hpp"

#include <string>

#include "sfc/errors.hpp"

namespace sfc {

Vec3 project_L(const Vec3& x) { return {x.x1, x.x2, 0.0}; }

Vec3 project_U(const Vec3& x) { return {0.0, 0.0, x.x3}; }

double radius_L(const Vec3& x) { return std::hypot(x.x1, x.x2); }

double radius_U(const Vec3& x) { return std::abs(x.x3); }

bool in_B1(const Vec3& x, double margin) {
    return radius_U(x) <= 1.0 + margin && radius_L(x) <= 1.0 + margin;
}

double section_distance(const Vec3& x, SectionId section) {
    if (section == SectionId::InnerCylinder) return std::abs(radius_L(x) - 1.0);
    return std::abs(x.x3 - 1.0);
}

bool on_section(const Vec3& x, SectionId section, double tol) { return section_distance(x, section) <= tol; }

double wrap_to_pi(double a) {
    double r = std::remainder(a, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

Vec3 chart_K(const PlanePoint& p, double omega) {
    if (!(p.psi > -kPi && p.psi < kPi)) {
        throw Error(ErrorKind::Domain, "chart_K needs psi in (-pi, pi), got " + std::to_string(p.psi));
    }
    return {std::cos(omega + p.psi), std::sin(omega + p.psi), p.delta};
}

PlanePoint chart_K_inverse(const Vec3& x, double omega) {
    const double r = radius_L(x);
    if (!(std::abs(r - 1.0) < kTolSection)) {
        throw Error(ErrorKind::NotOnSection, "point is not on the inner cylinder, |P_L x| = " + std::to_string(r));
    }
    const double psi = wrap_to_pi(std::atan2(x.x2, x.x1) - omega);
    if (kPi - std::abs(psi) < kChartCutTol) {
        throw Error(ErrorKind::ChartCut, "point lies on the antipodal cut of the chart");
    }
    return {psi, x.x3};
}

std::vector<double> continuous_angle(const std::vector<std::array<double, 2>>& samples, double phi0) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        if (!(std::hypot(s[0], s[1]) > 0.0)) {
            throw Error(ErrorKind::DegenerateRadius, "zero-norm sample at index " + std::to_string(k));
        }
        const double raw = std::atan2(s[1], s[0]);
        if (k == 0) {
            out.push_back(raw + kTwoPi * std::round((phi0 - raw) / kTwoPi));
            continue;
        }
        const auto& prev = samples[k - 1];
        // Signed angle from the previous sample, computed without branch issues.
        const double cross = prev[0] * s[1] - prev[1] * s[0];
        const double dot = prev[0] * s[0] + prev[1] * s[1];
        const double step = std::atan2(cross, dot);
        if (std::abs(step) >= kPi || (cross == 0.0 && dot < 0.0)) {
            throw Error(ErrorKind::Undersampling, "consecutive samples subtend an angle of pi or more at index " +
                                                      std::to_string(k));
        }
        out.push_back(out.back() + step);
    }
    return out;
}

}  // namespace sfc
