#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace sfc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Membership tolerance for the sections M_I and M_E.
inline constexpr double kTolSection = 1e-9;
// Angular exclusion around the antipode of omega where the chart inverse is undefined.
inline constexpr double kChartCutTol = 1e-6;

struct Vec3 {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x1 + b.x1, a.x2 + b.x2, a.x3 + b.x3}; }
    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x1 - b.x1, a.x2 - b.x2, a.x3 - b.x3}; }
    friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x1, s * a.x2, s * a.x3}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double norm() const { return std::sqrt(x1 * x1 + x2 * x2 + x3 * x3); }
    bool finite() const { return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(x3); }
};

// Point of the (psi, delta) chart plane.
struct PlanePoint {
    double psi = 0.0;
    double delta = 0.0;

    friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
    double norm() const { return std::hypot(psi, delta); }
};

enum class SectionId { InnerCylinder, ExitPlane };

Vec3 project_L(const Vec3& x);
Vec3 project_U(const Vec3& x);

// |P_L x| and |P_U x|.
double radius_L(const Vec3& x);
double radius_U(const Vec3& x);

bool in_B1(const Vec3& x, double margin = 0.0);

// Distance of x from the given section (radial for M_I, vertical for M_E).
double section_distance(const Vec3& x, SectionId section);
bool on_section(const Vec3& x, SectionId section, double tol = kTolSection);

// K(psi, delta) = (cos(omega+psi), sin(omega+psi), delta), psi in (-pi, pi).
Vec3 chart_K(const PlanePoint& p, double omega);
PlanePoint chart_K_inverse(const Vec3& x, double omega);

// Representative of a in (-pi, pi].
double wrap_to_pi(double a);

// Lift of the polar angles of a planar sample sequence, starting on the branch nearest phi0.
std::vector<double> continuous_angle(const std::vector<std::array<double, 2>>& samples, double phi0);

}  // namespace sfc
