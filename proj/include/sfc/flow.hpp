#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "sfc/fields.hpp"
#include "sfc/geometry.hpp"

namespace sfc {

enum class EventKind { HitY3Level, HitCylinderRadius, ExitB1 };
enum class Direction { Increasing, Decreasing, Any };

struct EventSpec {
    EventKind kind = EventKind::HitY3Level;
    double value = 1.0;  // level, radius or margin depending on kind
    Direction direction = Direction::Any;

    static EventSpec y3_level(double level, Direction d = Direction::Increasing) {
        return {EventKind::HitY3Level, level, d};
    }
    static EventSpec cylinder_radius(double radius, Direction d = Direction::Decreasing) {
        return {EventKind::HitCylinderRadius, radius, d};
    }
    static EventSpec exit_B1(double margin = 1e-9) { return {EventKind::ExitB1, margin, Direction::Increasing}; }

    // Event function; the event fires when it crosses zero in the requested direction.
    double operator()(double y1, double y2, double y3) const;
};

struct IntegratorOptions {
    double atol = 1e-12;
    double rtol = 1e-10;
    double h_min = 1e-15;          // below this the step is considered stalled
    double blowup_norm = 1e6;
    std::size_t max_steps = 10'000'000;
    bool store = true;             // keep nodes and dense coefficients
    double event_t_min = 0.0;      // crossings before this time are ignored
    double locate_tol = 1e-13;     // event time tolerance, relative to max(1, |t|)
    bool require_rising_y3 = false;  // fail with EscapeFailure if y3' <= 0 at an accepted node

    IntegratorOptions scaled(double tol_scale) const {
        IntegratorOptions o = *this;
        o.atol *= tol_scale;
        o.rtol *= tol_scale;
        return o;
    }
};

template <int N>
struct Trajectory {
    using State = std::array<double, N>;
    std::vector<double> times;
    std::vector<State> states;
    // Five coefficient vectors per step of the DOPRI5 continuous extension.
    std::vector<std::array<State, 5>> dense;
    // Length of the integrator step behind each dense segment (the last one may end early at an event).
    std::vector<double> step_h;

    std::size_t size() const { return times.size(); }
    State at(double t) const;
};

using Trajectory3 = Trajectory<3>;
using Trajectory5 = Trajectory<5>;

struct PolarState {
    Vec3 y;
    double r = 1.0;
    double phi = 0.0;
};

PolarState to_polar_state(const std::array<double, 5>& s);

template <int N>
struct EventRecord {
    std::size_t index = 0;  // position in the EventSpec list
    double t = 0.0;
    std::array<double, N> state{};
};

template <int N>
struct FlowResult {
    Trajectory<N> trajectory;
    std::optional<EventRecord<N>> event;
    double t_end = 0.0;
    std::array<double, N> y_end{};
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

using Flow3 = FlowResult<3>;
using Flow5 = FlowResult<5>;

Flow3 integrate(const FieldSpec& spec, double epsilon, const Vec3& x0, double t_max,
                const std::vector<EventSpec>& events, const IntegratorOptions& opts = {});

// Five-dimensional system (y, r, phi) with r' = (sigma + A_cal) r and phi' = -mu + B_cal.
Flow5 integrate_polar(const FieldSpec& spec, double epsilon, const Vec3& x0, double phi0, double t_max,
                      const std::vector<EventSpec>& events, const IntegratorOptions& opts = {});

struct EnvelopeReport {
    bool inside_B1 = true;
    double worst_r_violation = 0.0;    // relative excess over the exponential envelopes
    double worst_phi_violation = 0.0;  // excess over the linear angle envelopes, relative to max(1, |mu t|)
    // Smallest margins over nodes after the first, where both are zero by construction.
    double min_r_slack = std::numeric_limits<double>::infinity();
    double min_phi_slack = std::numeric_limits<double>::infinity();
    bool pass = true;
};

inline constexpr double kEnvelopeSlack = 1e-7;

EnvelopeReport check_envelopes(const Trajectory5& traj, const Eigentriple& eigen, double eta);

struct NodeRates {
    double max_r_rate_dev = 0.0;    // max |r'/r - sigma|
    double max_phi_rate_dev = 0.0;  // max |phi' + mu|
};

NodeRates node_rates(const Trajectory5& traj, const FieldSpec& spec, double epsilon);

// Largest |(y1, y2) - r (cos phi, sin phi)| over the nodes.
double polar_consistency(const Trajectory5& traj);

void write_trajectory_csv(std::ostream& out, const Trajectory3& traj);
void write_trajectory_csv(std::ostream& out, const Trajectory5& traj);

}  // namespace sfc
