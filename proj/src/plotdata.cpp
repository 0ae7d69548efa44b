#include "sfc/plotdata.hpp"

#include <cmath>
#include <sstream>

#include "sfc/errors.hpp"
#include "sfc/io.hpp"
#include "sfc/symbolic.hpp"

namespace sfc {

std::string inner_spiral_csv(const ScenarioConfig& cfg, const FieldSpec& spec, double psi, double d_lo, double d_hi,
                             std::size_t count) {
    if (!(d_lo > 0.0 && d_lo < d_hi && d_hi < 1.0) || count < 2) {
        throw Error(ErrorKind::Parameter, "inner spiral needs 0 < d_lo < d_hi < 1 and at least two points");
    }
    std::string out = "delta,x1,x2,r,phi\n";
    const double l0 = std::log(d_hi), l1 = std::log(d_lo);
    for (std::size_t k = 0; k < count; ++k) {
        const double d = std::exp(l0 + (l1 - l0) * static_cast<double>(k) / static_cast<double>(count - 1));
        const InnerResult in = inner_map(cfg, spec, {psi, d});
        out += format_real(d) + ',' + format_real(in.exit_point.x1) + ',' + format_real(in.exit_point.x2) + ',' +
               format_real(in.exit_radius) + ',' + format_real(in.exit_angle) + '\n';
    }
    return out;
}

std::string return_curve_csv(const ScenarioConfig& cfg, const FieldSpec& spec) {
    ItineraryBuilder b(cfg, spec);
    std::string out = "marker,t,psi,delta,phi,image_psi,image_delta\n";
    for (const auto& s : b.samples({})) {
        out += ',' + format_real(static_cast<double>(s.t)) + ',' + format_real(s.psi) + ',' + format_real(s.m) + ',' +
               format_real(s.phi) + ',' + format_real(s.image_psi) + ',' + format_real(s.level) + '\n';
    }
    const Crossings& c = b.crossings({});
    const std::pair<const char*, Wide> marks[] = {{"a0", c.a0}, {"b0", c.b0}, {"a1", c.a1}, {"b1", c.b1}};
    for (const auto& [name, t] : marks) {
        const double td = static_cast<double>(t);
        const ReturnEval e = return_map_eval(cfg, spec, {0.0, td});
        out += std::string(name) + ',' + format_real(td) + ',' + format_real(0.0) + ',' + format_real(td) + ',' +
               format_real(e.angle) + ',' + format_real(e.image.psi) + ',' + format_real(e.image.delta) + '\n';
    }
    return out;
}

std::string phase_portrait_csv(const ScenarioConfig& cfg, const FieldSpec& spec, const Vec3& x0, double t_max) {
    const Flow3 f = integrate(spec, cfg.epsilon, x0, t_max, {EventSpec::y3_level(1.0)}, cfg.integrator());
    std::ostringstream ss;
    write_trajectory_csv(ss, f.trajectory);
    return ss.str();
}

}  // namespace sfc
