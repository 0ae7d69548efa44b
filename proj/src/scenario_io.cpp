#include "sfc/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "sfc/errors.hpp"
#include "sfc/io.hpp"

namespace sfc {

namespace {

double num(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw Error(ErrorKind::Config, std::string("missing or non-numeric field '") + key + "'");
    }
    return j.at(key).get<double>();
}

double num_or(const nlohmann::json& j, const char* key, double fallback) {
    return j.contains(key) ? num(j, key) : fallback;
}

Eigen::Matrix2d matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::Config, "kappa must be a 2x2 array");
    Eigen::Matrix2d m;
    for (int r = 0; r < 2; ++r) {
        const auto& row = j.at(r);
        if (!row.is_array() || row.size() != 2 || !row.at(0).is_number() || !row.at(1).is_number()) {
            throw Error(ErrorKind::Config, "kappa must be a 2x2 array of numbers");
        }
        m(r, 0) = row.at(0).get<double>();
        m(r, 1) = row.at(1).get<double>();
    }
    return m;
}

nlohmann::ordered_json matrix_to_json(const Eigen::Matrix2d& m) {
    return nlohmann::ordered_json::array({nlohmann::ordered_json::array({m(0, 0), m(0, 1)}),
                                          nlohmann::ordered_json::array({m(1, 0), m(1, 1)})});
}

OuterBackend outer_from_json(const nlohmann::json& j) {
    OuterBackend o;
    if (!j.is_object()) throw Error(ErrorKind::Config, "outer must be an object");
    const std::string kind = j.value("kind", std::string("analytic"));
    if (kind == "analytic") {
        o.kind = OuterBackendKind::Analytic;
    } else if (kind == "ode") {
        o.kind = OuterBackendKind::Ode;
        o.tau_hint = num(j, "tau_hint");
    } else {
        throw Error(ErrorKind::Config, "unknown outer backend '" + kind + "'");
    }
    o.image_halfwidth = num_or(j, "image_halfwidth", o.image_halfwidth);
    o.rho_scale = num_or(j, "rho_scale", o.rho_scale);
    return o;
}

nlohmann::ordered_json outer_to_json(const OuterBackend& o) {
    nlohmann::ordered_json j;
    j["kind"] = o.kind == OuterBackendKind::Analytic ? "analytic" : "ode";
    j["image_halfwidth"] = o.image_halfwidth;
    if (o.kind == OuterBackendKind::Analytic) {
        j["rho_scale"] = o.rho_scale;
    } else {
        j["tau_hint"] = o.tau_hint;
    }
    return j;
}

std::uint64_t seed_from_json(const nlohmann::json& j, std::uint64_t fallback) {
    if (!j.contains("seed")) return fallback;
    if (!j.at("seed").is_number_unsigned()) throw Error(ErrorKind::Config, "seed must be a non-negative integer");
    return j.at("seed").get<std::uint64_t>();
}

int grid_from_json(const nlohmann::json& j, int fallback) {
    if (!j.contains("grid_count")) return fallback;
    if (!j.at("grid_count").is_number_integer()) throw Error(ErrorKind::Config, "grid_count must be an integer");
    return j.at("grid_count").get<int>();
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
    if (!j.contains("field")) throw Error(ErrorKind::Config, "config needs a 'field' object");
    RunConfig rc;
    rc.field = field_from_json(j.at("field"));
    CalibrationRequest& r = rc.request;
    r.epsilon = num(j, "epsilon");
    r.eta = num(j, "eta");
    r.beta = num(j, "beta");
    r.delta2_hint = num_or(j, "delta2_hint", r.delta2_hint);
    r.alpha_cap = num_or(j, "alpha_cap", r.alpha_cap);
    r.omega_eps = num_or(j, "omega_eps", r.omega_eps);
    if (j.contains("kappa")) r.kappa = matrix_from_json(j.at("kappa"));
    if (j.contains("outer")) r.outer = outer_from_json(j.at("outer"));
    r.grid_count = grid_from_json(j, r.grid_count);
    r.seed = seed_from_json(j, r.seed);
    r.tol_scale = num_or(j, "tol_scale", r.tol_scale);
    if (!(r.tol_scale > 0.0)) throw Error(ErrorKind::Config, "tol_scale must be positive");
    return rc;
}

nlohmann::ordered_json run_config_to_json(const RunConfig& rc) {
    const CalibrationRequest& r = rc.request;
    nlohmann::ordered_json j;
    j["field"] = field_to_json(rc.field);
    j["epsilon"] = r.epsilon;
    j["eta"] = r.eta;
    j["beta"] = r.beta;
    j["delta2_hint"] = r.delta2_hint;
    j["alpha_cap"] = r.alpha_cap;
    j["omega_eps"] = r.omega_eps;
    j["kappa"] = matrix_to_json(r.kappa);
    j["outer"] = outer_to_json(r.outer);
    j["grid_count"] = r.grid_count;
    j["seed"] = r.seed;
    j["tol_scale"] = r.tol_scale;
    return j;
}

nlohmann::ordered_json certificate_to_json(const EtaCertificate& c) {
    nlohmann::ordered_json j;
    j["eta_target"] = c.eta_target;
    j["epsilon"] = c.epsilon;
    j["eta_measured"] = c.eta_measured;
    j["jacobian_deviation"] = c.jacobian_deviation;
    j["grid_count"] = c.grid_count;
    j["seed"] = c.seed;
    j["max_violation_point"] = {c.max_violation_point.x1, c.max_violation_point.x2, c.max_violation_point.x3};
    j["max_jacobian_point"] = {c.max_jacobian_point.x1, c.max_jacobian_point.x2, c.max_jacobian_point.x3};
    nlohmann::ordered_json flags;
    flags["spectrum_signs"] = c.spectrum_ok;
    flags["hypothesis_H"] = c.hypothesis_H;
    flags["eta_positive"] = c.eta_positive;
    flags["eta_below_mu"] = c.eta_below_mu;
    flags["eta_below_half_sigma"] = c.eta_below_half_sigma;
    flags["eta_below_half_u"] = c.eta_below_half_u;
    flags["contraction_exponent"] = c.contraction_exponent;
    flags["eta_measured"] = c.eta_ok;
    flags["jacobian_deviation"] = c.jacobian_ok;
    j["flags"] = flags;
    j["pass"] = c.pass();
    j["first_failure"] = c.first_failure();
    return j;
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg, const FieldSpec& spec) {
    nlohmann::ordered_json j;
    j["field"] = field_to_json(spec);
    nlohmann::ordered_json c;
    c["epsilon"] = cfg.epsilon;
    c["eta"] = cfg.eta;
    c["beta"] = cfg.beta;
    c["c_eta"] = cfg.c_eta;
    c["k_eta"] = cfg.k_eta;
    c["omega_eps"] = cfg.omega_eps;
    c["kappa"] = matrix_to_json(cfg.kappa);
    c["omega_I"] = cfg.omega_I;
    c["delta_I"] = cfg.delta_I;
    c["r_eps1"] = cfg.r_eps1;
    c["delta_I1"] = cfg.delta_I1;
    c["alpha"] = cfg.alpha;
    c["delta_beta"] = cfg.delta_beta;
    c["delta2"] = cfg.delta2;
    c["delta1"] = cfg.delta1;
    c["m1"] = cfg.m1;
    c["m2"] = cfg.m2;
    c["psi_eps"] = cfg.psi_eps;
    c["tol_scale"] = cfg.tol_scale;
    j["constants"] = c;
    j["outer"] = outer_to_json(cfg.outer);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : check_conditions(cfg, spec)) {
        nlohmann::ordered_json row;
        row["name"] = r.name;
        row["lhs"] = r.lhs;
        row["rhs"] = r.rhs;
        row["pass"] = r.pass;
        rows.push_back(row);
    }
    j["conditions"] = rows;
    nlohmann::ordered_json prov;
    prov["certificate_grid_count"] = cfg.grid_count;
    prov["seed"] = cfg.seed;
    prov["backend"] = cfg.outer.kind == OuterBackendKind::Analytic ? "analytic" : "ode";
    prov["alpha_cap"] = cfg.alpha_cap;
    prov["delta2_hint"] = cfg.delta2_hint;
    j["provenance"] = prov;
    return j;
}

LoadedScenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("field") || !j.contains("constants")) {
        throw Error(ErrorKind::Config, "scenario needs 'field' and 'constants'");
    }
    LoadedScenario out;
    out.field = field_from_json(j.at("field"));
    const auto& c = j.at("constants");
    ScenarioConfig& cfg = out.cfg;
    cfg.epsilon = num(c, "epsilon");
    cfg.eta = num(c, "eta");
    cfg.beta = num(c, "beta");
    cfg.omega_eps = num(c, "omega_eps");
    cfg.kappa = matrix_from_json(c.at("kappa"));
    cfg.omega_I = num(c, "omega_I");
    cfg.delta_I = num(c, "delta_I");
    cfg.r_eps1 = num(c, "r_eps1");
    cfg.delta_I1 = num(c, "delta_I1");
    cfg.alpha = num(c, "alpha");
    cfg.delta_beta = num(c, "delta_beta");
    cfg.delta2 = num(c, "delta2");
    cfg.m1 = num_or(c, "m1", 0.0);
    cfg.m2 = num_or(c, "m2", 0.0);
    cfg.psi_eps = num(c, "psi_eps");
    cfg.tol_scale = num_or(c, "tol_scale", 1.0);
    if (!(cfg.beta > 0.0 && cfg.beta <= 0.5)) throw Error(ErrorKind::Config, "beta_bound violated: beta must lie in (0, 1/2]");
    if (!(cfg.epsilon > 0.0) || !(cfg.delta2 > 0.0) || !(cfg.alpha > 0.0)) {
        throw Error(ErrorKind::Config, "epsilon, alpha and delta2 must be positive");
    }
    // Level constants follow from the field and eta.
    cfg.c_eta = c_eta(out.field.eigen, cfg.eta);
    cfg.k_eta = k_eta(out.field.eigen, cfg.eta);
    cfg.delta1 = cfg.k_eta * std::pow(cfg.delta2, cfg.c_eta);
    out.stored_delta1 = num(c, "delta1");
    if (j.contains("outer")) cfg.outer = outer_from_json(j.at("outer"));
    if (j.contains("provenance")) {
        const auto& p = j.at("provenance");
        cfg.grid_count = grid_from_json(p.contains("certificate_grid_count")
                                            ? nlohmann::json{{"grid_count", p.at("certificate_grid_count")}}
                                            : nlohmann::json::object(),
                                        cfg.grid_count);
        cfg.seed = seed_from_json(p, cfg.seed);
        cfg.alpha_cap = num_or(p, "alpha_cap", cfg.alpha_cap);
        cfg.delta2_hint = num_or(p, "delta2_hint", cfg.delta2_hint);
    }
    return out;
}

nlohmann::ordered_json itinerary_to_json(const ItineraryResult& r) {
    nlohmann::ordered_json j;
    j["symbols"] = r.symbols.symbols;
    j["offset"] = r.symbols.offset;
    j["interval"] = {static_cast<double>(r.t_lo), static_cast<double>(r.t_hi)};
    j["witness_t"] = static_cast<double>(r.witness_t);
    nlohmann::ordered_json orbit = nlohmann::ordered_json::array();
    for (const auto& p : r.orbit) orbit.push_back({p.psi, p.delta});
    j["orbit"] = orbit;
    j["angles"] = r.angles;
    nlohmann::ordered_json mem = nlohmann::ordered_json::array();
    for (auto m : r.memberships) mem.push_back(to_string(m));
    j["memberships"] = mem;
    j["levels"] = r.levels;
    j["interval_exact"] = {wide_to_string(r.t_lo), wide_to_string(r.t_hi)};
    j["witness_t_exact"] = wide_to_string(r.witness_t);
    nlohmann::ordered_json widths = nlohmann::ordered_json::array();
    for (const auto& iv : r.intervals) widths.push_back(static_cast<double>(iv.second - iv.first));
    j["interval_widths"] = widths;
    j["step_residuals"] = r.step_residuals;
    j["tol_scale"] = r.tol_scale;
    if (r.window_discrepancy) j["window_discrepancy"] = *r.window_discrepancy;
    return j;
}

std::string orbit_csv(const ItineraryResult& r) {
    std::string out = "j,psi,delta,phi,membership,level\n";
    for (std::size_t k = 0; k < r.orbit.size(); ++k) {
        out += std::to_string(r.symbols.offset + static_cast<int>(k)) + ',' + format_real(r.orbit[k].psi) + ',' +
               format_real(r.orbit[k].delta) + ',' + format_real(r.angles[k]) + ',' + to_string(r.memberships[k]) +
               ',' + format_real(r.levels[k]) + '\n';
    }
    return out;
}

nlohmann::json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Config, "malformed JSON in " + path + ": " + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorKind::Config, "write failed for " + path);
}

}  // namespace sfc
