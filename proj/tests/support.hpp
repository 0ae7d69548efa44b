#pragma once

#include <cmath>
#include <string>

#include "doctest.h"

#include "sfc/errors.hpp"
#include "sfc/maps.hpp"
#include "sfc/scenario_io.hpp"

#ifndef SFC_SOURCE_DIR
#define SFC_SOURCE_DIR "."
#endif

namespace testing {

// Kind of the sfc::Error thrown by f; fails the test when nothing is thrown.
template <class F>
sfc::ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const sfc::Error& e) {
        return e.kind();
    }
    FAIL("expected an sfc::Error");
    return sfc::ErrorKind::Config;
}

inline std::string default_config_path() { return std::string(SFC_SOURCE_DIR) + "/scenarios/default.json"; }

inline sfc::RunConfig default_run_config() { return sfc::run_config_from_json(sfc::read_json_file(default_config_path())); }

// Calibrated default scenario, computed once per test binary.
inline const sfc::ScenarioConfig& default_scenario() {
    static const sfc::ScenarioConfig cfg = [] {
        const sfc::RunConfig rc = default_run_config();
        return sfc::calibrate(rc.field, rc.request);
    }();
    return cfg;
}

inline const sfc::FieldSpec& default_field() {
    static const sfc::FieldSpec f = default_run_config().field;
    return f;
}

// Linear field with identity outer map, built by hand (eta = 0 is outside the certificate's reach).
inline sfc::ScenarioConfig linear_scenario(const sfc::Eigentriple& e, double delta2, double alpha) {
    sfc::ScenarioConfig cfg;
    cfg.epsilon = 1.0;
    cfg.eta = 0.0;
    cfg.beta = 0.0;
    cfg.omega_eps = 0.0;
    cfg.kappa.setIdentity();
    cfg.alpha = alpha;
    cfg.r_eps1 = 1.0;
    cfg.delta_I1 = 0.9;
    cfg.omega_I = 0.95;
    cfg.delta_I = 0.95;
    cfg.c_eta = sfc::c_eta(e, 0.0);
    cfg.k_eta = sfc::k_eta(e, 0.0);
    cfg.delta2 = delta2;
    cfg.delta1 = cfg.k_eta * std::pow(delta2, cfg.c_eta);
    cfg.delta_beta = delta2;
    return cfg;
}

}  // namespace testing
