// Command-line front end: certify, calibrate, verify, itinerary, plotdata.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sfc/errors.hpp"
#include "sfc/io.hpp"
#include "sfc/plotdata.hpp"
#include "sfc/scenario_io.hpp"
#include "sfc/symbolic.hpp"
#include "sfc/verify.hpp"

#ifndef SFC_VERSION
#define SFC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitScientific = 1;
constexpr int kExitUsage = 2;

struct Options {
    std::string config;
    std::string scenario;
    std::string symbols;
    int window = 0;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<double> tol_scale;
    std::string what;
};

class Run {
public:
    Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {
        start_ = std::chrono::steady_clock::now();
        fs::create_directories(opts_.out);
    }

    std::string write(const std::string& name, const std::string& text) {
        const std::string path = (fs::path(opts_.out) / name).string();
        sfc::write_text_file(path, text);
        outputs_.push_back(path);
        return path;
    }

    // Hash of the parsed input re-serialized with sorted keys and no whitespace.
    void set_input(const std::string& path) {
        input_path_ = path;
        hash_ = sfc::sha256_hex(sfc::read_json_file(path).dump());
    }

    void finish(std::uint64_t seed, double tol_scale) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        nlohmann::ordered_json m;
        m["command"] = command_;
        m["config_path"] = input_path_;
        m["outputs"] = outputs_;
        m["wall_time_s"] = wall;
        m["tool_version"] = SFC_VERSION;
        m["config_hash"] = hash_;
        m["seed"] = seed;
        m["tol_scale"] = tol_scale;
        sfc::write_text_file((fs::path(opts_.out) / "manifest.json").string(), sfc::dump_json(m));
    }

private:
    std::string command_;
    Options opts_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> outputs_;
    std::string input_path_;
    std::string hash_;
};

sfc::RunConfig load_config(const Options& o, Run& run) {
    if (o.config.empty()) throw sfc::Error(sfc::ErrorKind::Config, "--config is required");
    run.set_input(o.config);
    sfc::RunConfig rc = sfc::run_config_from_json(sfc::read_json_file(o.config));
    if (o.seed) rc.request.seed = *o.seed;
    if (o.tol_scale) rc.request.tol_scale = *o.tol_scale;
    return rc;
}

sfc::LoadedScenario load_scenario(const Options& o, Run& run) {
    if (o.scenario.empty()) throw sfc::Error(sfc::ErrorKind::Config, "--scenario is required");
    run.set_input(o.scenario);
    sfc::LoadedScenario ls = sfc::scenario_from_json(sfc::read_json_file(o.scenario));
    if (o.seed) ls.cfg.seed = *o.seed;
    if (o.tol_scale) ls.cfg.tol_scale = *o.tol_scale;
    return ls;
}

int cmd_certify(const Options& o) {
    Run run("certify", o);
    const sfc::RunConfig rc = load_config(o, run);
    const auto& r = rc.request;
    const sfc::EtaCertificate c = sfc::check_hypotheses(rc.field, r.epsilon, r.eta, r.grid_count, r.seed);
    run.write("certificate.json", sfc::dump_json(sfc::certificate_to_json(c)));
    run.finish(r.seed, r.tol_scale);
    std::printf("eta_measured %s  jacobian_deviation %s  %s\n", sfc::format_real(c.eta_measured).c_str(),
                sfc::format_real(c.jacobian_deviation).c_str(), c.pass() ? "PASS" : "FAIL");
    if (!c.pass()) {
        std::fprintf(stderr, "certificate fails: %s\n", c.first_failure().c_str());
        return kExitScientific;
    }
    return kExitOk;
}

int cmd_calibrate(const Options& o) {
    Run run("calibrate", o);
    const sfc::RunConfig rc = load_config(o, run);
    const sfc::ScenarioConfig cfg = sfc::calibrate(rc.field, rc.request);
    run.write("scenario.json", sfc::dump_json(sfc::scenario_to_json(cfg, rc.field)));
    run.finish(cfg.seed, cfg.tol_scale);
    std::printf("alpha %s  delta_beta %s  delta2 %s  delta1 %s  psi_eps %s\n", sfc::format_real(cfg.alpha).c_str(),
                sfc::format_real(cfg.delta_beta).c_str(), sfc::format_real(cfg.delta2).c_str(),
                sfc::format_real(cfg.delta1).c_str(), sfc::format_real(cfg.psi_eps).c_str());
    return kExitOk;
}

int cmd_verify(const Options& o) {
    Run run("verify", o);
    const sfc::LoadedScenario ls = load_scenario(o, run);
    const sfc::VerifyReport rep = sfc::run_verify(ls.cfg, ls.field);
    run.write("verify.json", sfc::dump_json(sfc::report_to_json(rep)));
    run.finish(ls.cfg.seed, ls.cfg.tol_scale);
    std::printf("%-34s %-5s %-24s %-24s %s\n", "row", "pass", "worst", "bound", "slack");
    for (const auto& r : rep.rows) {
        std::printf("%-34s %-5s %-24s %-24s %s\n", r.name.c_str(), r.pass ? "yes" : "NO", sfc::format_real(r.worst).c_str(),
                    sfc::format_real(r.bound).c_str(), sfc::format_real(r.slack).c_str());
    }
    if (ls.stored_delta1 != ls.cfg.delta1) {
        std::printf("note: stored delta1 %s replaced by k_eta delta2^c_eta = %s\n", sfc::format_real(ls.stored_delta1).c_str(),
                    sfc::format_real(ls.cfg.delta1).c_str());
    }
    return rep.pass() ? kExitOk : kExitScientific;
}

int cmd_itinerary(const Options& o) {
    Run run("itinerary", o);
    const sfc::LoadedScenario ls = load_scenario(o, run);
    if (o.window < 0) throw sfc::Error(sfc::ErrorKind::Parameter, "--window must be >= 0");
    const sfc::SymbolSequence seq = sfc::parse_symbols(o.symbols, -o.window);
    const int n_forward = static_cast<int>(seq.symbols.size()) - o.window;
    if (n_forward < 1) throw sfc::Error(sfc::ErrorKind::Parameter, "--symbols must be longer than --window");
    const sfc::ItineraryResult r =
        o.window == 0 ? sfc::build_forward_itinerary(ls.cfg, ls.field, seq, n_forward)
                      : sfc::build_window_trajectory(ls.cfg, ls.field, seq, o.window, n_forward, true);
    run.write("itinerary.json", sfc::dump_json(sfc::itinerary_to_json(r)));
    run.write("orbit.csv", sfc::orbit_csv(r));
    run.finish(ls.cfg.seed, r.tol_scale);
    std::printf("realized %zu points  interval width %s\n", r.orbit.size(),
                sfc::format_real(static_cast<double>(r.t_hi - r.t_lo)).c_str());
    if (r.window_discrepancy) std::printf("window discrepancy at index 0: %s\n", sfc::format_real(*r.window_discrepancy).c_str());
    return kExitOk;
}

int cmd_plotdata(const Options& o) {
    Run run("plotdata", o);
    const sfc::LoadedScenario ls = load_scenario(o, run);
    const auto& cfg = ls.cfg;
    if (o.what == "inner-spiral") {
        const double hi = std::min(0.5, 0.999 * cfg.delta_I1);
        run.write("inner_spiral.csv", sfc::inner_spiral_csv(cfg, ls.field, 0.0, std::min(cfg.delta1, 0.5 * hi), hi, 1000));
    } else if (o.what == "return-curve") {
        run.write("return_curve.csv", sfc::return_curve_csv(cfg, ls.field));
    } else if (o.what == "phase-portrait") {
        run.write("phase_portrait.csv", sfc::phase_portrait_csv(cfg, ls.field, {0.0, 0.0, 0.1}, 100.0));
    } else {
        throw sfc::Error(sfc::ErrorKind::Parameter, "unknown plot '" + o.what + "' (inner-spiral, return-curve, phase-portrait)");
    }
    run.finish(cfg.seed, cfg.tol_scale);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shilnikov return-map laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SFC_VERSION);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--seed", o.seed, "sampling seed override");
        sub->add_option("--tol-scale", o.tol_scale, "integrator tolerance multiplier")->check(CLI::PositiveNumber);
    };
    CLI::App* certify = app.add_subcommand("certify", "hypothesis certificate for a run config");
    certify->add_option("--config", o.config, "run config JSON")->required();
    common(certify);
    CLI::App* calibrate = app.add_subcommand("calibrate", "calibrate a scenario from a run config");
    calibrate->add_option("--config", o.config, "run config JSON")->required();
    common(calibrate);
    CLI::App* verify = app.add_subcommand("verify", "bound and condition table for a scenario");
    verify->add_option("--scenario", o.scenario, "scenario JSON")->required();
    common(verify);
    CLI::App* itinerary = app.add_subcommand("itinerary", "orbit realizing a symbol sequence");
    itinerary->add_option("--scenario", o.scenario, "scenario JSON")->required();
    itinerary->add_option("--symbols", o.symbols, "symbols over {0,1}, first --window of them at negative indices")->required();
    itinerary->add_option("--window", o.window, "backward window length")->capture_default_str();
    common(itinerary);
    CLI::App* plotdata = app.add_subcommand("plotdata", "CSV point clouds for plotting");
    plotdata->add_option("--scenario", o.scenario, "scenario JSON")->required();
    plotdata->add_option("what", o.what, "inner-spiral | return-curve | phase-portrait")->required();
    common(plotdata);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (certify->parsed()) return cmd_certify(o);
        if (calibrate->parsed()) return cmd_calibrate(o);
        if (verify->parsed()) return cmd_verify(o);
        if (itinerary->parsed()) return cmd_itinerary(o);
        return cmd_plotdata(o);
    } catch (const sfc::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.is_usage() ? kExitUsage : kExitScientific;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
