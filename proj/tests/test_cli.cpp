#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sfc/io.hpp"
#include "sfc/scenario_io.hpp"
#include "support.hpp"

#ifndef SFC_CLI_PATH
#define SFC_CLI_PATH "sfc"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("sfc_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Outcome {
    int code = -1;
    std::string err;
};

// Runs the CLI with the given arguments; stdout is discarded and stderr captured.
Outcome run(const std::string& args) {
    const fs::path err = scratch() / "stderr.txt";
    const std::string cmd = std::string("\"") + SFC_CLI_PATH + "\" " + args + " >/dev/null 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.err = sfc::read_text_file(err.string());
    return o;
}

std::string write_config(const std::string& name, const nlohmann::json& j) {
    const fs::path p = scratch() / name;
    sfc::write_text_file(p.string(), j.dump(2));
    return p.string();
}

nlohmann::json default_json() { return sfc::read_json_file(testing::default_config_path()); }

std::string out_dir(const std::string& name) { return (scratch() / name).string(); }

// Calibrated default scenario written once by the CLI itself.
const std::string& scenario_path() {
    static const std::string path = [] {
        const std::string out = out_dir("scen");
        const Outcome o = run("calibrate --config \"" + testing::default_config_path() + "\" --out \"" + out + "\"");
        REQUIRE(o.code == 0);
        return out + "/scenario.json";
    }();
    return path;
}

std::size_t line_count(const std::string& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

std::string first_line(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_CASE("cli usage errors exit with 2") {
    CHECK(run("--version").code == 0);
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("certify").code == 2);
    CHECK(run("certify --config \"" + testing::default_config_path() + "\" --bogus").code == 2);
    CHECK(run("certify --config /nonexistent.json").code == 2);
    CHECK(run("certify --config \"" + testing::default_config_path() + "\" --tol-scale 0").code == 2);

    const fs::path bad = scratch() / "malformed.json";
    sfc::write_text_file(bad.string(), "{\"field\": {\"sigma\": -0.5,");
    const Outcome m = run("calibrate --config \"" + bad.string() + "\"");
    CHECK(m.code == 2);
    CHECK(m.err.find("malformed") != std::string::npos);
}

TEST_CASE("certify writes a certificate and a manifest") {
    const std::string out = out_dir("certify");
    REQUIRE(run("certify --config \"" + testing::default_config_path() + "\" --out \"" + out + "\"").code == 0);
    const nlohmann::json cert = sfc::read_json_file(out + "/certificate.json");
    CHECK(cert["pass"] == true);
    CHECK(cert["flags"]["hypothesis_H"] == true);

    const nlohmann::json man = sfc::read_json_file(out + "/manifest.json");
    CHECK(man["command"] == "certify");
    CHECK(man["config_hash"] == sfc::sha256_hex(default_json().dump()));
    CHECK(man["config_hash"].get<std::string>().size() == 64);
    CHECK(man["seed"] == 20240917u);
    CHECK(man["tol_scale"] == 1.0);
    CHECK(man["outputs"].size() == 1);
    CHECK(man["wall_time_s"].get<double>() >= 0.0);
    CHECK(!man["tool_version"].get<std::string>().empty());

    // Overrides are reflected in the manifest.
    const std::string out2 = out_dir("certify2");
    REQUIRE(run("certify --config \"" + testing::default_config_path() + "\" --out \"" + out2 + "\" --seed 7 --tol-scale 2").code == 0);
    const nlohmann::json man2 = sfc::read_json_file(out2 + "/manifest.json");
    CHECK(man2["seed"] == 7u);
    CHECK(man2["tol_scale"] == 2.0);
}

TEST_CASE("hypothesis failures exit with 1 and name the condition") {
    nlohmann::json j = default_json();
    j["field"]["u"] = 0.4;
    const std::string path = write_config("no_H.json", j);
    const std::string out = out_dir("no_H");
    const Outcome o = run("certify --config \"" + path + "\" --out \"" + out + "\"");
    CHECK(o.code == 1);
    CHECK(o.err.find("hypothesis_H") != std::string::npos);
    const nlohmann::json cert = sfc::read_json_file(out + "/certificate.json");
    CHECK(cert["flags"]["hypothesis_H"] == false);
    CHECK(cert["pass"] == false);

    const Outcome c = run("calibrate --config \"" + path + "\" --out \"" + out_dir("no_H_cal") + "\"");
    CHECK(c.code == 1);
    CHECK(c.err.find("hypothesis_H") != std::string::npos);
}

TEST_CASE("beta outside (0, 1/2] is a usage error") {
    nlohmann::json j = default_json();
    j["beta"] = 0.6;
    const Outcome o = run("calibrate --config \"" + write_config("beta.json", j) + "\" --out \"" + out_dir("beta") + "\"");
    CHECK(o.code == 2);
    CHECK(o.err.find("beta_bound") != std::string::npos);
}

TEST_CASE("calibrate is byte-for-byte deterministic") {
    const std::string a = out_dir("det_a"), b = out_dir("det_b");
    REQUIRE(run("calibrate --config \"" + testing::default_config_path() + "\" --out \"" + a + "\"").code == 0);
    REQUIRE(run("calibrate --config \"" + testing::default_config_path() + "\" --out \"" + b + "\"").code == 0);
    CHECK(sfc::read_text_file(a + "/scenario.json") == sfc::read_text_file(b + "/scenario.json"));
    const nlohmann::json man = sfc::read_json_file(a + "/manifest.json");
    CHECK(fs::path(man["outputs"][0].get<std::string>()) == fs::path(a) / "scenario.json");
}

TEST_CASE("verify passes on the calibrated scenario") {
    const std::string out = out_dir("verify");
    REQUIRE(run("verify --scenario \"" + scenario_path() + "\" --out \"" + out + "\"").code == 0);
    const nlohmann::json rep = sfc::read_json_file(out + "/verify.json");
    CHECK(rep["pass"] == true);
    const nlohmann::json man = sfc::read_json_file(out + "/manifest.json");
    CHECK(man["config_hash"] == sfc::sha256_hex(sfc::read_json_file(scenario_path()).dump()));
}

TEST_CASE("itinerary subcommand") {
    const std::string out = out_dir("itin0");
    REQUIRE(run("itinerary --scenario \"" + scenario_path() + "\" --symbols 0 --out \"" + out + "\"").code == 0);
    const nlohmann::json j = sfc::read_json_file(out + "/itinerary.json");
    CHECK(j["symbols"] == std::vector<int>{0});
    CHECK(j["memberships"][0] == "M0");
    CHECK(first_line(out + "/orbit.csv") == "j,psi,delta,phi,membership,level");
    CHECK(line_count(out + "/orbit.csv") == 2);

    const std::string out8 = out_dir("itin8");
    REQUIRE(run("itinerary --scenario \"" + scenario_path() + "\" --symbols 01101001 --out \"" + out8 + "\"").code == 0);
    const nlohmann::json j8 = sfc::read_json_file(out8 + "/itinerary.json");
    const char* want[] = {"M0", "M1", "M1", "M0", "M1", "M0", "M0", "M1"};
    REQUIRE(j8["memberships"].size() == 8);
    for (int k = 0; k < 8; ++k) CHECK(j8["memberships"][k] == want[k]);

    const std::string outw = out_dir("itinw");
    REQUIRE(run("itinerary --scenario \"" + scenario_path() + "\" --symbols 01101 --window 2 --out \"" + outw + "\"").code == 0);
    const nlohmann::json jw = sfc::read_json_file(outw + "/itinerary.json");
    CHECK(jw["offset"] == -2);
    CHECK(jw.contains("window_discrepancy"));
    std::ifstream csv(outw + "/orbit.csv");
    std::string line;
    std::getline(csv, line);
    std::getline(csv, line);
    CHECK(line.rfind("-2,", 0) == 0);

    CHECK(run("itinerary --scenario \"" + scenario_path() + "\" --symbols \"\"").code == 2);
    CHECK(run("itinerary --scenario \"" + scenario_path() + "\" --symbols 012").code == 2);
    CHECK(run("itinerary --scenario \"" + scenario_path() + "\" --symbols 01 --window 2").code == 2);
}

TEST_CASE("plotdata subcommand") {
    const std::string out = out_dir("plot");
    REQUIRE(run("plotdata inner-spiral --scenario \"" + scenario_path() + "\" --out \"" + out + "\"").code == 0);
    CHECK(first_line(out + "/inner_spiral.csv") == "delta,x1,x2,r,phi");
    CHECK(line_count(out + "/inner_spiral.csv") == 1001);
    REQUIRE(run("plotdata return-curve --scenario \"" + scenario_path() + "\" --out \"" + out + "\"").code == 0);
    CHECK(first_line(out + "/return_curve.csv") == "marker,t,psi,delta,phi,image_psi,image_delta");
    REQUIRE(run("plotdata phase-portrait --scenario \"" + scenario_path() + "\" --out \"" + out + "\"").code == 0);
    CHECK(first_line(out + "/phase_portrait.csv") == "t,y1,y2,y3");
    CHECK(run("plotdata heatmap --scenario \"" + scenario_path() + "\" --out \"" + out + "\"").code == 2);
}
