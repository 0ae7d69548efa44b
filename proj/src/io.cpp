#include "sfc/io.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include <openssl/evp.h>

#include "sfc/errors.hpp"

namespace sfc {

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void dump_rec(const nlohmann::ordered_json& j, int indent, int level, std::string& out) {
    const std::string pad_in(static_cast<std::size_t>(indent * (level + 1)), ' ');
    const std::string pad_out(static_cast<std::size_t>(indent * level), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad_in;
                out += nlohmann::json(it.key()).dump();
                out += indent > 0 ? ": " : ":";
                dump_rec(it.value(), indent, level + 1, out);
            }
            out += nl;
            out += pad_out;
            out += "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // Short numeric arrays stay on one line.
            bool flat = j.size() <= 4;
            for (const auto& e : j) flat = flat && e.is_primitive();
            if (flat) {
                out += "[";
                for (std::size_t k = 0; k < j.size(); ++k) {
                    if (k) out += ", ";
                    dump_rec(j[k], indent, level + 1, out);
                }
                out += "]";
                return;
            }
            out += "[";
            out += nl;
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) {
                    out += ",";
                    out += nl;
                }
                out += pad_in;
                dump_rec(j[k], indent, level + 1, out);
            }
            out += nl;
            out += pad_out;
            out += "]";
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
            } else {
                out += format_real(v);
            }
            return;
        }
        default: out += j.dump(); return;
    }
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

std::map<std::string, UserNonlinearity>& registry() {
    static std::map<std::string, UserNonlinearity> r;
    return r;
}

double require_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorKind::Config, std::string("missing field '") + key + "'");
    if (!j.at(key).is_number()) throw Error(ErrorKind::Config, std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& j, int indent) {
    std::string out;
    dump_rec(j, indent, 0, out);
    out += "\n";
    return out;
}

nlohmann::ordered_json field_to_json(const FieldSpec& spec) {
    nlohmann::ordered_json j;
    j["sigma"] = spec.eigen.sigma;
    j["mu"] = spec.eigen.mu;
    j["u"] = spec.eigen.u;
    nlohmann::ordered_json nl;
    switch (spec.kind) {
        case NonlinearityKind::None: nl["kind"] = "none"; break;
        case NonlinearityKind::BuiltinQuadratic:
            nl["kind"] = "builtin_quadratic";
            nl["eta0"] = spec.eta0;
            break;
        case NonlinearityKind::User:
            nl["kind"] = "user";
            nl["name"] = spec.user_name;
            nl["r_V"] = spec.r_V;
            break;
    }
    j["nonlinearity"] = nl;
    return j;
}

FieldSpec field_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "field must be a JSON object");
    Eigentriple e{require_number(j, "sigma"), require_number(j, "mu"), require_number(j, "u")};
    std::string kind = "none";
    nlohmann::json nl = nlohmann::json::object();
    if (j.contains("nonlinearity")) {
        nl = j.at("nonlinearity");
        if (!nl.is_object() || !nl.contains("kind") || !nl.at("kind").is_string()) {
            throw Error(ErrorKind::Config, "nonlinearity needs a string 'kind'");
        }
        kind = nl.at("kind").get<std::string>();
    }
    FieldSpec spec;
    if (kind == "none") {
        spec = FieldSpec::linear(e);
        spec.validate();
    } else if (kind == "builtin_quadratic") {
        spec = FieldSpec::builtin_quadratic(e, require_number(nl, "eta0"));
    } else if (kind == "user") {
        const std::string name = nl.value("name", std::string("user"));
        const double r_V = nl.contains("r_V") ? require_number(nl, "r_V") : 1.0;
        UserNonlinearity g;
        {
            std::lock_guard<std::mutex> lock(registry_mutex());
            const auto it = registry().find(name);
            if (it == registry().end()) throw Error(ErrorKind::Config, "unknown user nonlinearity '" + name + "'");
            g = it->second;
        }
        spec = FieldSpec::user_field(e, g, r_V, name);
    } else {
        throw Error(ErrorKind::Config, "unknown nonlinearity kind '" + kind + "'");
    }
    return spec;
}

void register_user_nonlinearity(const std::string& name, UserNonlinearity g) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    registry()[name] = std::move(g);
}

bool has_user_nonlinearity(const std::string& name) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    return registry().count(name) != 0;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Config, "SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[md[k] >> 4];
        out += hex[md[k] & 15];
    }
    return out;
}

}  // namespace sfc
