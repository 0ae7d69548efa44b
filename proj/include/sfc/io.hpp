#pragma once

#include <string>

#include "json.hpp"

#include "sfc/fields.hpp"

namespace sfc {

// Decimal text with 17 significant digits.
std::string format_real(double v);

// JSON text with fixed key order as inserted and every float at 17 significant digits; ends in a newline.
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

nlohmann::ordered_json field_to_json(const FieldSpec& spec);
FieldSpec field_from_json(const nlohmann::json& j);

// Registry of named user nonlinearities so that JSON configs can refer to them.
void register_user_nonlinearity(const std::string& name, UserNonlinearity g);
bool has_user_nonlinearity(const std::string& name);

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace sfc
