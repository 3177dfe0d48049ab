#pragma once

// JSON file formats. Objects are written with sorted keys, two-space
// indentation and floats at 17 significant digits, so equal data always
// produces equal bytes. Non-finite floats are written as the strings
// "inf", "-inf" and "nan".

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sassc/homotopy.hpp"
#include "sassc/solvers.hpp"

namespace sassc {

using Json = nlohmann::json;

std::string canonical_dump(const Json& value);

/// Throws InputError with the parser message.
Json parse_json(const std::string& text);

/// Throws InputError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);

Json field_spec_to_json(const FieldSpec& spec);
FieldSpec field_spec_from_json(const Json& j);

Json instance_to_json(const InstanceConfig& config);
/// Validates the result (validate_config) before returning.
InstanceConfig instance_from_json(const Json& j);

/// SHA-256 of the canonical instance document.
std::string instance_hash(const InstanceConfig& config);

Json primal_to_json(const PrimalPoint& x);
Json dual_to_json(const DualPoint& lambda);
/// Shapes are checked against the instance; rho is derived when absent.
PrimalPoint primal_from_json(const Instance& inst, const Json& j);
DualPoint dual_from_json(const Instance& inst, const Json& j);

Json kkt_to_json(const KktReport& report);
Json params_to_json(const SolverParams& params);
/// Wall time is left out so that reports are reproducible byte for byte.
Json solve_report_to_json(const SolveReport& report);
Json homotopy_to_json(const HomotopyReport& report);

}  // namespace sassc
