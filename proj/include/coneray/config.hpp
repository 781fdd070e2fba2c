#pragma once

#include "coneray/hypotheses.hpp"
#include "coneray/system.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coneray {

/// A validated problem description.
///
/// `canonical` is the input with defaults filled in and every expression reprinted
/// in canonical form; `digest` is the SHA-256 of its compact dump, so configs that
/// differ only in formatting, key order or omitted defaults share a digest.
struct ProblemConfig {
    nlohmann::json canonical;
    std::string digest;
    std::shared_ptr<const Mesh> mesh;
    std::vector<ComponentSpec> components;
    std::optional<HypothesisTemplate> hypotheses;
};

/// Throws ConfigError naming the offending path, e.g. "components[0].boundary.kind".
ProblemConfig parse_config(const nlohmann::json& doc);

/// source is a file path or "preset:NAME".
ProblemConfig load_config(const std::string& source);

/// Throws ConfigError listing the known names.
nlohmann::json preset_config(std::string_view name);
std::vector<std::string> preset_names();

std::string sha256_hex(std::string_view bytes);

/// Assembles the operators. Throws ConfigError (validation) or SingularOperator.
Problem build_problem(const ProblemConfig& cfg);

} // namespace coneray
