// config.hpp — experiment configuration files (JSON).

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nmpec/qem.hpp"

namespace nmpec {

struct ExperimentConfig {
    RunConfig run;
    std::string output_directory = "out";
    std::vector<std::string> formats{"csv", "json"};
    bool has_sweep = false;
    std::vector<CutoffBath> cutoffs;
    nlohmann::json canonical;  ///< normalized form; serializing it and loading again is a fixed point
};

/// Real-coefficient Pauli expression such as "0.5 XI + 0.5 IX" or "-1.0 Z".
Matrix parse_pauli_expression(std::string_view text, int n);

/// Operator given as a Pauli expression, a list [[coef, "word"], ...] or
/// {"matrix": [[[re, im], ...], ...]}.
Matrix parse_operator(const nlohmann::json& j, int n, const std::string& field);

/// Pauli decomposition as [[coef, "word"], ...] with zero terms removed.
nlohmann::json operator_to_json(const Matrix& op);

/// Throws std::invalid_argument with a field pointer on any violation.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string serialize_config(const ExperimentConfig& config);
/// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace nmpec
