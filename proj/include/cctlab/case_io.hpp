#pragma once

#include "cctlab/grid.hpp"
#include "cctlab/scenario.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cctlab {

void to_json(nlohmann::json& j, const NetworkCase& net);
void from_json(const nlohmann::json& j, NetworkCase& net);
void to_json(nlohmann::json& j, const ContingencySpec& c);
void from_json(const nlohmann::json& j, ContingencySpec& c);
void to_json(nlohmann::json& j, const UncertaintySpec& spec);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

/// Reads an uncertainty block; fields left out fall back to `defaults`.
UncertaintySpec uncertainty_from_json(const nlohmann::json& j, UncertaintySpec defaults);

/// A case document: the network plus its contingency list and optional
/// uncertainty description.
struct CaseFile {
    NetworkCase network;
    std::vector<ContingencySpec> contingencies;
    UncertaintySpec uncertainty;
};

CaseFile parse_case_file(const nlohmann::json& j);
CaseFile load_case_file(const std::filesystem::path& path);
nlohmann::json case_file_to_json(const CaseFile& file);

/// FNV-1a over the canonical JSON dump of the network.
std::string case_fingerprint(const NetworkCase& net);

}  // namespace cctlab
