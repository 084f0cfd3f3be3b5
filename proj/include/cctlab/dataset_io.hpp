#pragma once

#include "cctlab/scenario.hpp"
#include "cctlab/table.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cctlab {

/// Column names in file order: cont_no, delta*_t0, pg*_t0, qg*_t0, pd*_t0,
/// optional pg*_t1.
std::vector<std::string> feature_names(std::size_t machines, std::size_t loads, bool with_t1);

FeatureTable to_table(const Dataset& dataset, bool with_t1);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

void write_table_csv(std::ostream& os, const FeatureTable& table, const std::string& target_name = "cct");
void write_dataset_csv(std::ostream& os, const Dataset& dataset, bool with_t1);
FeatureTable read_table_csv(std::istream& is, const std::string& target_name = "cct");
FeatureTable read_table_csv(const std::filesystem::path& path, const std::string& target_name = "cct");

/// Sidecar document: seed, case hash, counts and the scenario behind every row.
nlohmann::json provenance_json(const Dataset& dataset);

struct DatasetFiles {
    std::filesystem::path csv;
    std::filesystem::path provenance;
};

DatasetFiles save_dataset(const Dataset& dataset, const std::filesystem::path& dir, bool with_t1,
                          const std::string& stem = "dataset");

/// Scenario and contingency behind each row, read back from a sidecar.
struct RowOrigin {
    int cont_no = 0;
    Scenario scenario;
    double cct = 0.0;
};

std::vector<RowOrigin> read_row_origins(const std::filesystem::path& provenance_path);

}  // namespace cctlab
