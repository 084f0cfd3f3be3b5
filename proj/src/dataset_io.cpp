#include "cctlab/dataset_io.hpp"

#include "cctlab/case_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cctlab {

std::vector<std::string> feature_names(std::size_t machines, std::size_t loads, bool with_t1) {
    std::vector<std::string> names{"cont_no"};
    for (std::size_t i = 1; i <= machines; ++i) names.push_back("delta" + std::to_string(i) + "_t0");
    for (std::size_t i = 1; i <= machines; ++i) names.push_back("pg" + std::to_string(i) + "_t0");
    for (std::size_t i = 1; i <= machines; ++i) names.push_back("qg" + std::to_string(i) + "_t0");
    for (std::size_t i = 1; i <= loads; ++i) names.push_back("pd" + std::to_string(i) + "_t0");
    if (with_t1) {
        for (std::size_t i = 1; i <= machines; ++i) names.push_back("pg" + std::to_string(i) + "_t1");
    }
    return names;
}

FeatureTable to_table(const Dataset& dataset, bool with_t1) {
    FeatureTable table;
    if (dataset.rows.empty()) {
        table.names = feature_names(0, 0, with_t1);
        table.x.resize(0, static_cast<Eigen::Index>(table.names.size()));
        table.y.resize(0);
        return table;
    }
    const auto& first = dataset.rows.front().features;
    const auto m = static_cast<std::size_t>(first.pg_t0.size());
    const auto l = static_cast<std::size_t>(first.pd_t0.size());
    table.names = feature_names(m, l, with_t1);
    const auto rows = static_cast<Eigen::Index>(dataset.rows.size());
    const auto cols = static_cast<Eigen::Index>(table.names.size());
    table.x.resize(rows, cols);
    table.y.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = dataset.rows[static_cast<std::size_t>(r)];
        const auto& f = row.features;
        if (static_cast<Eigen::Index>(f.width(with_t1)) != cols) {
            throw std::invalid_argument("dataset rows have non-uniform feature width");
        }
        Eigen::Index c = 0;
        table.x(r, c++) = f.cont_no;
        for (auto* block : {&f.delta_t0_deg, &f.pg_t0, &f.qg_t0, &f.pd_t0}) {
            for (Eigen::Index i = 0; i < block->size(); ++i) table.x(r, c++) = (*block)(i);
        }
        if (with_t1) {
            for (Eigen::Index i = 0; i < f.pg_t1.size(); ++i) table.x(r, c++) = f.pg_t1(i);
        }
        table.y(r) = row.cct;
    }
    return table;
}

std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_table_csv(std::ostream& os, const FeatureTable& table, const std::string& target_name) {
    for (const auto& n : table.names) os << n << ',';
    os << target_name << '\n';
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        for (Eigen::Index c = 0; c < table.cols(); ++c) os << format_number(table.x(r, c)) << ',';
        os << format_number(table.y(r)) << '\n';
    }
}

void write_dataset_csv(std::ostream& os, const Dataset& dataset, bool with_t1) {
    write_table_csv(os, to_table(dataset, with_t1));
}

FeatureTable read_table_csv(std::istream& is, const std::string& target_name) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty CSV input");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            header.push_back(cell);
        }
    }
    std::ptrdiff_t target = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == target_name) target = static_cast<std::ptrdiff_t>(k);
    }
    if (target < 0) throw std::runtime_error("CSV has no '" + target_name + "' column");

    FeatureTable table;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (static_cast<std::ptrdiff_t>(k) != target) table.names.push_back(header[k]);
    }
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> values;
        std::size_t start = 0;
        while (start <= line.size()) {
            const auto end = std::min(line.find(',', start), line.size());
            double v = 0.0;
            const char* first = line.data() + start;
            const char* last = line.data() + end;
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{} || res.ptr != last) {
                throw std::runtime_error("CSV line " + std::to_string(line_no) + ": bad number '" +
                                         std::string(first, last) + "'");
            }
            values.push_back(v);
            start = end + 1;
        }
        if (values.size() != header.size()) {
            throw std::runtime_error("CSV line " + std::to_string(line_no) + " has " + std::to_string(values.size()) +
                                     " fields, expected " + std::to_string(header.size()));
        }
        targets.push_back(values[static_cast<std::size_t>(target)]);
        values.erase(values.begin() + target);
        rows.push_back(std::move(values));
    }
    table.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.names.size()));
    table.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            table.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
        table.y(static_cast<Eigen::Index>(r)) = targets[r];
    }
    return table;
}

FeatureTable read_table_csv(const std::filesystem::path& path, const std::string& target_name) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_table_csv(in, target_name);
}

nlohmann::json provenance_json(const Dataset& dataset) {
    const auto& p = dataset.provenance;
    nlohmann::json j;
    j["format_version"] = 1;
    j["seed"] = p.seed;
    j["case_hash"] = p.case_hash;
    j["contingencies"] = p.contingencies;
    j["n_per_contingency"] = p.n_per_contingency;
    j["retained"] = dataset.rows.size();
    j["excluded_zero"] = p.excluded_zero;
    j["excluded_infinite"] = p.excluded_infinite;
    j["excluded_nonconverged"] = p.excluded_nonconverged;
    j["cct_options"] = {{"beta_deg", p.cct.beta_deg},   {"bracket_max", p.cct.bracket_max},
                        {"tol", p.cct.tol},             {"t_fault", p.cct.t_fault},
                        {"horizon", p.cct.horizon},     {"step", p.cct.step}};
    auto& excluded = j["excluded"] = nlohmann::json::array();
    for (const auto& e : p.excluded) {
        excluded.push_back({{"cont_no", e.cont_no}, {"seed_index", e.seed_index}, {"reason", e.reason}});
    }
    auto& rows = j["rows"] = nlohmann::json::array();
    for (const auto& row : dataset.rows) {
        rows.push_back({{"cont_no", row.features.cont_no}, {"scenario", row.scenario}, {"cct", row.cct}});
    }
    return j;
}

DatasetFiles save_dataset(const Dataset& dataset, const std::filesystem::path& dir, bool with_t1,
                          const std::string& stem) {
    std::filesystem::create_directories(dir);
    DatasetFiles files{dir / (stem + ".csv"), dir / (stem + ".provenance.json")};
    {
        std::ofstream out(files.csv, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + files.csv.string());
        write_dataset_csv(out, dataset, with_t1);
    }
    {
        std::ofstream out(files.provenance, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + files.provenance.string());
        out << provenance_json(dataset).dump(2) << '\n';
    }
    return files;
}

std::vector<RowOrigin> read_row_origins(const std::filesystem::path& provenance_path) {
    std::ifstream in(provenance_path);
    if (!in) throw std::runtime_error("cannot open " + provenance_path.string());
    nlohmann::json j;
    in >> j;
    std::vector<RowOrigin> out;
    for (const auto& row : j.at("rows")) {
        RowOrigin origin;
        origin.cont_no = row.at("cont_no").get<int>();
        origin.scenario = row.at("scenario").get<Scenario>();
        origin.cct = row.at("cct").get<double>();
        out.push_back(std::move(origin));
    }
    return out;
}

}  // namespace cctlab
