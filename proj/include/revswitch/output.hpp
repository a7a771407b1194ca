#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace revswitch::output {

/// Shortest round-trip decimal form ("%.17g"); NaN and infinities as nan/inf.
std::string format_number(double v);

/// Write through a sibling temporary file and rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    void add_row(const std::vector<double>& values);
    /// Row with trailing text cells (labels, file references).
    void add_row(const std::vector<double>& values, const std::vector<std::string>& text);

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::string> rows_;
};

/// Writes `name` and `name.meta.json` ({columns, rows, ...meta}) in `dir`.
void write_csv(const std::filesystem::path& dir, const std::string& name, const CsvTable& table,
               const nlohmann::json& meta);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

} // namespace revswitch::output
