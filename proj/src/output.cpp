#include "revswitch/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "revswitch/error.hpp"

namespace revswitch::output {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io", "cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw Error("io", "write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("io", "cannot rename " + tmp.string() + ": " + ec.message());
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw InvalidArgument("CsvTable: no columns");
}

void CsvTable::add_row(const std::vector<double>& values) { add_row(values, {}); }

void CsvTable::add_row(const std::vector<double>& values, const std::vector<std::string>& text) {
    if (values.size() + text.size() != columns_.size()) throw InvalidArgument("CsvTable: row width mismatch");
    std::string row;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) row += ',';
        row += format_number(values[i]);
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!row.empty() || i) row += ',';
        row += text[i];
    }
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) os << r << '\n';
    return os.str();
}

void write_csv(const std::filesystem::path& dir, const std::string& name, const CsvTable& table,
               const nlohmann::json& meta) {
    write_atomic(dir / name, table.str());
    nlohmann::json m = meta;
    m["file"] = name;
    m["columns"] = table.columns();
    m["rows"] = table.rows();
    write_json(dir / (name + ".meta.json"), m);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
    write_atomic(path, value.dump(2) + "\n");
}

} // namespace revswitch::output
