#include "geomphase/cli/table.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace geomphase::cli {

ResultTable::ResultTable()
    : columns_({"record", "model", "sweep", "level", "order", "m", "n", "sample", "dir", "time",
                "L", "R", "eps", "value_re", "value_im"}) {}

int ResultTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name) return static_cast<int>(i);
    throw Error("ResultTable: unknown column " + name);
}

ResultTable::RowBuilder& ResultTable::RowBuilder::set(const std::string& column, double v) {
    cells_[table_.column_index(column)] = v;
    return *this;
}

ResultTable::RowBuilder& ResultTable::RowBuilder::set(const std::string& column, long long v) {
    cells_[table_.column_index(column)] = v;
    return *this;
}

ResultTable::RowBuilder& ResultTable::RowBuilder::set(const std::string& column,
                                                      const std::string& v) {
    cells_[table_.column_index(column)] = v;
    return *this;
}

void ResultTable::RowBuilder::commit() { table_.rows_.push_back(std::move(cells_)); }

void ResultTable::append(const ResultTable& other) {
    for (const auto& row : other.rows_) rows_.push_back(row);
}

std::optional<double> ResultTable::number(size_t row, const std::string& column) const {
    const Cell& c = rows_[row][column_index(column)];
    if (std::holds_alternative<double>(c)) return std::get<double>(c);
    if (std::holds_alternative<long long>(c))
        return static_cast<double>(std::get<long long>(c));
    return std::nullopt;
}

std::optional<std::string> ResultTable::text(size_t row, const std::string& column) const {
    const Cell& c = rows_[row][column_index(column)];
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    return std::nullopt;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
    bool needs_quote = s.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string ResultTable::to_csv() const {
    std::ostringstream out;
    for (size_t i = 0; i < columns_.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(columns_[i]);
    }
    out << "\r\n";
    for (const auto& row : rows_) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            const Cell& c = row[i];
            if (std::holds_alternative<double>(c))
                out << format_number(std::get<double>(c));
            else if (std::holds_alternative<long long>(c))
                out << std::get<long long>(c);
            else if (std::holds_alternative<std::string>(c))
                out << csv_escape(std::get<std::string>(c));
        }
        out << "\r\n";
    }
    return out.str();
}

void ResultTable::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write table to " + path);
    out << to_csv();
}

}  // namespace geomphase::cli
