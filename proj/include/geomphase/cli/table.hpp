#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "geomphase/common.hpp"

namespace geomphase::cli {

/// Long-format result table with one fixed wide schema shared by every
/// command; unused cells stay empty. CSV bodies are deterministic: 17
/// significant digits, '.' decimal, RFC-4180 quoting.
class ResultTable {
public:
    using Cell = std::variant<std::monostate, double, long long, std::string>;

    ResultTable();

    class RowBuilder {
    public:
        RowBuilder(ResultTable& table) : table_(table), cells_(table.columns_.size()) {}
        RowBuilder& set(const std::string& column, double v);
        RowBuilder& set(const std::string& column, long long v);
        RowBuilder& set(const std::string& column, int v) {
            return set(column, static_cast<long long>(v));
        }
        RowBuilder& set(const std::string& column, const std::string& v);
        void commit();

    private:
        ResultTable& table_;
        std::vector<Cell> cells_;
    };

    RowBuilder row() { return RowBuilder(*this); }
    void append(const ResultTable& other);

    const std::vector<std::string>& columns() const { return columns_; }
    size_t size() const { return rows_.size(); }
    const std::vector<Cell>& at(size_t i) const { return rows_[i]; }
    std::optional<double> number(size_t row, const std::string& column) const;
    std::optional<std::string> text(size_t row, const std::string& column) const;

    std::string to_csv() const;
    void write_csv(const std::string& path) const;

private:
    friend class RowBuilder;
    int column_index(const std::string& name) const;
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

std::string format_number(double v);

}  // namespace geomphase::cli
