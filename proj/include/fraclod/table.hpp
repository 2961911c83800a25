#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace fraclod {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Rectangular table with named columns and rows in insertion order.
class ResultTable {
public:
    ResultTable() = default;
    explicit ResultTable(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    void add_row(std::vector<Cell> row);
    std::size_t column_index(const std::string& name) const;
    /// Numeric column as doubles; throws for string cells.
    std::vector<double> numeric_column(const std::string& name) const;
    const Cell& at(std::size_t row, const std::string& column) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

/// Reals with 17 significant digits, '.' decimal point, '\n' line ends.
std::string to_csv(const ResultTable& table);
void emit_csv(const ResultTable& table, const std::filesystem::path& path);
/// Numeric-looking fields become doubles (or integers), the rest strings.
ResultTable read_csv(const std::filesystem::path& path);
ResultTable parse_csv(const std::string& text);

struct PlotOptions {
    std::string title;
    bool log_x = false;
    bool log_y = false;
    /// Column whose values split the rows into separate series.
    std::string group_by;
};

/// Static SVG line plot of y-columns against x.
void emit_svg_plot(const ResultTable& table, const std::string& x, const std::vector<std::string>& ys,
                   const PlotOptions& options, const std::filesystem::path& path);

}  // namespace fraclod
