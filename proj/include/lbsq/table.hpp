#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace lbsq {

/// Empty cells (monostate) serialize as an empty CSV field and JSON null.
using Cell = std::variant<std::monostate, std::string, double, std::int64_t>;

/// Long-format table shared by every CLI output.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

/// Doubles are printed with 12 significant digits; non-finite values become
/// empty cells.
std::string format_number(double v);

/// RFC 4180 style: fields with separators, quotes or newlines are quoted.
void write_csv(std::ostream& out, const Table& table);

/// Array of objects keyed by column name. Numbers are rounded to the same 12
/// significant digits as the CSV so both encodings parse to identical values.
void write_json(std::ostream& out, const Table& table);

enum class OutputFormat { Csv, Json };

void write_table(std::ostream& out, const Table& table, OutputFormat format);

}  // namespace lbsq
