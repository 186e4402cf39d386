#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace proxiphene {

/// A parsed CSV file. Lines starting with `#` are metadata and are skipped.
struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based file line of each row

    [[nodiscard]] std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in, std::string source);
CsvTable read_csv_file(const std::string& path);

/// Throws proxiphene::Error (input) unless the header matches exactly.
void require_header(const CsvTable& table, std::initializer_list<std::string_view> expected);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip decimal representation; `nan`/`inf`/`-inf` for non-finite values.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace proxiphene
