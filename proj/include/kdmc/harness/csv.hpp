// SPDX-License-Identifier: Apache-2.0
//
// Minimal CSV table with round-trip double formatting.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace kdmc {

/// Output could not be written.
class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

using CsvCell = std::variant<double, std::int64_t, std::string>;

struct CsvTable
{
    std::vector<std::string> header;
    std::vector<std::vector<CsvCell>> rows;

    void add_row(std::vector<CsvCell> row)
    {
        if (row.size() != header.size()) {
            throw std::logic_error("CSV row width does not match header");
        }
        rows.push_back(std::move(row));
    }

    std::size_t column(std::string const& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw std::out_of_range("no CSV column named " + name);
    }

    double number(std::size_t row, std::string const& name) const
    {
        auto const& cell = rows.at(row).at(column(name));
        if (auto const* d = std::get_if<double>(&cell)) {
            return *d;
        }
        if (auto const* i = std::get_if<std::int64_t>(&cell)) {
            return static_cast<double>(*i);
        }
        throw std::invalid_argument("CSV column " + name + " is not numeric");
    }
};

/// Shortest representation that parses back to the same double.
inline std::string format_double(double value)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("failed to format number");
    }
    return std::string(buf, end);
}

inline void write_csv(std::ostream& os, CsvTable const& table)
{
    auto write_cell = [&os](CsvCell const& cell) {
        if (auto const* d = std::get_if<double>(&cell)) {
            os << format_double(*d);
        } else if (auto const* i = std::get_if<std::int64_t>(&cell)) {
            os << *i;
        } else {
            os << std::get<std::string>(cell);
        }
    };
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        os << (i ? "," : "") << table.header[i];
    }
    os << '\n';
    for (auto const& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                os << ',';
            }
            write_cell(row[i]);
        }
        os << '\n';
    }
}

inline std::string to_csv_string(CsvTable const& table)
{
    std::ostringstream os;
    write_csv(os, table);
    return os.str();
}

inline void emit_csv(CsvTable const& table, std::string const& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_csv(out, table);
    out.flush();
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

}  // namespace kdmc
