#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace myomap::csv {

/// Shortest decimal that round-trips to the same double; NaN becomes "".
std::string format(double value);
std::string format(std::optional<double> value);

double parse_double(std::string_view text);
std::optional<double> parse_optional(std::string_view text);

std::vector<std::string> split_line(std::string_view line);
std::string join(const std::vector<std::string>& fields);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws SchemaError if absent.
    [[nodiscard]] std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

}  // namespace myomap::csv
