#include "myomap/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "myomap/error.hpp"

namespace myomap::csv {

std::string format(double value) {
    if (std::isnan(value)) {
        return {};
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) {
        throw Error(ErrorCode::IoError, "cannot format number");
    }
    return {buf, end};
}

std::string format(std::optional<double> value) {
    return value ? format(*value) : std::string{};
}

double parse_double(std::string_view text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::SchemaError, "not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::optional<double> parse_optional(std::string_view text) {
    if (text.empty()) {
        return std::nullopt;
    }
    return parse_double(text);
}

std::vector<std::string> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].find_first_of(",\n") != std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, "CSV field contains a separator: " + fields[i]);
        }
        if (i > 0) {
            out += ',';
        }
        out += fields[i];
    }
    return out;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw Error(ErrorCode::SchemaError, "missing CSV column '" + std::string(name) + "'");
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    Table table;
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::SchemaError, "empty CSV file " + path.string());
    }
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        auto fields = split_line(line);
        if (fields.size() != table.header.size()) {
            throw Error(ErrorCode::SchemaError, "ragged CSV row in " + path.string());
        }
        table.rows.push_back(std::move(fields));
    }
    return table;
}

void write(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << join(table.header) << '\n';
    for (const auto& row : table.rows) {
        out << join(row) << '\n';
    }
}

}  // namespace myomap::csv
