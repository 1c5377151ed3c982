#ifndef FG_IO_HPP
#define FG_IO_HPP

// Dataset ingestion, result documents and atomic file output.

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fg/fg_core.hpp"

namespace fg {

/// Malformed input data. Reported by the CLI with exit code 2.
class DataError : public DomainError {
public:
    using DomainError::DomainError;
};

struct ColumnMeta {
    std::string name;
    std::string units;  // parsed from a trailing "(units)" or "[units]" in the header
};

struct Dataset {
    std::string source;
    std::vector<ColumnMeta> columns;
    std::vector<std::vector<std::string>> rows;  // raw cells

    bool has_column(const std::string& name) const;
    std::size_t column_index(const std::string& name) const;
    /// Parses every cell of the column as a finite real. Throws DataError
    /// listing the offending data rows (1-based) on any missing or
    /// non-numeric entry.
    std::vector<double> numeric_column(const std::string& name) const;
    const std::vector<std::string>& text_row(std::size_t i) const { return rows.at(i); }
};

/// Comma or tab separated text with a header row. Lines starting with '#'
/// are skipped, as is the column-format line of USGS RDB exports.
Dataset parse_csv(std::istream& in, const std::string& source);
Dataset read_csv(const std::string& path);

struct DailyChange {
    std::string date;
    double change;
};

/// Daily maximum minus minimum of a gauge series, positive when the
/// maximum is recorded after the minimum and negative otherwise. Days are
/// the first ten characters of the timestamp (YYYY-MM-DD).
std::vector<DailyChange> elevation_change(const Dataset& raw, const std::string& time_column,
                                          const std::string& value_column);

inline constexpr int kSchemaVersion = 1;

struct ResultDocument {
    int schema_version = kSchemaVersion;
    std::vector<std::string> command;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json payload = nlohmann::json::object();
    nlohmann::json timing = nlohmann::json::object();
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static ResultDocument from_json(const nlohmann::json& j);
    bool operator==(const ResultDocument&) const = default;
};

void write_result(const ResultDocument& doc, const std::string& path);
ResultDocument read_result(const std::string& path);

/// Writes to a sibling temporary file and renames it over path.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace fg

#endif
