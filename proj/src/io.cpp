#include "fg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace fg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw DataError("unterminated quoted field");
    cells.push_back(trim(cur));
    return cells;
}

bool parse_real(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool is_rdb_format_row(const std::vector<std::string>& cells) {
    static const std::regex fmt(R"(\d+[sdn])");
    return std::all_of(cells.begin(), cells.end(), [](const std::string& c) { return std::regex_match(c, fmt); });
}

ColumnMeta parse_header_cell(const std::string& cell) {
    static const std::regex with_units(R"(^(.*?)\s*[\(\[]([^\)\]]*)[\)\]]$)");
    std::smatch m;
    if (std::regex_match(cell, m, with_units) && !trim(m[1].str()).empty()) return {trim(m[1].str()), trim(m[2].str())};
    return {cell, ""};
}

}  // namespace

bool Dataset::has_column(const std::string& name) const {
    return std::any_of(columns.begin(), columns.end(), [&](const ColumnMeta& c) { return c.name == name; });
}

std::size_t Dataset::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
        if (columns[j].name == name) return j;
    std::string known;
    for (const auto& c : columns) known += (known.empty() ? "" : ", ") + c.name;
    throw DataError("column '" + name + "' not found in " + source + " (available: " + known + ")");
}

std::vector<double> Dataset::numeric_column(const std::string& name) const {
    const std::size_t j = column_index(name);
    std::vector<double> out(rows.size());
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (!parse_real(rows[i][j], out[i])) bad.push_back(i + 1);
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "column '" << name << "' in " << source << " has " << bad.size()
            << " missing or non-numeric entr" << (bad.size() == 1 ? "y" : "ies") << " at data row(s) ";
        for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 20); ++k) msg << (k ? ", " : "") << bad[k];
        if (bad.size() > 20) msg << ", ...";
        throw DataError(msg.str());
    }
    return out;
}

Dataset parse_csv(std::istream& in, const std::string& source) {
    Dataset d;
    d.source = source;
    std::string line;
    bool have_header = false;
    bool checked_format_row = false;
    char delim = ',';
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        if (!have_header) {
            delim = line.find('\t') != std::string::npos ? '\t' : ',';
            for (const auto& cell : split_line(line, delim)) d.columns.push_back(parse_header_cell(cell));
            have_header = true;
            continue;
        }
        auto cells = split_line(line, delim);
        if (!checked_format_row) {
            checked_format_row = true;
            if (delim == '\t' && is_rdb_format_row(cells)) continue;
        }
        if (cells.size() != d.columns.size()) {
            throw DataError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " fields, header has " + std::to_string(d.columns.size()));
        }
        d.rows.push_back(std::move(cells));
    }
    if (!have_header) throw DataError(source + ": no header row");
    return d;
}

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_csv(in, path);
}

std::vector<DailyChange> elevation_change(const Dataset& raw, const std::string& time_column,
                                          const std::string& value_column) {
    const std::size_t tj = raw.column_index(time_column);
    const std::vector<double> v = raw.numeric_column(value_column);
    struct Extremes {
        std::string t_max, t_min;
        double max = -INFINITY, min = INFINITY;
    };
    std::map<std::string, Extremes> days;
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        const std::string& t = raw.rows[i][tj];
        if (t.size() < 10) throw DataError("timestamp '" + t + "' at data row " + std::to_string(i + 1) + " is too short");
        Extremes& e = days[t.substr(0, 10)];
        if (v[i] > e.max || (v[i] == e.max && t < e.t_max)) {
            e.max = v[i];
            e.t_max = t;
        }
        if (v[i] < e.min || (v[i] == e.min && t < e.t_min)) {
            e.min = v[i];
            e.t_min = t;
        }
    }
    std::vector<DailyChange> out;
    out.reserve(days.size());
    for (const auto& [day, e] : days) {
        const double range = e.max - e.min;
        out.push_back({day, e.t_max > e.t_min ? range : -range});
    }
    return out;
}

nlohmann::json ResultDocument::to_json() const {
    return {{"schema_version", schema_version}, {"command", command}, {"config", config},
            {"payload", payload},               {"timing", timing},   {"seed", seed}};
}

ResultDocument ResultDocument::from_json(const nlohmann::json& j) {
    ResultDocument d;
    try {
        d.schema_version = j.at("schema_version").get<int>();
        d.command = j.at("command").get<std::vector<std::string>>();
        d.config = j.at("config");
        d.payload = j.at("payload");
        d.timing = j.at("timing");
        d.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed result document: ") + e.what());
    }
    if (d.schema_version != kSchemaVersion)
        throw DataError("unsupported result schema version " + std::to_string(d.schema_version));
    return d;
}

void write_result(const ResultDocument& doc, const std::string& path) {
    write_file_atomic(path, doc.to_json().dump(2) + "\n");
}

ResultDocument read_result(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return ResultDocument::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace fg
