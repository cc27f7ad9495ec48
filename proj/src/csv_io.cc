// Copyright 2026 The trapsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "trapsim/cli_io.h"

namespace trapsim::io {

namespace {

std::string trim(const std::string &s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_cell(const std::string &cell, const std::string &where) {
    double v = 0;
    const char *begin = cell.data();
    const char *end = begin + cell.size();
    if (!cell.empty() && *begin == '+') begin++;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || std::isnan(v)) {
        throw ConfigError(where + ": not a number: '" + cell + "'");
    }
    return v;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path &path, const std::vector<std::string> &columns) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    CsvTable table;
    table.columns = columns;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        line_no++;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::string where = path.string() + ":" + std::to_string(line_no);
        auto cells = split(t);
        if (!header) {
            if (cells != columns) {
                std::string expected;
                for (const auto &c : columns) expected += (expected.empty() ? "" : ",") + c;
                throw ConfigError(where + ": expected header '" + expected + "', got '" + t + "'");
            }
            header = true;
            continue;
        }
        if (cells.size() != columns.size()) {
            throw ConfigError(where + ": expected " + std::to_string(columns.size()) + " columns, got " +
                              std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (const auto &c : cells) row.push_back(parse_cell(c, where));
        table.rows.push_back(std::move(row));
    }
    if (!header) throw ConfigError(path.string() + ": empty file (missing header)");
    return table;
}

void write_csv(std::ostream &out, const CsvTable &table) {
    for (std::size_t i = 0; i < table.columns.size(); i++) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto &row : table.rows) {
        for (std::size_t i = 0; i < row.size(); i++) out << (i ? "," : "") << format_number(row[i]);
        out << '\n';
    }
}

std::vector<micromotion::ScanRecord> scan_records_from_csv(const CsvTable &table, double gain) {
    std::vector<micromotion::ScanRecord> records;
    for (const auto &row : table.rows) {
        double ts = row[0], dv = row[1], p1 = row[2], shots = row[3];
        if (!(p1 >= 0 && p1 <= 1)) throw ConfigError("scan CSV: p1 outside [0, 1]: " + format_number(p1));
        if (!(shots >= 1)) throw ConfigError("scan CSV: shots must be >= 1 or inf");
        // Rows sharing a timestamp form one record; records keep file order.
        if (records.empty() || records.back().timestamp != ts) {
            records.push_back({ts, micromotion::ScanAxis::voltage, gain, {}});
        }
        records.back().points.push_back({dv, p1, shots});
    }
    if (records.empty()) throw ConfigError("scan CSV has no data rows");
    return records;
}

CsvTable scan_records_to_csv(const std::vector<micromotion::ScanRecord> &records) {
    CsvTable table{{"timestamp_s", "delta_v_V", "p1", "shots"}, {}};
    for (const auto &r : records) {
        for (const auto &p : r.points) table.rows.push_back({r.timestamp, p.x, p.p1, p.shots});
    }
    return table;
}

}  // namespace trapsim::io
