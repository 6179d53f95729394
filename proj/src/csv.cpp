#include "ipdl/csv.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ipdl/errors.hpp"

namespace ipdl::csv {

namespace {
std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}
} // namespace

int Table::col(const std::string& name) const {
    auto it = col_index.find(name);
    if (it == col_index.end()) throw missing_column(path, name);
    return it->second;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open " + path);
    Table t;
    t.path = path;
    std::string line;
    if (!std::getline(in, line)) throw Error("EmptyFile", path + " has no header row");
    t.header = split(line);
    for (size_t i = 0; i < t.header.size(); ++i) t.col_index[t.header[i]] = (int)i;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw DataError("BadRow", path, (long)t.rows.size() + 2, "",
                            "expected " + std::to_string(t.header.size()) + " cells, got " +
                                std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

double parse_double(const Table& t, size_t row, int col) {
    const std::string& s = t.cell(row, col);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError("BadNumber", t.path, (long)row + 2, t.header[col],
                        "not a number: '" + s + "'");
    if (v != v)
        throw DataError("BadNumber", t.path, (long)row + 2, t.header[col], "NaN not allowed");
    return v;
}

double parse_nonneg(const Table& t, size_t row, int col) {
    double v = parse_double(t, row, col);
    if (v < 0) throw negative_value(t.path, (long)row + 2, t.header[col]);
    return v;
}

int parse_bool01(const Table& t, size_t row, int col) {
    const std::string& s = t.cell(row, col);
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DataError("BadBoolean", t.path, (long)row + 2, t.header[col],
                    "expected 0 or 1, got '" + s + "'");
}

void Writer::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size())
        throw Error("BadRow", "writer row width mismatch");
    rows_.push_back(std::move(row));
}

std::string Writer::to_string() const {
    std::ostringstream out;
    for (size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << "\n";
    for (const auto& r : rows_) {
        for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << "\n";
    }
    return out.str();
}

void Writer::write(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("WriteFailed", "cannot open " + tmp);
        out << to_string();
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("WriteFailed", "cannot rename " + tmp + " -> " + path);
}

std::string fmt(double v) {
    if (v == 0) v = 0; // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_count(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
}

} // namespace ipdl::csv
