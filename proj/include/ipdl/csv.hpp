#ifndef IPDL_CSV_HPP
#define IPDL_CSV_HPP

#include <map>
#include <string>
#include <vector>

namespace ipdl::csv {

// Minimal CSV support: header row, comma separator, no quoting (none of
// our schemas need it), '.' decimal separator.
struct Table {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, int> col_index;

    // Throws MissingColumn if absent.
    int col(const std::string& name) const;
    const std::string& cell(size_t row, int col) const { return rows[row][col]; }
};

Table read_file(const std::string& path);

double parse_double(const Table& t, size_t row, int col);
double parse_nonneg(const Table& t, size_t row, int col);
int parse_bool01(const Table& t, size_t row, int col);

class Writer {
public:
    explicit Writer(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(std::vector<std::string> row);
    // Atomic: writes to <path>.tmp then renames.
    void write(const std::string& path) const;
    std::string to_string() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Fixed-format numeric rendering so artifacts are byte-stable.
std::string fmt(double v);
std::string fmt_count(double v); // integral counts without exponent

} // namespace ipdl::csv

#endif
