#ifndef IPDL_ERRORS_HPP
#define IPDL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ipdl {

// Base for all library errors. `code` is stable and machine-readable;
// the what() string carries the human-readable context.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Data validation errors carry file/row/column context.
class DataError : public Error {
public:
    DataError(std::string code, std::string file, long row, std::string column,
              const std::string& msg)
        : Error(std::move(code),
                msg + " (file=" + file + ", row=" + std::to_string(row) +
                    ", column=" + column + ")"),
          file_(std::move(file)), row_(row), column_(std::move(column)) {}

    const std::string& file() const { return file_; }
    long row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    std::string file_;
    long row_;
    std::string column_;
};

inline DataError missing_column(const std::string& file, const std::string& col) {
    return DataError("MissingColumn", file, 0, col, "required column not found");
}
inline DataError unknown_zone_ref(const std::string& file, long row, const std::string& col,
                                  const std::string& what) {
    return DataError("UnknownZoneRef", file, row, col, "unknown reference: " + what);
}
inline DataError negative_value(const std::string& file, long row, const std::string& col) {
    return DataError("NegativeValue", file, row, col, "value must be >= 0");
}
inline DataError duplicate_key(const std::string& file, long row, const std::string& col,
                               const std::string& key) {
    return DataError("DuplicateKey", file, row, col, "duplicate key: " + key);
}

class NumericalError : public Error {
public:
    using Error::Error;
};

inline NumericalError non_convergence(const std::string& where, double residual) {
    return NumericalError("NonConvergence",
                          where + " failed to converge, residual=" + std::to_string(residual));
}

} // namespace ipdl

#endif
