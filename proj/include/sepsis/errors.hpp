#pragma once

#include <stdexcept>
#include <string>

namespace sepsis {

// Maps to CLI exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Maps to CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input line; carries the 1-based line number.
struct ParseError : DataError {
    ParseError(const std::string& msg, int line_no)
        : DataError("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
    int line;
};

}  // namespace sepsis
