#pragma once

#include "geoalloc/linalg.hpp"

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace geoalloc {

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line_no)
        : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
          line(line_no) {}
    int line;
};

/// Repo-wide matrix text format: one row per line, entries separated by
/// single spaces, optional `# rows cols` header, blank line terminates.
/// Values are written with 17 significant digits so a write/read cycle is
/// bit-exact.
std::string format_double(double v);

void write_matrix(std::ostream& os, const Matrix& M, bool header = true);
Matrix read_matrix(std::istream& is, int& line_no);

/// A named-block file is a sequence of `name` lines each followed by one
/// matrix in the format above.
using NamedMatrices = std::vector<std::pair<std::string, Matrix>>;

void write_named_matrices(const std::string& path, const NamedMatrices& blocks);
std::map<std::string, Matrix> read_named_matrices(const std::string& path);

void write_matrix_file(const std::string& path, const Matrix& M);
Matrix read_matrix_file(const std::string& path);

}  // namespace geoalloc
