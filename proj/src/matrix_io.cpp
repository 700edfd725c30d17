#include "geoalloc/matrix_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace geoalloc {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix(std::ostream& os, const Matrix& M, bool header) {
    if (header) os << "# " << M.rows() << ' ' << M.cols() << '\n';
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) os << ' ';
            os << format_double(M(i, j));
        }
        os << '\n';
    }
}

namespace {

bool is_blank(const std::string& line) {
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

std::vector<double> parse_row(const std::string& line, int line_no) {
    std::vector<double> row;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw ParseError("invalid numeric entry '" + tok + "'", line_no);
        if (!std::isfinite(v))
            throw ParseError("non-finite entry '" + tok + "'", line_no);
        row.push_back(v);
    }
    return row;
}

}  // namespace

Matrix read_matrix(std::istream& is, int& line_no) {
    std::string line;
    long declared_rows = -1, declared_cols = -1;
    std::vector<std::vector<double>> rows;
    bool started = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (is_blank(line)) {
            if (started) break;
            continue;  // leading blank lines
        }
        if (!started && line[0] == '#') {
            std::istringstream ss(line.substr(1));
            if (!(ss >> declared_rows >> declared_cols) || declared_rows < 1 || declared_cols < 0)
                throw ParseError("malformed header, expected '# rows cols'", line_no);
            started = true;
            continue;
        }
        started = true;
        rows.push_back(parse_row(line, line_no));
        if (rows.back().empty()) throw ParseError("empty matrix row", line_no);
        if (rows.back().size() != rows.front().size())
            throw ParseError("inconsistent row width", line_no);
    }
    if (rows.empty()) {
        if (declared_rows >= 1 && declared_cols == 0)
            return Matrix(declared_rows, 0);
        throw ParseError("expected a matrix, found none", line_no);
    }
    Matrix M(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            M(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    if (declared_rows >= 0 && (declared_rows != M.rows() || declared_cols != M.cols()))
        throw ParseError("matrix shape does not match its header", line_no);
    return M;
}

void write_named_matrices(const std::string& path, const NamedMatrices& blocks) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& [name, M] : blocks) {
        os << name << '\n';
        write_matrix(os, M);
        os << '\n';
    }
}

std::map<std::string, Matrix> read_named_matrices(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::map<std::string, Matrix> out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        std::istringstream ss(line);
        std::string name;
        ss >> name;
        std::string rest;
        if (ss >> rest || name.empty() || std::isdigit(static_cast<unsigned char>(name[0])) ||
            name[0] == '-' || name[0] == '+' || name[0] == '.' || name[0] == '#')
            throw ParseError("expected a block name", line_no);
        if (out.count(name)) throw ParseError("duplicate block '" + name + "'", line_no);
        out.emplace(name, read_matrix(is, line_no));
    }
    return out;
}

void write_matrix_file(const std::string& path, const Matrix& M) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_matrix(os, M);
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    int line_no = 0;
    return read_matrix(is, line_no);
}

}  // namespace geoalloc
