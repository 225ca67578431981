#include "tzsl/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tzsl {

namespace {

void read_exact(std::istream& in, char* buf, std::size_t n, const std::string& what) {
    in.read(buf, static_cast<std::streamsize>(n));
    const std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got != n) {
        std::ostringstream msg;
        msg << "truncated payload: needed " << n << " bytes for " << what << ", got " << got;
        throw std::runtime_error(msg.str());
    }
}

}  // namespace

void write_u64_le(std::ostream& out, std::uint64_t value) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
    out.write(buf, 8);
}

void write_f64_le(std::ostream& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    write_u64_le(out, bits);
}

std::uint64_t read_u64_le(std::istream& in, const std::string& what) {
    char buf[8];
    read_exact(in, buf, 8, what);
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i)
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return value;
}

double read_f64_le(std::istream& in, const std::string& what) {
    const std::uint64_t bits = read_u64_le(in, what);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

void write_matrix_record(std::ostream& out, const Matrix& m) {
    write_u64_le(out, m.rows());
    write_u64_le(out, m.cols());
    for (double v : m.values()) write_f64_le(out, v);
}

Matrix read_matrix_record(std::istream& in, const std::string& what, std::size_t expected_rows,
                          std::size_t expected_cols) {
    const std::uint64_t rows = read_u64_le(in, what + " row count");
    const std::uint64_t cols = read_u64_le(in, what + " column count");
    if ((expected_rows != 0 && rows != expected_rows) ||
        (expected_cols != 0 && cols != expected_cols)) {
        std::ostringstream msg;
        msg << what << ": shape " << rows << "x" << cols << " does not match header ("
            << expected_rows << "x" << expected_cols << ")";
        throw std::runtime_error(msg.str());
    }
    if (rows > (1ULL << 32) || cols > (1ULL << 32))
        throw std::runtime_error(what + ": implausible record shape");
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    const std::size_t bytes = m.size() * 8;
    if (bytes > 0)
        read_exact(in, reinterpret_cast<char*>(m.values().data()), bytes, what + " payload");
    // Payload was read raw for speed; normalize from little-endian bytes.
    for (double& v : m.values()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        const unsigned char* b = reinterpret_cast<const unsigned char*>(&bits);
        std::uint64_t le = 0;
        for (int i = 0; i < 8; ++i) le |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        std::memcpy(&v, &le, sizeof(v));
    }
    return m;
}

void write_label_record(std::ostream& out, const std::vector<int>& labels) {
    Matrix m(1, labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) m(0, i) = static_cast<double>(labels[i]);
    write_matrix_record(out, m);
}

std::vector<int> read_label_record(std::istream& in, const std::string& what,
                                   std::size_t expected_count) {
    const Matrix m = read_matrix_record(in, what, 1, expected_count);
    std::vector<int> labels(m.cols());
    for (std::size_t i = 0; i < m.cols(); ++i) {
        const double v = m(0, i);
        if (v != std::floor(v)) throw std::runtime_error(what + ": non-integer label value");
        labels[i] = static_cast<int>(v);
    }
    return labels;
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        for (char& ch : line)
            if (ch == ',' || ch == '\t') ch = ' ';
        std::istringstream fields(line);
        std::vector<double> row;
        double value;
        while (fields >> value) row.push_back(value);
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected " << rows.front().size()
                << " fields, got " << row.size();
            throw std::runtime_error(msg.str());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace tzsl
