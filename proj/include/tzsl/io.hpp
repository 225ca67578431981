#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tzsl/matrix.hpp"

namespace tzsl {

// Binary layout shared by the dataset container and model checkpoints:
// each matrix record is two little-endian u64 (rows, cols) followed by
// rows*cols little-endian IEEE-754 doubles. Round trips are bit exact.

void write_u64_le(std::ostream& out, std::uint64_t value);
void write_f64_le(std::ostream& out, double value);
std::uint64_t read_u64_le(std::istream& in, const std::string& what);
double read_f64_le(std::istream& in, const std::string& what);

void write_matrix_record(std::ostream& out, const Matrix& m);
// Reads one record; when expected_rows/cols are nonzero they are enforced.
Matrix read_matrix_record(std::istream& in, const std::string& what, std::size_t expected_rows = 0,
                          std::size_t expected_cols = 0);

// Label vectors travel as 1 x n records; ids are exact in doubles.
void write_label_record(std::ostream& out, const std::vector<int>& labels);
std::vector<int> read_label_record(std::istream& in, const std::string& what,
                                   std::size_t expected_count);

// Plain-text CSV: '#' comments and blank lines skipped, fields separated by
// commas (whitespace tolerated). Every data row must have the same width.
std::vector<std::vector<double>> read_csv(const std::string& path);

}  // namespace tzsl
