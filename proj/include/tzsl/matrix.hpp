#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace tzsl {

// Dense row-major matrix of doubles. The single numeric carrier for the
// whole library: feature batches, semantic batches, parameters, gradients.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Shape-checked algebra. All functions throw std::invalid_argument with a
// descriptive message on dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);     // a (r x k) * b (k x c)
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix transpose(const Matrix& a);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);

// dst += s * src
void axpy(Matrix& dst, double s, const Matrix& src);

// Broadcast a 1 x c row over every row of a.
Matrix add_row_broadcast(const Matrix& a, const Matrix& row);
Matrix col_sums(const Matrix& a);  // 1 x c

Matrix hconcat(const Matrix& a, const Matrix& b);
Matrix hconcat(const Matrix& a, const Matrix& b, const Matrix& c);
Matrix vconcat(const Matrix& a, const Matrix& b);
Matrix col_range(const Matrix& a, std::size_t c0, std::size_t c1);  // columns [c0, c1)
Matrix take_rows(const Matrix& a, const std::vector<std::size_t>& idx);
Matrix take_row(const Matrix& a, std::size_t i);

double dot(const Matrix& a, const Matrix& b);  // Frobenius inner product
double sum(const Matrix& a);
double mean(const Matrix& a);

// Throws std::runtime_error naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& a, const std::string& what);

namespace detail {
[[noreturn]] void shape_fail(const std::string& op, const Matrix& a, const Matrix& b);
}

}  // namespace tzsl
