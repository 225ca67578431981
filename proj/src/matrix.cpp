#include "tzsl/matrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tzsl {

namespace detail {

[[noreturn]] void shape_fail(const std::string& op, const Matrix& a, const Matrix& b) {
    std::ostringstream msg;
    msg << op << ": incompatible shapes " << a.rows() << "x" << a.cols() << " and " << b.rows()
        << "x" << b.cols();
    throw std::invalid_argument(msg.str());
}

}  // namespace detail

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix out(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
        std::size_t j = 0;
        for (double v : row) out(i, j++) = v;
        ++i;
    }
    return out;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (!same_shape(other)) detail::shape_fail("operator+=", *this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (!same_shape(other)) detail::shape_fail("operator-=", *this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) detail::shape_fail("matmul", a, b);
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* oi = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) oi[j] += aik * bk[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) detail::shape_fail("matmul_nt", a, b);
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) detail::shape_fail("matmul_tn", a, b);
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.row_ptr(k);
        const double* bk = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* oi = out.row_ptr(i);
            for (std::size_t j = 0; j < b.cols(); ++j) oi[j] += aki * bk[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    out += b;
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    out -= b;
    return out;
}

Matrix operator*(const Matrix& a, double s) {
    Matrix out = a;
    out *= s;
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) detail::shape_fail("hadamard", a, b);
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
    return out;
}

void axpy(Matrix& dst, double s, const Matrix& src) {
    if (!dst.same_shape(src)) detail::shape_fail("axpy", dst, src);
    for (std::size_t i = 0; i < dst.size(); ++i) dst.values()[i] += s * src.values()[i];
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) detail::shape_fail("add_row_broadcast", a, row);
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* oi = out.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) oi[j] += row(0, j);
    }
    return out;
}

Matrix col_sums(const Matrix& a) {
    Matrix out(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += ai[j];
    }
    return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) detail::shape_fail("hconcat", a, b);
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* oi = out.row_ptr(i);
        const double* ai = a.row_ptr(i);
        const double* bi = b.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) oi[j] = ai[j];
        for (std::size_t j = 0; j < b.cols(); ++j) oi[a.cols() + j] = bi[j];
    }
    return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b, const Matrix& c) {
    return hconcat(hconcat(a, b), c);
}

Matrix vconcat(const Matrix& a, const Matrix& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.cols() != b.cols()) detail::shape_fail("vconcat", a, b);
    Matrix out(a.rows() + b.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i];
    for (std::size_t i = 0; i < b.size(); ++i) out.values()[a.size() + i] = b.values()[i];
    return out;
}

Matrix col_range(const Matrix& a, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > a.cols()) throw std::invalid_argument("col_range: bad column range");
    Matrix out(a.rows(), c1 - c0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = a(i, j);
    return out;
}

Matrix take_rows(const Matrix& a, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= a.rows()) throw std::invalid_argument("take_rows: row index out of range");
        const double* src = a.row_ptr(idx[i]);
        double* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

Matrix take_row(const Matrix& a, std::size_t i) {
    return take_rows(a, std::vector<std::size_t>{i});
}

double dot(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) detail::shape_fail("dot", a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.values()[i] * b.values()[i];
    return acc;
}

double sum(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    return acc;
}

double mean(const Matrix& a) {
    if (a.size() == 0) throw std::invalid_argument("mean: empty matrix");
    return sum(a) / static_cast<double>(a.size());
}

void require_finite(const Matrix& a, const std::string& what) {
    if (!a.all_finite()) throw std::runtime_error("non-finite values in " + what);
}

}  // namespace tzsl
