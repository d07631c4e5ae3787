#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "attnlab/errors.hpp"
#include "attnlab/mask.hpp"

namespace attnlab {

// Dense row-major matrix of doubles. Small on purpose: every operation the
// project needs is a free function below with explicit shape checks.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> values);

    static Matrix identity(int n);

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

bool exactly_equal(const Matrix& a, const Matrix& b);
// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

Matrix matmul(const Matrix& a, const Matrix& b);
// a * transpose(b); both operands keep row-major layout.
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

// y = x * w + b, bias broadcast over rows; b must be 1 x w.cols.
Matrix linear_forward(const Matrix& x, const Matrix& w, const Matrix& b);

Matrix relu(const Matrix& a);

// Numerically stabilized softmax applied to each row independently.
Matrix row_softmax(const Matrix& a);

// Softmax restricted to permitted entries: masked-out entries come back as
// exactly 0 and each row sums to 1 over its permitted entries. Implemented by
// filling masked entries with -inf and running the dense softmax kernel, so a
// full-true mask reproduces row_softmax bit for bit. A row with no permitted
// entry raises DegenerateRowError.
Matrix masked_row_softmax(const Matrix& a, const AttentionMask& mask);

// Central finite differences of a scalar function at every entry of `point`:
// (f(p + step) - f(p - step)) / (2 step). Non-finite f raises DomainError.
Matrix finite_difference_grad(const std::function<double(const Matrix&)>& f, const Matrix& point,
                              double step);

}  // namespace attnlab
