#include "attnlab/matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace attnlab {

namespace {

std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

// Softmax of one contiguous row, written in place. Shared by the dense and
// masked entry points so a full-true mask cannot diverge from the dense path.
void softmax_row_inplace(double* row, int n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
        if (row[j] > mx) mx = row[j];
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
    }
    for (int j = 0; j < n; ++j) row[j] /= sum;
}

}  // namespace

Matrix::Matrix(int r, int c, double fill) {
    if (r < 0 || c < 0) throw ShapeError("matrix dimensions must be non-negative");
    rows = r;
    cols = c;
    data.assign(static_cast<std::size_t>(r) * c, fill);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> values) {
    rows = static_cast<int>(values.size());
    cols = rows > 0 ? static_cast<int>(values.begin()->size()) : 0;
    data.reserve(static_cast<std::size_t>(rows) * cols);
    for (const auto& r : values) {
        if (static_cast<int>(r.size()) != cols)
            throw ShapeError("ragged initializer for matrix");
        data.insert(data.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool exactly_equal(const Matrix& a, const Matrix& b) {
    return a.same_shape(b) && a.data == b.data;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double d = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        d = std::max(d, std::abs(a.data[i] - b.data[i]));
    return d;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dimensions differ, " + shape_of(a) + " * " + shape_of(b));
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* orow = out.row(i);
        for (int k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw ShapeError("matmul_transpose_b: inner dimensions differ, " + shape_of(a) + " * " +
                         shape_of(b) + "^T");
    Matrix out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data) v *= s;
    return out;
}

Matrix linear_forward(const Matrix& x, const Matrix& w, const Matrix& b) {
    if (b.rows != 1 || b.cols != w.cols)
        throw ShapeError("linear_forward: bias must be 1x" + std::to_string(w.cols) + ", got " +
                         shape_of(b));
    Matrix out = matmul(x, w);
    for (int i = 0; i < out.rows; ++i) {
        double* orow = out.row(i);
        for (int j = 0; j < out.cols; ++j) orow[j] += b(0, j);
    }
    return out;
}

Matrix relu(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Matrix row_softmax(const Matrix& a) {
    if (a.cols < 1) throw ShapeError("row_softmax: matrix must have at least one column");
    Matrix out = a;
    for (int i = 0; i < out.rows; ++i) softmax_row_inplace(out.row(i), out.cols);
    return out;
}

Matrix masked_row_softmax(const Matrix& a, const AttentionMask& mask) {
    if (mask.rows != a.rows || mask.cols != a.cols)
        throw ShapeError("masked_row_softmax: mask shape " + std::to_string(mask.rows) + "x" +
                         std::to_string(mask.cols) + " does not match matrix " + shape_of(a));
    if (a.cols < 1) throw ShapeError("masked_row_softmax: matrix must have at least one column");
    Matrix out = a;
    const double ninf = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < out.rows; ++i) {
        const std::uint8_t* mrow = mask.on.data() + static_cast<std::size_t>(i) * mask.cols;
        double* orow = out.row(i);
        int permitted = 0;
        for (int j = 0; j < out.cols; ++j) {
            if (mrow[j]) {
                ++permitted;
            } else {
                orow[j] = ninf;
            }
        }
        if (permitted == 0)
            throw DegenerateRowError("masked_row_softmax: row " + std::to_string(i) +
                                     " permits no entries");
        softmax_row_inplace(orow, out.cols);
    }
    return out;
}

Matrix finite_difference_grad(const std::function<double(const Matrix&)>& f, const Matrix& point,
                              double step) {
    if (step <= 0.0) throw DomainError("finite_difference_grad: step must be positive");
    Matrix grad(point.rows, point.cols);
    Matrix probe = point;
    for (std::size_t i = 0; i < probe.data.size(); ++i) {
        double saved = probe.data[i];
        probe.data[i] = saved + step;
        double hi = f(probe);
        probe.data[i] = saved - step;
        double lo = f(probe);
        probe.data[i] = saved;
        if (!std::isfinite(hi) || !std::isfinite(lo))
            throw DomainError("finite_difference_grad: objective returned a non-finite value");
        grad.data[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

}  // namespace attnlab
