#include "fairlora/matrix.hpp"

#include <cmath>
#include <cstring>

#include "fairlora/errors.hpp"

namespace fairlora {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m.at(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> values) {
    Matrix m;
    m.rows = values.size();
    m.cols = values.size() ? values.begin()->size() : 0;
    m.data.reserve(m.rows * m.cols);
    for (const auto& row : values) {
        if (row.size() != m.cols) {
            throw data_error("Matrix::from_rows: ragged initializer");
        }
        m.data.insert(m.data.end(), row.begin(), row.end());
    }
    return m;
}

std::string Matrix::shape() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

bool same_shape(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b)) {
        return false;
    }
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            t.at(j, i) = m.at(i, j);
        }
    }
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b)) {
        throw data_error("add: shape mismatch " + a.shape() + " vs " + b.shape());
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) {
        c.data[i] += b.data[i];
    }
    return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b)) {
        throw data_error("subtract: shape mismatch " + a.shape() + " vs " + b.shape());
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) {
        c.data[i] -= b.data[i];
    }
    return c;
}

Matrix scaled(const Matrix& m, double factor) {
    Matrix c = m;
    for (double& v : c.data) {
        v *= factor;
    }
    return c;
}

void add_scaled(Matrix& acc, const Matrix& m, double factor) {
    if (!same_shape(acc, m)) {
        throw data_error("add_scaled: shape mismatch " + acc.shape() + " vs " + m.shape());
    }
    for (std::size_t i = 0; i < acc.data.size(); ++i) {
        acc.data[i] += factor * m.data[i];
    }
}

double frobenius_norm(const Matrix& m) {
    double sum = 0.0;
    for (double v : m.data) {
        sum += v * v;
    }
    return std::sqrt(sum);
}

double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.data) {
        best = std::max(best, std::abs(v));
    }
    return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b)) {
        throw data_error("max_abs_diff: shape mismatch " + a.shape() + " vs " + b.shape());
    }
    double best = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        best = std::max(best, std::abs(a.data[i] - b.data[i]));
    }
    return best;
}

double trace(const Matrix& m) {
    double sum = 0.0;
    const std::size_t n = std::min(m.rows, m.cols);
    for (std::size_t i = 0; i < n; ++i) {
        sum += m.at(i, i);
    }
    return sum;
}

void require_finite(const Matrix& m, const std::string& context) {
    for (double v : m.data) {
        if (!std::isfinite(v)) {
            throw numeric_error(context + ": non-finite entry in " + m.shape() + " matrix");
        }
    }
}

}  // namespace fairlora
