#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace fairlora {

// Dense row-major matrix of 64-bit floats. The universal numeric carrier:
// weights, features, gradients and covariances all travel through it.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> values);

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const double& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool empty() const { return data.empty(); }
    std::string shape() const;  // e.g. "3x4"
};

bool same_shape(const Matrix& a, const Matrix& b);
bool bitwise_equal(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& m, double factor);
void add_scaled(Matrix& acc, const Matrix& m, double factor);

double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
double trace(const Matrix& m);

// Throws numeric_error if any entry is NaN or infinite.
void require_finite(const Matrix& m, const std::string& context);

}  // namespace fairlora
