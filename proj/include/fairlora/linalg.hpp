#pragma once

#include <vector>

#include "fairlora/matrix.hpp"

namespace fairlora {

// C = A * B with 64-bit accumulation and fixed ascending-k summation order,
// so results are bit-reproducible.
Matrix matmul(const Matrix& a, const Matrix& b);

struct MeanCovariance {
    std::vector<double> mean;  // column means
    Matrix covariance;         // (n-1)-divisor, explicitly symmetric
};

// Two-pass column means and sample covariance. Requires at least 2 rows.
MeanCovariance mean_and_covariance(const Matrix& rows);

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column i pairs with values[i]
};

// Cyclic Jacobi iteration on a symmetric matrix. Converged when the
// off-diagonal Frobenius norm drops below tolerance * max(1, ||m||_F).
SymmetricEigen symmetric_eigen(const Matrix& m, double tolerance = 1e-12);

// Symmetric PSD square root via eigendecomposition: S with S*S == m.
// Slightly negative eigenvalues (within tolerance) are clamped to zero;
// anything more negative rejects the input as non-PSD.
Matrix psd_sqrt(const Matrix& m);

}  // namespace fairlora
