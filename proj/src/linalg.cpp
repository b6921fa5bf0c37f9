#include "fairlora/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairlora/errors.hpp"

namespace fairlora {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw data_error("matmul: dimension mismatch " + a.shape() + " * " + b.shape());
    }
    Matrix c(a.rows, b.cols);
    // i-k-j loop order: cache friendly, and every c(i,j) still accumulates
    // its terms in ascending k.
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* crow = &c.data[i * c.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            const double* brow = &b.data[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    require_finite(c, "matmul");
    return c;
}

MeanCovariance mean_and_covariance(const Matrix& rows) {
    if (rows.rows < 2) {
        throw data_error("mean_and_covariance: need at least 2 rows, got " +
                         std::to_string(rows.rows));
    }
    const std::size_t n = rows.rows;
    const std::size_t d = rows.cols;
    MeanCovariance out;
    out.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out.mean[j] += rows.at(i, j);
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        out.mean[j] /= static_cast<double>(n);
    }
    out.covariance = Matrix(d, d);
    const double divisor = static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = j; k < d; ++k) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += (rows.at(i, j) - out.mean[j]) * (rows.at(i, k) - out.mean[k]);
            }
            const double value = sum / divisor;
            // mirroring the upper triangle makes the result exactly symmetric
            out.covariance.at(j, k) = value;
            out.covariance.at(k, j) = value;
        }
    }
    require_finite(out.covariance, "mean_and_covariance");
    return out;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            if (i != j) {
                sum += a.at(i, j) * a.at(i, j);
            }
        }
    }
    return std::sqrt(sum);
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& m, double tolerance) {
    if (m.rows != m.cols) {
        throw data_error("symmetric_eigen: matrix not square: " + m.shape());
    }
    const std::size_t n = m.rows;
    Matrix a = m;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (a.at(i, j) + a.at(j, i));
            a.at(i, j) = v;
            a.at(j, i) = v;
        }
    }
    Matrix vec = Matrix::identity(n);
    const double threshold = tolerance * std::max(1.0, frobenius_norm(a));
    const std::size_t max_sweeps = 100;
    std::size_t sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a) <= threshold) {
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double app = a.at(p, p);
                const double aqq = a.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vec.at(k, p);
                    const double vkq = vec.at(k, q);
                    vec.at(k, p) = c * vkp - s * vkq;
                    vec.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && off_diagonal_norm(a) > threshold) {
        throw numeric_error("symmetric_eigen: Jacobi iteration failed to converge on " +
                            m.shape() + " matrix");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a.at(x, x) < a.at(y, y);
    });
    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a.at(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) {
            out.vectors.at(i, j) = vec.at(i, order[j]);
        }
    }
    return out;
}

Matrix psd_sqrt(const Matrix& m) {
    if (m.rows != m.cols) {
        throw data_error("psd_sqrt: matrix not square: " + m.shape());
    }
    const std::size_t n = m.rows;
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            asym = std::max(asym, std::abs(m.at(i, j) - m.at(j, i)));
        }
    }
    if (asym > 1e-10 * std::max(1.0, max_abs(m))) {
        throw numeric_error("psd_sqrt: input " + m.shape() + " is not symmetric");
    }
    SymmetricEigen eig = symmetric_eigen(m);
    double lam_max = 0.0;
    for (double v : eig.values) {
        lam_max = std::max(lam_max, std::abs(v));
    }
    const double neg_tol = 1e-10 * std::max(1.0, lam_max);
    std::vector<double> roots(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = eig.values[i];
        if (v < -neg_tol) {
            throw numeric_error("psd_sqrt: eigenvalue " + std::to_string(v) +
                                " below PSD tolerance");
        }
        roots[i] = std::sqrt(std::max(v, 0.0));
    }
    // S = V * diag(sqrt(lambda)) * V^T, re-symmetrized
    Matrix scaled_vec = eig.vectors;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            scaled_vec.at(i, j) *= roots[j];
        }
    }
    Matrix s = matmul(scaled_vec, transpose(eig.vectors));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (s.at(i, j) + s.at(j, i));
            s.at(i, j) = v;
            s.at(j, i) = v;
        }
    }
    require_finite(s, "psd_sqrt");
    return s;
}

}  // namespace fairlora
