#include "fairlora/fid.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "fairlora/errors.hpp"
#include "fairlora/linalg.hpp"
#include "fairlora/numeric_text.hpp"

namespace fairlora {

namespace {

constexpr double kEigenFloor = 1e-10;
constexpr double kRidge = 1e-6;
constexpr double kNegativeResidueFloor = -1e-8;

// Adds eps*I when the covariance is rank deficient; desk-scale sets often are.
bool regularize_if_needed(Matrix& cov) {
    const SymmetricEigen eig = symmetric_eigen(cov);
    if (eig.values.front() >= kEigenFloor) {
        return false;
    }
    for (std::size_t i = 0; i < cov.rows; ++i) {
        cov.at(i, i) += kRidge;
    }
    return true;
}

}  // namespace

FidResult fid(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.embeddings.cols != b.embeddings.cols) {
        throw data_error("fid: embedding width mismatch, " + a.embeddings.shape() +
                         " vs " + b.embeddings.shape());
    }
    require_finite(a.embeddings, "fid: set a");
    require_finite(b.embeddings, "fid: set b");

    MeanCovariance stat_a = mean_and_covariance(a.embeddings);
    MeanCovariance stat_b = mean_and_covariance(b.embeddings);

    FidResult result;
    result.regularized_a = regularize_if_needed(stat_a.covariance);
    result.regularized_b = regularize_if_needed(stat_b.covariance);

    double mean_term = 0.0;
    for (std::size_t j = 0; j < stat_a.mean.size(); ++j) {
        const double d = stat_a.mean[j] - stat_b.mean[j];
        mean_term += d * d;
    }

    const Matrix root_a = psd_sqrt(stat_a.covariance);
    Matrix inner = matmul(matmul(root_a, stat_b.covariance), root_a);
    for (std::size_t i = 0; i < inner.rows; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (inner.at(i, j) + inner.at(j, i));
            inner.at(i, j) = v;
            inner.at(j, i) = v;
        }
    }
    const Matrix cross_root = psd_sqrt(inner);

    double dist = mean_term + trace(stat_a.covariance) + trace(stat_b.covariance) -
                  2.0 * trace(cross_root);
    if (dist < 0.0) {
        if (dist < kNegativeResidueFloor) {
            throw numeric_error("fid: negative distance " + std::to_string(dist) +
                                " beyond numerical tolerance");
        }
        dist = 0.0;
    }
    result.distance = dist;
    return result;
}

EmbeddingSet load_embeddings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("load_embeddings_csv: cannot open '" + path + "'");
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        bool numeric = true;
        while (std::getline(ss, field, ',')) {
            try {
                row.push_back(parse_double(field, path));
            } catch (const data_error&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (line_no == 1) {
                continue;  // optional header
            }
            throw data_error("load_embeddings_csv: '" + path + "' line " +
                             std::to_string(line_no) + ": non-numeric field");
        }
        if (width == 0) {
            width = row.size();
        } else if (row.size() != width) {
            throw data_error("load_embeddings_csv: '" + path + "' line " +
                             std::to_string(line_no) + ": expected " +
                             std::to_string(width) + " columns, got " +
                             std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) {
        throw data_error("load_embeddings_csv: '" + path + "' needs at least 2 embeddings");
    }
    EmbeddingSet set;
    set.source = path;
    set.embeddings = Matrix(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            set.embeddings.at(i, j) = rows[i][j];
        }
    }
    return set;
}

EmbeddingSet subsample(const EmbeddingSet& set, std::size_t n, SeededRng& rng) {
    if (n > set.embeddings.rows) {
        throw data_error("subsample: requested " + std::to_string(n) + " rows from " +
                         std::to_string(set.embeddings.rows));
    }
    std::vector<std::size_t> order(set.embeddings.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n slots are a uniform without-replacement draw.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.next_index(order.size() - i);
        std::swap(order[i], order[j]);
    }
    EmbeddingSet out;
    out.source = set.source;
    out.embeddings = Matrix(n, set.embeddings.cols);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < set.embeddings.cols; ++j) {
            out.embeddings.at(i, j) = set.embeddings.at(order[i], j);
        }
    }
    return out;
}

}  // namespace fairlora
