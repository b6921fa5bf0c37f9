#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fairlora/errors.hpp"
#include "fairlora/fid.hpp"
#include "fairlora/linalg.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fairlora;
using testutil::random_matrix;

namespace {

EmbeddingSet gaussian_set(SeededRng& rng, std::size_t n, std::size_t d, double mean,
                          double stddev) {
    EmbeddingSet set;
    set.embeddings = Matrix(n, d);
    for (double& v : set.embeddings.data) {
        v = rng.next_normal(mean, stddev);
    }
    return set;
}

}  // namespace

TEST_SUITE("fid") {

TEST_CASE("identical sets have distance zero") {
    SeededRng rng(3);
    const EmbeddingSet x = gaussian_set(rng, 40, 5, 0.0, 1.0);
    CHECK(fid(x, x).distance <= 1e-8);
}

TEST_CASE("equal covariances reduce to the squared mean shift") {
    SeededRng rng(5);
    const EmbeddingSet a = gaussian_set(rng, 60, 4, 0.0, 1.0);
    EmbeddingSet b = a;
    const std::vector<double> shift{0.5, -1.25, 2.0, 0.75};
    double norm_sq = 0.0;
    for (double v : shift) {
        norm_sq += v * v;
    }
    for (std::size_t i = 0; i < b.embeddings.rows; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            b.embeddings.at(i, j) += shift[j];
        }
    }
    CHECK(std::abs(fid(a, b).distance - norm_sq) < 1e-8);
}

TEST_CASE("univariate draws match the closed form within 2 percent") {
    SeededRng rng(7);
    const double mean1 = 0.3, std1 = 1.0, mean2 = 2.1, std2 = 2.0;
    const EmbeddingSet a = gaussian_set(rng, 10000, 1, mean1, std1);
    const EmbeddingSet b = gaussian_set(rng, 10000, 1, mean2, std2);
    const double want = oracle::univariate_frechet(mean1, std1 * std1, mean2, std2 * std2);
    const double got = fid(a, b).distance;
    CHECK(std::abs(got - want) / want < 0.02);
}

TEST_CASE("fid is symmetric") {
    SeededRng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const EmbeddingSet a = gaussian_set(rng, 50, 4, 0.0, 1.0);
        const EmbeddingSet b = gaussian_set(rng, 45, 4, 1.0, 1.7);
        const double ab = fid(a, b).distance;
        const double ba = fid(b, a).distance;
        CHECK(std::abs(ab - ba) / std::max(ab, 1e-12) < 1e-6);
    }
}

TEST_CASE("scaling both sets by c scales the distance by c squared") {
    SeededRng rng(13);
    const EmbeddingSet a = gaussian_set(rng, 80, 3, 0.0, 1.0);
    const EmbeddingSet b = gaussian_set(rng, 70, 3, 0.8, 1.4);
    const double base = fid(a, b).distance;
    const double c = 2.5;
    EmbeddingSet sa = a, sb = b;
    for (double& v : sa.embeddings.data) {
        v *= c;
    }
    for (double& v : sb.embeddings.data) {
        v *= c;
    }
    const double scaled = fid(sa, sb).distance;
    CHECK(std::abs(scaled - c * c * base) / (c * c * base) < 1e-6);
}

TEST_CASE("distance is non-negative") {
    SeededRng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const EmbeddingSet a = gaussian_set(rng, 30, 3, 0.0, 1.0);
        const EmbeddingSet b = gaussian_set(rng, 30, 3, 0.0, 1.0);
        CHECK(fid(a, b).distance >= 0.0);
    }
}

TEST_CASE("rank-deficient covariance is ridged and flagged") {
    SeededRng rng(19);
    EmbeddingSet degenerate = gaussian_set(rng, 30, 3, 0.0, 1.0);
    for (std::size_t i = 0; i < degenerate.embeddings.rows; ++i) {
        // last column duplicates the first: covariance is singular
        degenerate.embeddings.at(i, 2) = degenerate.embeddings.at(i, 0);
    }
    const EmbeddingSet full = gaussian_set(rng, 30, 3, 0.0, 1.0);
    const FidResult result = fid(degenerate, full);
    CHECK(result.regularized_a);
    CHECK(!result.regularized_b);
    CHECK(result.distance >= 0.0);
}

TEST_CASE("width mismatch rejected") {
    SeededRng rng(23);
    const EmbeddingSet a = gaussian_set(rng, 10, 3, 0.0, 1.0);
    const EmbeddingSet b = gaussian_set(rng, 10, 4, 0.0, 1.0);
    CHECK_THROWS_AS(fid(a, b), data_error);
}

TEST_CASE("subsample") {
    SeededRng data_rng(29);
    const EmbeddingSet set = gaussian_set(data_rng, 25, 3, 0.0, 1.0);

    SUBCASE("n == size is a permutation of the rows") {
        SeededRng rng(31);
        const EmbeddingSet out = subsample(set, 25, rng);
        auto sorted_rows = [](const Matrix& m) {
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < m.rows; ++i) {
                rows.emplace_back(m.data.begin() + static_cast<long>(i * m.cols),
                                  m.data.begin() + static_cast<long>((i + 1) * m.cols));
            }
            std::sort(rows.begin(), rows.end());
            return rows;
        };
        CHECK(sorted_rows(out.embeddings) == sorted_rows(set.embeddings));
    }

    SUBCASE("identical seeds give identical subsets") {
        SeededRng rng_a(37), rng_b(37);
        const EmbeddingSet a = subsample(set, 10, rng_a);
        const EmbeddingSet b = subsample(set, 10, rng_b);
        CHECK(bitwise_equal(a.embeddings, b.embeddings));
    }

    SUBCASE("rows come from the input multiset") {
        SeededRng rng(41);
        const EmbeddingSet out = subsample(set, 12, rng);
        for (std::size_t i = 0; i < out.embeddings.rows; ++i) {
            bool found = false;
            for (std::size_t k = 0; k < set.embeddings.rows && !found; ++k) {
                bool equal = true;
                for (std::size_t j = 0; j < 3; ++j) {
                    equal = equal && out.embeddings.at(i, j) == set.embeddings.at(k, j);
                }
                found = equal;
            }
            CHECK(found);
        }
    }

    SUBCASE("oversampling rejected") {
        SeededRng rng(43);
        CHECK_THROWS_AS(subsample(set, 26, rng), data_error);
    }
}

}  // TEST_SUITE
