#pragma once

#include <string>

#include "fairlora/matrix.hpp"
#include "fairlora/rng.hpp"

namespace fairlora {

struct EmbeddingSet {
    Matrix embeddings;   // n x d, n >= 2
    std::string source;  // free-text provenance label
};

struct FidResult {
    double distance = 0.0;
    bool regularized_a = false;  // covariance got the eps*I ridge
    bool regularized_b = false;
};

// Frechet distance under the Gaussian assumption:
//   ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 sqrtm(S_a^{1/2} S_b S_a^{1/2}))
// The symmetric surrogate inside sqrtm shares its trace with sqrtm(S_a S_b).
// Rank-deficient covariances (min eigenvalue < 1e-10) get an eps*I ridge with
// eps = 1e-6, reported through the flags.
FidResult fid(const EmbeddingSet& a, const EmbeddingSet& b);

// Uniform without-replacement subset, deterministic given the rng seed.
EmbeddingSet subsample(const EmbeddingSet& set, std::size_t n, SeededRng& rng);

// CSV with d numeric columns, one row per embedding; a non-numeric first
// line is treated as a header and skipped.
EmbeddingSet load_embeddings_csv(const std::string& path);

}  // namespace fairlora
