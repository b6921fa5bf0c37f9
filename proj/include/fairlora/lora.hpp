#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fairlora/matrix.hpp"
#include "fairlora/rng.hpp"

namespace fairlora {

// Low-rank reparameterization of a frozen weight: the effective weight is
// base + scale * a * b, with only a (d x r) and b (r x k) trainable.
struct LoraAdapter {
    Matrix base;   // d x k, frozen
    Matrix a;      // d x r
    Matrix b;      // r x k
    std::size_t rank = 0;
    double scale = 1.0;
};

// a ~ Gaussian(0, init_std), b = 0, so the effective weight starts exactly
// equal to the base.
LoraAdapter new_adapter(const Matrix& base, std::size_t rank, SeededRng& rng,
                        double init_std = 0.01, double scale = 1.0);

Matrix effective_weight(const LoraAdapter& ad);

// Routes a gradient w.r.t. the effective weight into the factors:
// dA = scale * d_theta * B^T, dB = scale * A^T * d_theta. The base never
// receives a gradient.
std::pair<Matrix, Matrix> route_gradient(const LoraAdapter& ad, const Matrix& d_theta);

// Plain-weight export; equal to effective_weight.
Matrix merge(const LoraAdapter& ad);

struct AdaptedMatrixDims {
    std::size_t d = 0;
    std::size_t k = 0;
};

struct ParamCountSpec {
    std::vector<AdaptedMatrixDims> adapted;  // matrices carrying adapters
    std::size_t rank = 0;
    std::vector<std::size_t> auxiliary;      // element counts of fully-trainable tensors
};

// Sum of r*(d+k) over adapted matrices plus the auxiliary element counts.
std::size_t count_trainable(const ParamCountSpec& spec);

}  // namespace fairlora
