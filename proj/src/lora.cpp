#include "fairlora/lora.hpp"

#include <algorithm>

#include "fairlora/errors.hpp"
#include "fairlora/linalg.hpp"

namespace fairlora {

LoraAdapter new_adapter(const Matrix& base, std::size_t rank, SeededRng& rng,
                        double init_std, double scale) {
    const std::size_t d = base.rows;
    const std::size_t k = base.cols;
    if (rank < 1 || rank > std::min(d, k)) {
        throw data_error("new_adapter: rank " + std::to_string(rank) +
                         " out of range [1, " + std::to_string(std::min(d, k)) +
                         "] for base " + base.shape());
    }
    if (!(init_std > 0.0)) {
        throw data_error("new_adapter: init_std must be positive");
    }
    LoraAdapter ad;
    ad.base = base;
    ad.rank = rank;
    ad.scale = scale;
    ad.a = Matrix(d, rank);
    for (double& v : ad.a.data) {
        v = rng.next_normal(0.0, init_std);
    }
    ad.b = Matrix(rank, k);
    return ad;
}

Matrix effective_weight(const LoraAdapter& ad) {
    Matrix w = ad.base;
    add_scaled(w, matmul(ad.a, ad.b), ad.scale);
    return w;
}

std::pair<Matrix, Matrix> route_gradient(const LoraAdapter& ad, const Matrix& d_theta) {
    if (!same_shape(d_theta, ad.base)) {
        throw data_error("route_gradient: gradient shape " + d_theta.shape() +
                         " does not match base " + ad.base.shape());
    }
    Matrix da = scaled(matmul(d_theta, transpose(ad.b)), ad.scale);
    Matrix db = scaled(matmul(transpose(ad.a), d_theta), ad.scale);
    return {std::move(da), std::move(db)};
}

Matrix merge(const LoraAdapter& ad) {
    return effective_weight(ad);
}

std::size_t count_trainable(const ParamCountSpec& spec) {
    if (!spec.adapted.empty() && spec.rank < 1) {
        throw data_error("count_trainable: rank must be at least 1 when matrices are adapted");
    }
    std::size_t total = 0;
    for (const AdaptedMatrixDims& m : spec.adapted) {
        if (m.d == 0 || m.k == 0) {
            throw data_error("count_trainable: adapted matrix dimensions must be positive");
        }
        total += spec.rank * (m.d + m.k);
    }
    for (std::size_t n : spec.auxiliary) {
        total += n;
    }
    return total;
}

}  // namespace fairlora
