#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace fairlora {

// Deterministic random source: std::mt19937_64 plus fixed output transforms.
// The raw 64-bit stream of mt19937_64 is fully specified by the standard, so
// equal seeds give equal streams on every platform. Uniform and integer draws
// below use only exactly-specified IEEE arithmetic on that stream; Gaussian
// draws use the polar Box-Muller transform (log/sqrt from libm).
class SeededRng {
public:
    static constexpr std::string_view kAlgorithm = "mt19937_64+polar-box-muller";

    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double next_normal(double mean = 0.0, double stddev = 1.0);

    // Uniform in [0, n); rejection sampled so the distribution is exact.
    std::size_t next_index(std::size_t n);

    // Fisher-Yates shuffle driven by next_index.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stable derivation of per-purpose seeds from a run seed, so that adding or
// removing draws in one consumer cannot shift another consumer's stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace fairlora
