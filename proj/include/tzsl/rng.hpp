#pragma once

#include <cstdint>
#include <vector>

#include "tzsl/matrix.hpp"

namespace tzsl {

// Deterministic random stream (xoshiro256++ seeded via splitmix64).
// Distributions are implemented here rather than via <random> so that a
// given seed yields the same draws on every platform and compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();

    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // N(0, 1), Box-Muller
    std::size_t uniform_index(std::size_t n);  // {0, ..., n-1}

    std::vector<std::size_t> permutation(std::size_t n);  // Fisher-Yates
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count);

    Matrix normal_matrix(std::size_t rows, std::size_t cols, double mean = 0.0,
                         double stddev = 1.0);
    Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo = 0.0, double hi = 1.0);

    // Derives an independent child stream. Advances this stream by one draw,
    // so repeated forks with the same tag differ.
    Rng fork(std::uint64_t tag);

private:
    std::uint64_t seed_ = 0;
    std::uint64_t state_[4] = {0, 0, 0, 0};
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

}  // namespace tzsl
