#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "tsad/tensor.hpp"

namespace tsad {

/// Seeded random source with a platform-independent output sequence.
///
/// The engine is std::mt19937_64, whose output is fixed by the standard. The
/// standard distributions are implementation-defined, so conversions are done
/// here: uniforms take the top 53 bits, normals use the Box-Muller transform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer on [0, bound).
    std::size_t below(std::size_t bound);
    double normal();

    void shuffle(std::vector<std::size_t>& items);

    /// Independent generator for a numbered sub-stream.
    Rng fork(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finaliser; used to derive sub-stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

Tensor sample_normal(Rng& rng, Shape shape);

/// Latent input for the generator: count x window_size x latent_dim standard normals.
Tensor sample_latent(Rng& rng, std::size_t count, std::size_t window_size, std::size_t latent_dim);

} // namespace tsad
