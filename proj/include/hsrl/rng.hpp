#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace hsrl {

/// Seeded generator with platform-independent distributions.
///
/// std::uniform_int_distribution and friends are implementation-defined, so
/// every draw goes through the helpers below to keep datasets and searches
/// bitwise reproducible.
class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Uniform double in [0, 1).
    double uniform();

    template <typename T>
    void shuffle(std::vector<T>& items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Independent stream derived from this generator's seed material.
    Rng fork(std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finaliser; used to derive per-instance / per-worker seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace hsrl
