#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iva {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Independent stream seed for a named sub-task of a seeded run.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept;

/// Deterministic value in [0, 1) for (seed, key, index); same on every platform.
double hash_unit(std::uint64_t seed, std::string_view key, std::uint64_t index) noexcept;

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so draws are done here directly
/// on top of the fully specified mt19937_64 engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t index(std::uint64_t n);

    /// Uniform real in [0, 1).
    double unit();

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    template <class Container>
    void shuffle(Container& c) {
        for (std::size_t i = c.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(index(i));
            std::swap(c[i - 1], c[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace iva
