#pragma once

#include <cstdint>
#include <random>

namespace eqd {

/// Seeded random stream. A stream is keyed by (seed, id); two streams with
/// the same key produce the same sequence regardless of which thread runs them.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t id = 0);

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Independent stream derived from this stream's key.
    Stream child(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t id() const { return id_; }

private:
    std::uint64_t seed_;
    std::uint64_t id_;
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace eqd
