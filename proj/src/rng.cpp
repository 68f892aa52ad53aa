#include "eqd/rng.hpp"

namespace eqd {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Stream::Stream(std::uint64_t seed, std::uint64_t id) : seed_(seed), id_(id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32),
                      0x65716431u};
    engine_.seed(seq);
}

std::uint64_t Stream::below(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
    return dist(engine_);
}

Stream Stream::child(std::uint64_t index) const {
    return Stream(splitmix64(seed_ ^ splitmix64(id_ + 0x5bd1e995ULL)), index);
}

}  // namespace eqd
