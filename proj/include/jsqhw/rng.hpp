#pragma once

#include <cstdint>
#include <random>

namespace jsqhw {

// SplitMix64 finalizer. Used both as a bit mixer for seed derivation and as
// the expansion step when seeding an engine from a 64-bit master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derive the seed of an independent stream (replication, cycle, worker job)
// from a master seed and a stream index. Streams are merged by index, so the
// result of a parallel run never depends on thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index * 0xd1342543de82ef95ull + 1));
}

// Gaussian generator: mt19937_64 + polar-method normals.  A fixed seed gives a
// bit-identical draw sequence on a given platform, which is what the
// trajectory-determinism guarantees rely on.
class NormalRng {
public:
    explicit NormalRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace jsqhw
