#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace imdd {

// Seed derivation used everywhere a substream is needed. Both functions are
// fully specified (SplitMix64 finalizer, FNV-1a over the label bytes) so
// results do not depend on the platform or standard library.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Gaussian source built on mt19937_64 raw output with Box-Muller, avoiding
// std::normal_distribution whose output is implementation defined.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double uniform();  // (0, 1)
    double normal();
    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace imdd
