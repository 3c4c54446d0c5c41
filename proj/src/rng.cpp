#include "imdd/rng.hpp"

#include <cmath>
#include <numbers>

namespace imdd {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return splitmix64(parent ^ splitmix64(h));
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64(parent ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double GaussianSource::uniform() {
    // 53 random mantissa bits, shifted off zero.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianSource::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

}  // namespace imdd
