#include "imdd/prbs.hpp"

#include <string>

#include "imdd/error.hpp"

namespace imdd {

namespace {

int feedback_tap(int order) {
    switch (order) {
        case 7: return 6;
        case 15: return 14;
        case 23: return 18;
        case 31: return 28;
        default: throw ConfigError("unsupported PRBS order " + std::to_string(order));
    }
}

}  // namespace

BitSequence prbs_generate(int order, std::uint64_t seed, std::size_t n_bits) {
    const int tap = feedback_tap(order);
    if (n_bits == 0) throw ConfigError("PRBS length must be at least one bit");
    const std::uint64_t mask = (std::uint64_t{1} << order) - 1;
    if ((seed & mask) == 0) throw ConfigError("PRBS seed must leave a nonzero register");
    // Seed bit 0 is loaded into the output stage so the stream opens with the
    // seed bits, LSB first.
    std::uint64_t state = 0;
    for (int i = 0; i < order; ++i) state |= ((seed >> i) & 1U) << (order - 1 - i);

    BitSequence out;
    out.origin = BitOrigin::Prbs;
    out.bits.resize(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i) {
        const std::uint64_t leaving = (state >> (order - 1)) & 1U;
        const std::uint64_t fb = leaving ^ ((state >> (tap - 1)) & 1U);
        state = ((state << 1) | fb) & mask;
        out.bits[i] = static_cast<std::uint8_t>(leaving);
    }
    return out;
}

}  // namespace imdd
