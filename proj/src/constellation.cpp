#include "imdd/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imdd/error.hpp"

namespace imdd {

namespace {

int log2_exact(int order) {
    int b = 0;
    while ((1 << b) < order) ++b;
    if ((1 << b) != order) throw ConfigError("constellation order must be a power of two");
    return b;
}

// Mean of x^2 over the PAM levels -(M-1), ..., -1, +1, ..., M-1.
double pam_energy(int levels) { return levels <= 1 ? 0.0 : (levels * levels - 1) / 3.0; }

int slice_axis(double x, int levels) {
    const double idx = std::round((x + (levels - 1)) / 2.0);
    return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(levels - 1)));
}

}  // namespace

unsigned gray_encode(unsigned v) { return v ^ (v >> 1); }

unsigned gray_decode(unsigned g) {
    unsigned v = g;
    for (unsigned shift = 1; shift < 32; shift <<= 1) v ^= v >> shift;
    return v;
}

Constellation::Constellation(int bits_i, int bits_q, Geometry geometry)
    : order_(1 << (bits_i + bits_q)), bits_i_(bits_i), bits_q_(bits_q), geometry_(geometry) {
    const int li = 1 << bits_i_;
    const int lq = bits_q_ > 0 ? 1 << bits_q_ : 1;
    scale_ = 1.0 / std::sqrt(pam_energy(li) + (bits_q_ > 0 ? pam_energy(lq) : 0.0));
    points_.resize(static_cast<std::size_t>(order_));
    for (int i = 0; i < li; ++i) {
        for (int q = 0; q < lq; ++q) {
            const unsigned label = (gray_encode(static_cast<unsigned>(i)) << bits_q_) |
                                   (bits_q_ > 0 ? gray_encode(static_cast<unsigned>(q)) : 0U);
            const double re = (2 * i - (li - 1)) * scale_;
            const double im = bits_q_ > 0 ? (2 * q - (lq - 1)) * scale_ : 0.0;
            points_[label] = {re, im};
        }
    }
}

Constellation Constellation::pam(int order) {
    const int b = log2_exact(order);
    if (b < 1 || b > 8) throw ConfigError("unsupported PAM order " + std::to_string(order));
    return Constellation(b, 0, Geometry::Pam);
}

Constellation Constellation::qam(int order) {
    const int b = log2_exact(order);
    if (b < 1 || b > 8) throw ConfigError("unsupported QAM order " + std::to_string(order));
    if (b == 1) return Constellation(1, 0, Geometry::Pam);
    const int bq = b / 2;
    return Constellation(b - bq, bq, b % 2 == 0 ? Geometry::QamSquare : Geometry::QamRect);
}

Constellation Constellation::for_bits(int bits) {
    if (bits < 1 || bits > 8) throw ConfigError("bits per symbol must be in [1, 8]");
    return qam(1 << bits);
}

unsigned Constellation::nearest_label(cplx z) const {
    const int li = 1 << bits_i_;
    const int i = slice_axis(z.real() / scale_, li);
    unsigned label = gray_encode(static_cast<unsigned>(i)) << bits_q_;
    if (bits_q_ > 0) {
        const int q = slice_axis(z.imag() / scale_, 1 << bits_q_);
        label |= gray_encode(static_cast<unsigned>(q));
    }
    return label;
}

unsigned pack_bits(std::span<const std::uint8_t> bits, std::size_t offset, int count) {
    unsigned v = 0;
    for (int k = 0; k < count; ++k) v = (v << 1) | (bits[offset + static_cast<std::size_t>(k)] & 1U);
    return v;
}

void unpack_bits(unsigned value, int count, std::vector<std::uint8_t>& out) {
    for (int k = count - 1; k >= 0; --k) out.push_back(static_cast<std::uint8_t>((value >> k) & 1U));
}

std::vector<cplx> map_symbols(const BitSequence& bits, const Constellation& c) {
    const auto b = static_cast<std::size_t>(c.bits_per_symbol());
    if (bits.size() % b != 0) {
        throw FramingError("bit count " + std::to_string(bits.size()) +
                           " is not a multiple of " + std::to_string(b));
    }
    std::vector<cplx> out;
    out.reserve(bits.size() / b);
    for (std::size_t i = 0; i < bits.size(); i += b) {
        out.push_back(c.point(pack_bits(bits.bits, i, static_cast<int>(b))));
    }
    return out;
}

BitSequence demap_symbols(std::span<const cplx> symbols, const Constellation& c) {
    BitSequence out;
    out.bits.reserve(symbols.size() * static_cast<std::size_t>(c.bits_per_symbol()));
    for (const auto& z : symbols) unpack_bits(c.nearest_label(z), c.bits_per_symbol(), out.bits);
    return out;
}

}  // namespace imdd
