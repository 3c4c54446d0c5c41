#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imdd/waveform.hpp"

namespace imdd {

enum class Geometry { Pam, QamSquare, QamRect };

// Gray-labelled constellations with unit mean symbol energy.
//
//   order  geometry     layout (I levels x Q levels)
//   2      PAM          2 x 1 (BPSK)
//   4      PAM          4 x 1        (PAM-4: 00->-3u 01->-1u 11->+1u 10->+3u)
//   4      QAM-square   2 x 2
//   8      QAM-rect     4 x 2
//   16     QAM-square   4 x 4
//   32     QAM-rect     8 x 4
//   64     QAM-square   8 x 8
//   128    QAM-rect     16 x 8
//   256    QAM-square   16 x 16
//
// A symbol's label is the leading I bits followed by the Q bits, each axis
// Gray coded from its most negative level upward, so every nearest-neighbour
// pair differs in exactly one bit.
class Constellation {
public:
    static Constellation pam(int order);
    static Constellation qam(int order);
    // QAM constellation carrying `bits` bits per symbol (1 gives BPSK).
    static Constellation for_bits(int bits);

    int order() const { return order_; }
    int bits_per_symbol() const { return bits_i_ + bits_q_; }
    Geometry geometry() const { return geometry_; }
    const std::vector<cplx>& points() const { return points_; }  // indexed by label
    const cplx& point(unsigned label) const { return points_[label]; }

    unsigned nearest_label(cplx z) const;

private:
    Constellation(int bits_i, int bits_q, Geometry geometry);

    int order_;
    int bits_i_;
    int bits_q_;
    Geometry geometry_;
    double scale_;
    std::vector<cplx> points_;
};

unsigned gray_encode(unsigned v);
unsigned gray_decode(unsigned g);

std::vector<cplx> map_symbols(const BitSequence& bits, const Constellation& c);
BitSequence demap_symbols(std::span<const cplx> symbols, const Constellation& c);

// Packs `count` bits starting at `offset`, first bit most significant.
unsigned pack_bits(std::span<const std::uint8_t> bits, std::size_t offset, int count);
void unpack_bits(unsigned value, int count, std::vector<std::uint8_t>& out);

}  // namespace imdd
