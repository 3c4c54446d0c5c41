#pragma once

#include <cstddef>
#include <cstdint>

#include "imdd/waveform.hpp"

namespace imdd {

// Maximal-length Fibonacci LFSR with the ITU-T O.150 polynomials:
//   7: x^7+x^6+1   15: x^15+x^14+1   23: x^23+x^18+1   31: x^31+x^28+1
// The low `order` bits of the seed form the initial register and must not
// all be zero; the output is the bit shifted out of the last stage, so the
// first `order` bits of the stream are the seed bits, LSB first.
BitSequence prbs_generate(int order, std::uint64_t seed, std::size_t n_bits);

}  // namespace imdd
