#pragma once

#include <span>
#include <vector>

#include "imdd/waveform.hpp"

namespace imdd::fft {

// Unnormalized forward transform: X[k] = sum_n x[n] exp(-j 2 pi k n / N).
std::vector<cplx> forward(std::span<const cplx> x);

// Inverse transform including the 1/N factor, so inverse(forward(x)) == x.
std::vector<cplx> inverse(std::span<const cplx> x);

// Frequency in Hz of every FFT bin for a length-n record at sample_rate,
// in standard FFT order (0, df, ..., -df).
std::vector<double> bin_frequencies(std::size_t n, double sample_rate);

}  // namespace imdd::fft
