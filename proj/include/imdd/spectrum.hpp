#pragma once

#include <span>
#include <vector>

#include "imdd/waveform.hpp"

namespace imdd {

// Complex amplitude of the component at frequency f (single-bin DFT scaled
// so that a tone a*exp(j 2 pi f t) returns a).
cplx tone_phasor(std::span<const cplx> x, double sample_rate, double f);

// Power spectral density estimate |X[k]|^2 / (N * fs) per bin, in FFT order.
std::vector<double> periodogram(std::span<const cplx> x, double sample_rate);

// Power of x falling inside [f_lo, f_hi] (circular FFT bins).
double band_power(std::span<const cplx> x, double sample_rate, double f_lo, double f_hi);

double to_db(double linear);
double from_db(double db);

}  // namespace imdd
