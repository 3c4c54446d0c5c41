#pragma once

#include <functional>
#include <span>
#include <vector>

#include "imdd/waveform.hpp"

namespace imdd {

// Root-raised-cosine taps sampled at `sps` samples per symbol over `span`
// symbols: span*sps+1 taps, symmetric about the centre, unit energy.
std::vector<double> rrc_taps(double rolloff, int span, int sps);

// Amplitude response of an ideal (untruncated) root-raised-cosine filter,
// one in the flat part of the band and zero beyond (1 + rolloff) * Rs / 2.
double rrc_amplitude(double f, double symbol_rate, double rolloff);

// Linear convolution truncated to the input length with the filter's
// centre tap aligned to sample 0 (zero padding at both edges). Long filters
// go through the FFT, short ones are computed directly.
std::vector<double> filter_same(std::span<const double> x, std::span<const double> taps);
std::vector<cplx> filter_same(std::span<const cplx> x, std::span<const double> taps);

// Rational resampling by p/q with a Kaiser-windowed sinc polyphase filter.
// The output has ceil(n*p/q) samples and sample m sits at input time m*q/p.
Waveform resample(const Waveform& w, int p, int q);
std::vector<cplx> resample(std::span<const cplx> x, int p, int q);

// Band-limited circular resampling to `out_len` samples by zero-padding or
// truncating the spectrum (the Nyquist bin is split or folded so real
// signals stay real). The signal is treated as one period.
std::vector<cplx> spectral_resample(std::span<const cplx> x, std::size_t out_len);

// Fourth-order Bessel low-pass with its -3 dB point at f_3db. The DC group
// delay is removed so filtering keeps frames aligned.
cplx bessel4_response(double f, double f_3db);

// Circular filtering: multiplies the spectrum of x by response(f_hz).
std::vector<cplx> apply_response(std::span<const cplx> x, double sample_rate,
                                 const std::function<cplx(double)>& response);

}  // namespace imdd
