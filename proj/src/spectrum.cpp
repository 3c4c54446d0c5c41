#include "imdd/spectrum.hpp"

#include <cmath>
#include <numbers>

#include "imdd/fft.hpp"

namespace imdd {

cplx tone_phasor(std::span<const cplx> x, double sample_rate, double f) {
    cplx acc{};
    const double w = -2.0 * std::numbers::pi * f / sample_rate;
    for (std::size_t n = 0; n < x.size(); ++n) {
        acc += x[n] * std::polar(1.0, w * static_cast<double>(n));
    }
    return acc / static_cast<double>(x.size());
}

std::vector<double> periodogram(std::span<const cplx> x, double sample_rate) {
    const auto spec = fft::forward(x);
    std::vector<double> psd(spec.size());
    const double norm = 1.0 / (static_cast<double>(spec.size()) * sample_rate);
    for (std::size_t k = 0; k < spec.size(); ++k) psd[k] = std::norm(spec[k]) * norm;
    return psd;
}

double band_power(std::span<const cplx> x, double sample_rate, double f_lo, double f_hi) {
    const auto psd = periodogram(x, sample_rate);
    const auto freqs = fft::bin_frequencies(psd.size(), sample_rate);
    const double df = sample_rate / static_cast<double>(psd.size());
    double p = 0.0;
    for (std::size_t k = 0; k < psd.size(); ++k) {
        if (freqs[k] >= f_lo && freqs[k] <= f_hi) p += psd[k] * df;
    }
    return p;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace imdd
