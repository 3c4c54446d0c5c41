#include "imdd/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "imdd/error.hpp"
#include "imdd/fft.hpp"

namespace imdd {

namespace {

constexpr double kPi = std::numbers::pi;

// Frequency (rad/s) at which 105 / (s^4 + 10 s^3 + 45 s^2 + 105 s + 105)
// is 3 dB down.
constexpr double kBessel4Corner = 2.1139176749042158;

// Half-length of the resampling prototype in units of the slower grid.
constexpr int kResampleHalfLength = 40;
constexpr double kKaiserBeta = 14.0;

constexpr std::size_t kDirectTapLimit = 64;

double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

template <typename T>
std::vector<T> direct_same(std::span<const T> x, std::span<const double> taps) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto l = static_cast<std::ptrdiff_t>(taps.size());
    const std::ptrdiff_t centre = (l - 1) / 2;
    std::vector<T> y(x.size(), T{});
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        T acc{};
        for (std::ptrdiff_t k = 0; k < l; ++k) {
            const std::ptrdiff_t j = i + centre - k;
            if (j >= 0 && j < n) acc += x[static_cast<std::size_t>(j)] * taps[static_cast<std::size_t>(k)];
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

std::vector<cplx> fft_same(std::span<const cplx> x, std::span<const double> taps) {
    const std::size_t n = x.size();
    const std::size_t l = taps.size();
    const std::size_t centre = (l - 1) / 2;
    std::size_t nfft = 1;
    while (nfft < n + l) nfft <<= 1;
    std::vector<cplx> a(nfft), b(nfft);
    std::copy(x.begin(), x.end(), a.begin());
    std::copy(taps.begin(), taps.end(), b.begin());
    auto fa = fft::forward(a);
    const auto fb = fft::forward(b);
    for (std::size_t k = 0; k < nfft; ++k) fa[k] *= fb[k];
    const auto full = fft::inverse(fa);
    return {full.begin() + static_cast<std::ptrdiff_t>(centre),
            full.begin() + static_cast<std::ptrdiff_t>(centre + n)};
}

}  // namespace

std::vector<double> rrc_taps(double rolloff, int span, int sps) {
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("RRC rolloff must lie in (0, 1]");
    if (span < 4 || sps < 2) throw ConfigError("RRC needs span >= 4 and sps >= 2");
    const int n = span * sps + 1;
    const int centre = n / 2;
    std::vector<double> h(static_cast<std::size_t>(n));
    const double a = rolloff;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i - centre) / sps;
        double v;
        if (t == 0.0) {
            v = 1.0 - a + 4.0 * a / kPi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * a)) < 1e-12) {
            v = a / std::sqrt(2.0) *
                ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * a)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * a)));
        } else {
            const double x = 4.0 * a * t;
            v = (std::sin(kPi * t * (1.0 - a)) + x * std::cos(kPi * t * (1.0 + a))) / (kPi * t * (1.0 - x * x));
        }
        h[static_cast<std::size_t>(i)] = v;
    }
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double norm = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= norm;
    return h;
}

double rrc_amplitude(double f, double symbol_rate, double rolloff) {
    const double af = std::abs(f);
    const double lo = 0.5 * (1.0 - rolloff) * symbol_rate;
    const double hi = 0.5 * (1.0 + rolloff) * symbol_rate;
    if (af <= lo) return 1.0;
    if (af >= hi) return 0.0;
    return std::cos(kPi / (2.0 * rolloff * symbol_rate) * (af - lo));
}

std::vector<double> filter_same(std::span<const double> x, std::span<const double> taps) {
    if (taps.size() <= kDirectTapLimit) return direct_same<double>(x, taps);
    std::vector<cplx> c(x.begin(), x.end());
    const auto y = fft_same(c, taps);
    std::vector<double> out(y.size());
    std::transform(y.begin(), y.end(), out.begin(), [](cplx v) { return v.real(); });
    return out;
}

std::vector<cplx> filter_same(std::span<const cplx> x, std::span<const double> taps) {
    if (taps.size() <= kDirectTapLimit) return direct_same<cplx>(x, taps);
    return fft_same(x, taps);
}

std::vector<cplx> resample(std::span<const cplx> x, int p, int q) {
    if (p < 1 || q < 1) throw ConfigError("resampling factors must be >= 1");
    if (p == q) return {x.begin(), x.end()};
    const int g = std::gcd(p, q);
    p /= g;
    q /= g;

    // Prototype low-pass on the p-times upsampled grid, cut off at the lower
    // of the two Nyquist frequencies.
    const int m = std::max(p, q);
    const int half = kResampleHalfLength * m;
    const double cutoff = 0.5 / m;
    std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
    const double i0_beta = bessel_i0(kKaiserBeta);
    for (int k = -half; k <= half; ++k) {
        const double t = static_cast<double>(k);
        const double sinc = k == 0 ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * t) / (kPi * t);
        const double r = t / half;
        const double win = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
        h[static_cast<std::size_t>(k + half)] = sinc * win * p;
    }

    const auto n_in = static_cast<long long>(x.size());
    const long long n_out = (n_in * p + q - 1) / q;
    std::vector<cplx> y(static_cast<std::size_t>(n_out));
    for (long long mi = 0; mi < n_out; ++mi) {
        // Output sample mi sits at upsampled index mi*q; input sample n sits at n*p.
        const long long pos = mi * q;
        const long long n_lo = std::max<long long>(0, (pos - half + p - 1) / p);
        const long long n_hi = std::min<long long>(n_in - 1, (pos + half) / p);
        cplx acc{};
        for (long long n = n_lo; n <= n_hi; ++n) {
            acc += x[static_cast<std::size_t>(n)] * h[static_cast<std::size_t>(pos - n * p + half)];
        }
        y[static_cast<std::size_t>(mi)] = acc;
    }
    return y;
}

Waveform resample(const Waveform& w, int p, int q) {
    auto y = resample(w.samples(), p, q);
    if (w.is_electrical()) {
        for (auto& v : y) v = {v.real(), 0.0};
    }
    return Waveform(std::move(y), w.sample_rate() * p / q, w.domain());
}

std::vector<cplx> spectral_resample(std::span<const cplx> x, std::size_t out_len) {
    const std::size_t n = x.size();
    if (n == 0 || out_len == 0) throw ConfigError("spectral resampling needs non-empty input and output");
    if (out_len == n) return {x.begin(), x.end()};
    const auto spec = fft::forward(x);
    std::vector<cplx> out(out_len, cplx{});
    const std::size_t m = std::min(n, out_len);
    // Bins strictly below the smaller Nyquist copy straight across.
    const std::size_t half = (m - 1) / 2;
    out[0] = spec[0];
    for (std::size_t k = 1; k <= half; ++k) {
        out[k] = spec[k];
        out[out_len - k] = spec[n - k];
    }
    if (m % 2 == 0) {
        const std::size_t k = m / 2;
        if (out_len > n) {
            // Split the input Nyquist bin over +k and -k.
            out[k] = 0.5 * spec[k];
            out[out_len - k] = 0.5 * spec[k];
        } else {
            // Fold +k and -k of the input onto the output Nyquist bin.
            out[k] = spec[k] + spec[n - k];
        }
    }
    const double scale = static_cast<double>(out_len) / static_cast<double>(n);
    auto y = fft::inverse(out);
    for (auto& v : y) v *= scale;
    return y;
}

cplx bessel4_response(double f, double f_3db) {
    const double w = kBessel4Corner * f / f_3db;
    const cplx s{0.0, w};
    const cplx den = (((s + 10.0) * s + 45.0) * s + 105.0) * s + 105.0;
    return 105.0 / den * std::exp(cplx{0.0, w});
}

std::vector<cplx> apply_response(std::span<const cplx> x, double sample_rate,
                                 const std::function<cplx(double)>& response) {
    auto spec = fft::forward(x);
    const auto freqs = fft::bin_frequencies(spec.size(), sample_rate);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= response(freqs[k]);
    return fft::inverse(spec);
}

}  // namespace imdd
