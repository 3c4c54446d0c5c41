#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "imdd/cap.hpp"
#include "imdd/constellation.hpp"
#include "imdd/error.hpp"
#include "imdd/fft.hpp"
#include "imdd/filters.hpp"
#include "imdd/rng.hpp"
#include "imdd/spectrum.hpp"
#include "test_util.hpp"

using namespace imdd;

namespace {

// Matched filter of one band, sampled at the symbol instants.
std::vector<cplx> band_symbols(std::span<const double> x, int band, const CapConfig& cfg) {
    const auto [fi, fq] = cap_filter_pair(band, cfg);
    const auto yi = filter_same(x, fi);
    const auto yq = filter_same(x, fq);
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol());
    std::vector<cplx> out;
    for (std::size_t i = 0; i < x.size(); i += sps) out.emplace_back(yi[i], yq[i]);
    return out;
}

double mean_power(std::span<const cplx> v, std::size_t from, std::size_t to) {
    double p = 0.0;
    for (std::size_t i = from; i < to; ++i) p += std::norm(v[i]);
    return p / static_cast<double>(to - from);
}

LoadingTable single_band(int n_bands, int band, int bits) {
    LoadingTable t;
    for (int k = 0; k < n_bands; ++k) t.entries.push_back({k, k == band ? bits : 0, 1.0});
    t.total_bits_per_symbol = bits;
    return t;
}

}  // namespace

TEST_CASE("default CAP grid") {
    CapConfig cfg;
    CHECK(cfg.samples_per_symbol() == 40);
    CHECK(cfg.band_center(0) == doctest::Approx(1.1e9));
    CHECK(cfg.band_center(11) == doctest::Approx(11.5 * 2.2e9));
    CHECK(cfg.band_center(11) + 1.1e9 < cfg.dac_rate / 2);
    CHECK_NOTHROW(cfg.validate());
    const auto t = cfg.effective_loading();
    CHECK(t.total_bits_per_symbol == 28);
    CHECK(t.total_bits_per_symbol * cfg.band_symbol_rate == doctest::Approx(56e9));
    CapConfig fourteen = cfg;
    fourteen.n_bands = 14;
    CHECK_NOTHROW(fourteen.validate());
    CHECK(fourteen.effective_loading().total_bits_per_symbol == 28);
}

TEST_CASE("filter pair is orthogonal and energy normalised") {
    CapConfig cfg;
    for (int band = 0; band < cfg.n_bands; ++band) {
        const auto [fi, fq] = cap_filter_pair(band, cfg);
        const double ii = std::inner_product(fi.begin(), fi.end(), fi.begin(), 0.0);
        const double qq = std::inner_product(fq.begin(), fq.end(), fq.begin(), 0.0);
        const double iq = std::inner_product(fi.begin(), fi.end(), fq.begin(), 0.0);
        CHECK(ii + qq == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(std::abs(iq) / std::sqrt(ii * qq) < 1e-4);
        CHECK(fi.size() >= static_cast<std::size_t>(20 * 40));
    }
}

TEST_CASE("filter pair is a Hilbert pair") {
    CapConfig cfg;
    const auto [fi, fq] = cap_filter_pair(5, cfg);
    const std::size_t n = 1 << 14;
    std::vector<cplx> a(n), b(n);
    std::copy(fi.begin(), fi.end(), a.begin());
    std::copy(fq.begin(), fq.end(), b.begin());
    const auto fa = fft::forward(a);
    const auto fb = fft::forward(b);
    const auto freqs = fft::bin_frequencies(n, cfg.dac_rate);
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        // Hilbert transform: multiply by -j sign(f).
        const cplx expected = fa[k] * cplx(0.0, freqs[k] > 0 ? -1.0 : (freqs[k] < 0 ? 1.0 : 0.0));
        err += std::norm(fb[k] - expected);
        ref += std::norm(fb[k]);
    }
    CHECK(err / ref < 1e-6);
}

TEST_CASE("band 0 energy is centred on its carrier") {
    CapConfig cfg;
    const auto [fi, fq] = cap_filter_pair(0, cfg);
    const std::size_t n = 1 << 20;
    std::vector<cplx> a(n);
    std::copy(fi.begin(), fi.end(), a.begin());
    const auto spec = fft::forward(a);
    const double df = cfg.dac_rate / n;
    double m0 = 0.0, m1 = 0.0, peak = 0.0;
    for (std::size_t k = 1; k < n / 2; ++k) {
        const double p = std::norm(spec[k]);
        m0 += p;
        m1 += p * k * df;
        peak = std::max(peak, p);
    }
    CHECK(std::abs(m1 / m0 - cfg.band_center(0)) < 50e6);
    const auto at_fc = static_cast<std::size_t>(std::lround(cfg.band_center(0) / df));
    CHECK(to_db(std::norm(spec[at_fc]) / peak) > -0.5);
}

TEST_CASE("centre too close to DC is a configuration error") {
    CapConfig cfg;
    cfg.band_centers.assign(12, 0.0);
    for (int k = 0; k < 12; ++k) cfg.band_centers[static_cast<std::size_t>(k)] = (k + 0.5) * 2.2e9;
    cfg.band_centers[0] = 0.5e9;
    CHECK_THROWS_AS(cap_filter_pair(0, cfg), ConfigError);
    CHECK_THROWS_AS(cap_filter_pair(12, CapConfig{}), ConfigError);
}

TEST_CASE("differential QAM round trips") {
    for (int order : {4, 8, 16, 32, 64}) {
        DiffQam q(order);
        const int b = q.bits_per_symbol();
        const auto bits = testing::random_bits(static_cast<std::size_t>(b) * 3000, static_cast<std::uint64_t>(order));
        const auto sym = q.encode(bits);
        CHECK(q.decode(sym) == bits);
        double e = 0.0;
        for (const auto& p : q.points()) e += std::norm(p);
        CHECK(e / q.points().size() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(q.points().size() == static_cast<std::size_t>(order));
    }
    CHECK_THROWS_AS(DiffQam(128), ConfigError);
    CHECK_THROWS_AS(DiffQam(2), ConfigError);
}

TEST_CASE("differential QAM is invariant to quarter turns only") {
    for (int order : {4, 8, 16, 32, 64}) {
        DiffQam q(order);
        const int b = q.bits_per_symbol();
        const auto bits = testing::random_bits(static_cast<std::size_t>(b) * 2000, 100 + static_cast<std::uint64_t>(order));
        const auto sym = q.encode(bits);
        for (int turns = 1; turns < 4; ++turns) {
            std::vector<cplx> rot(sym);
            for (auto& s : rot) s *= std::polar(1.0, turns * M_PI / 2);
            const auto dec = q.decode(rot);
            CHECK(std::equal(dec.bits.begin() + b, dec.bits.end(), bits.bits.begin() + b));
        }
        // An eighth turn puts QPSK points on decision boundaries; a little
        // receiver noise decides which side they fall.
        GaussianSource noise(5);
        std::vector<cplx> eighth(sym);
        for (auto& s : eighth) s = s * std::polar(1.0, M_PI / 4) + 1e-3 * cplx(noise.normal(), noise.normal());
        const auto dec = q.decode(eighth);
        std::size_t errors = 0;
        for (std::size_t i = 0; i < bits.size(); ++i) errors += dec.bits[i] != bits.bits[i];
        CHECK(static_cast<double>(errors) / bits.size() > 0.1);
    }
}

TEST_CASE("within-quadrant labels are Gray where possible") {
    for (int order : {16, 32, 64}) {
        DiffQam q(order);
        const auto& pts = q.points();
        const std::size_t per_q = pts.size() / 4;
        double dmin = 1e9;
        for (std::size_t a = 0; a < per_q; ++a)
            for (std::size_t b = a + 1; b < per_q; ++b) dmin = std::min(dmin, std::abs(pts[a] - pts[b]));
        int pairs = 0, bad = 0;
        for (std::size_t a = 0; a < per_q; ++a) {
            for (std::size_t b = a + 1; b < per_q; ++b) {
                if (std::abs(pts[a] - pts[b]) > dmin * 1.001) continue;
                ++pairs;
                if (std::popcount(static_cast<unsigned>(a ^ b)) != 1) ++bad;
            }
        }
        CHECK(pairs > 0);
        CHECK(bad <= (order == 32 ? 1 : 0));
    }
}

TEST_CASE("MMA dispersion constant") {
    CHECK(DiffQam(4).mma_radius() == doctest::Approx(0.5));
    // 16-QAM axis levels {1, 3}/sqrt(10): E a^2 = 1/2, E a^4 = 41/100.
    CHECK(DiffQam(16).mma_radius() == doctest::Approx(41.0 / 50.0));
}

TEST_CASE("CAP frame layout and rate") {
    CapConfig cfg;
    cfg.training_len = 64;
    const std::size_t n_sym = 100;
    const auto frame = cap_modulate(testing::random_bits(28 * n_sym, 3), cfg);
    const auto& fd = frame.descriptor;
    CHECK(frame.waveform.sample_rate() == 80e9);
    CHECK(frame.waveform.size() == (64 + 1 + n_sym) * 40);
    CHECK(fd.payload_start == 64 * 40);
    CHECK(fd.training_symbols.size() == 12);
    for (const auto& t : fd.training_symbols) CHECK(t.size() == 64);
    CHECK_THROWS_AS(cap_modulate(testing::random_bits(28 * n_sym + 1, 3), cfg), FramingError);
}

TEST_CASE("truncated taps approximate the circular response") {
    CapConfig cfg;
    for (int band : {0, 6, 11}) {
        const auto [fi, fq] = cap_filter_pair(band, cfg);
        const std::size_t n = 1 << 15;
        std::vector<cplx> a(n), b(n);
        // Centre tap at index 0 (circularly) so the phase matches a zero-delay filter.
        const std::size_t c = fi.size() / 2;
        for (std::size_t i = 0; i < fi.size(); ++i) {
            a[(i + n - c) % n] = fi[i];
            b[(i + n - c) % n] = fq[i];
        }
        const auto fa = fft::forward(a);
        const auto fb = fft::forward(b);
        const auto freqs = fft::bin_frequencies(n, cfg.dac_rate);
        double err = 0.0, ref = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto [ri, rq] = cap_band_response(band, freqs[k], cfg);
            err += std::norm(fa[k] - ri) + std::norm(fb[k] - rq);
            ref += std::norm(ri) + std::norm(rq);
        }
        CHECK(to_db(err / ref) < -30.0);
    }
}

TEST_CASE("circular matched filter returns the symbols") {
    CapConfig cfg;
    cfg.training_len = 32;
    const auto frame = cap_modulate(testing::random_bits(28 * 500, 31), cfg);
    const auto& x = frame.waveform.samples();
    for (int band = 0; band < cfg.n_bands; ++band) {
        const auto y = cap_matched_filter(x, band, cfg);
        const auto& train = frame.descriptor.training_symbols[static_cast<std::size_t>(band)];
        double worst = 0.0;
        for (std::size_t s = 0; s < train.size(); ++s) worst = std::max(worst, std::abs(y[s * 40] - train[s]));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("single QPSK band decodes through its matched filter") {
    CapConfig cfg;
    cfg.training_len = 64;
    cfg.loading = single_band(12, 4, 2);
    const auto bits = testing::random_bits(2 * 2000, 21);
    const auto frame = cap_modulate(bits, cfg);
    auto y = band_symbols(frame.waveform.real(), 4, cfg);
    const double g = std::abs(y[10]) / std::sqrt(1.0);  // QPSK has constant modulus
    std::vector<cplx> payload(y.begin() + 64, y.end());
    for (auto& v : payload) v /= g;
    const auto dec = DiffQam(4).decode(payload);
    BitSequence got;
    got.bits.assign(dec.bits.begin() + 2, dec.bits.end());
    CHECK(got == bits);
}

TEST_CASE("cross-band leakage is at least 25 dB down") {
    CapConfig cfg;
    cfg.training_len = 16;
    const std::size_t n = 3000;
    double worst = -1e9;
    for (int j : {0, 5, 11}) {
        cfg.loading = single_band(12, j, 2);
        const auto frame = cap_modulate(testing::random_bits(2 * n, 40 + static_cast<std::uint64_t>(j)), cfg);
        const auto x = frame.waveform.real();
        const auto same = band_symbols(x, j, cfg);
        const double p_same = mean_power(same, 100, n - 100);
        for (int k = 0; k < 12; ++k) {
            if (k == j) continue;
            const auto other = band_symbols(x, k, cfg);
            worst = std::max(worst, to_db(mean_power(other, 100, n - 100) / p_same));
        }
    }
    MESSAGE("worst cross-band leakage " << worst << " dB");
    CHECK(worst <= -25.0);
}

TEST_CASE("power scaling of one band leaves the others alone") {
    CapConfig cfg;
    cfg.training_len = 16;
    const auto bits = testing::random_bits(28 * 1500, 8);
    const auto base = cap_modulate(bits, cfg);
    auto scaled_cfg = cfg;
    auto t = cfg.effective_loading();
    t.entries[6].power_scale = 1.5;
    // Renormalise the table; undo the common factor when comparing.
    double p2 = 0.0;
    for (const auto& e : t.entries) p2 += e.power_scale * e.power_scale;
    for (auto& e : t.entries) e.power_scale /= std::sqrt(p2 / 12.0);
    scaled_cfg.loading = t;
    const auto scaled = cap_modulate(bits, scaled_cfg);
    const double norm = std::sqrt(p2 / 12.0);
    for (int k = 0; k < 12; ++k) {
        if (k == 6) continue;
        const auto a = cap_matched_filter(base.waveform.samples(), k, cfg);
        auto b = cap_matched_filter(scaled.waveform.samples(), k, cfg);
        for (auto& v : b) v *= norm;
        const double rms = std::sqrt(mean_power(a, 0, a.size()));
        std::vector<cplx> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
        const double change = std::sqrt(mean_power(d, 0, d.size())) / rms;
        CHECK(change < 1e-6);
    }
}

TEST_CASE("twelve bands occupy about 26.4 GHz") {
    CapConfig cfg;
    cfg.training_len = 16;
    const auto frame = cap_modulate(testing::random_bits(28 * 2000, 12), cfg);
    const auto psd = periodogram(frame.waveform.samples(), cfg.dac_rate);
    const auto freqs = fft::bin_frequencies(psd.size(), cfg.dac_rate);
    double total = 0.0;
    for (std::size_t i = 0; i < psd.size(); ++i) total += freqs[i] >= 0 ? psd[i] : 0.0;
    // Edge where 99.5 % of the one-sided power has accumulated.
    std::vector<std::pair<double, double>> pos;
    for (std::size_t i = 0; i < psd.size(); ++i)
        if (freqs[i] >= 0) pos.emplace_back(freqs[i], psd[i]);
    std::sort(pos.begin(), pos.end());
    double acc = 0.0, edge = 0.0;
    for (const auto& [f, p] : pos) {
        acc += p;
        if (acc >= 0.995 * total) {
            edge = f;
            break;
        }
    }
    CHECK(edge == doctest::Approx(12 * 2.2e9).epsilon(0.05));
}
