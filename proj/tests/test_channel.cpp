#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "imdd/channel.hpp"
#include "imdd/error.hpp"
#include "imdd/filters.hpp"
#include "imdd/pam4.hpp"
#include "imdd/spectrum.hpp"
#include "test_util.hpp"

using namespace imdd;

namespace {

constexpr double kRate = 168e9;

std::vector<cplx> complex_tone(std::size_t n, double rate, double f, double amp = 1.0) {
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(amp, 2.0 * M_PI * f * static_cast<double>(i) / rate);
    return x;
}

// Snap a frequency onto the FFT grid of an n-point frame.
double on_grid(double f, std::size_t n, double rate) { return std::round(f * n / rate) * rate / n; }

// Detected tone amplitude after a chirp-free MZM, optional optical filters,
// and the fiber, with no converters or noise.
double detected_tone_db(double f, double length_km, double detuning_hz) {
    const std::size_t n = 1 << 14;
    f = on_grid(f, n, kRate);
    const auto drive = testing::tone(n, kRate, f, 0.05);
    auto e = ddmzm_modulate(Waveform::electrical(drive, kRate), 0.5, 1.0);
    if (detuning_hz != 0.0) e = optical_filter(e, -detuning_hz, 39e9, 3);
    e = fiber_cd(e, length_km, 17.0, 1550.0);
    if (detuning_hz != 0.0) e = optical_filter(e, -detuning_hz, 39e9, 3);
    const auto i = photodiode(e);
    return 20.0 * std::log10(std::abs(tone_phasor(i.samples(), kRate, f)));
}

double fading_null(int k) {
    const double dl = 17.0 * 80.0 * 1e-3;
    const double lambda = 1550e-9;
    return std::sqrt((2.0 * k + 1.0) * kSpeedOfLight / (2.0 * dl * lambda * lambda));
}

}  // namespace

TEST_CASE("quantiser levels span the peak range") {
    const std::vector<double> x{-1.0, -0.5, 0.0, 0.2, 1.0};
    const auto q = quantize(x, 2, 1.0);
    // Four mid-rise levels at -1, -1/3, 1/3, 1.
    CHECK(q[0] == doctest::Approx(-1.0));
    CHECK(q[1] == doctest::Approx(-1.0 / 3.0));
    CHECK(std::abs(q[2]) == doctest::Approx(1.0 / 3.0));
    CHECK(q[3] == doctest::Approx(1.0 / 3.0));
    CHECK(q[4] == doctest::Approx(1.0));
}

TEST_CASE("DAC is transparent at high resolution and bandwidth") {
    LinkConfig cfg;
    cfg.dac_bits = 16;
    cfg.dac_bandwidth_hz = 2e12;
    Pam4Config pam;
    pam.training_len = 0;
    const auto frame = pam4_build_frame(testing::random_bits(4096, 3), pam);
    const auto out = dac(frame.waveform, cfg);
    CHECK(out.sample_rate() == doctest::Approx(168e9));
    CHECK(out.size() == 2 * frame.waveform.size());
    const auto back = spectral_resample(out.samples(), frame.waveform.size());
    const double err = testing::rms_diff(back, frame.waveform.samples());
    CHECK(20.0 * std::log10(err / frame.waveform.rms()) < -80.0);
}

TEST_CASE("8-bit full-scale sine reaches the quantisation SNDR") {
    LinkConfig cfg;
    cfg.dac_bandwidth_hz = 2e12;
    const std::size_t n = 1 << 14;
    const double f = 1001.0 * 84e9 / n;
    const auto x = testing::tone(n, 84e9, f);
    const auto out = dac(Waveform::electrical(x, 84e9), cfg);
    const cplx a = tone_phasor(out.samples(), out.sample_rate(), f);
    const double signal = 2.0 * std::norm(a);
    const double sndr = 10.0 * std::log10(signal / (out.mean_power() - signal));
    CHECK(sndr == doctest::Approx(6.02 * 8 + 1.76).epsilon(1.0 / 49.9));
}

TEST_CASE("DAC passes DC unchanged") {
    LinkConfig cfg;
    const std::vector<double> x(1000, 0.37);
    const auto out = dac(Waveform::electrical(x, 84e9), cfg);
    for (double v : out.real()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("MZM transfer curve") {
    const std::vector<double> zero(16, 0.0);
    const auto e0 = ddmzm_modulate(Waveform::electrical(zero, 1e9), 0.5, 1.0);
    CHECK(e0.samples()[0].real() == doctest::Approx(std::sqrt(0.5)));
    CHECK_FALSE(e0.is_electrical());

    const std::vector<double> full(4, -0.5);
    const auto e1 = ddmzm_modulate(Waveform::electrical(full, 1e9), 0.5, 1.0);
    CHECK(std::norm(e1.samples()[0]) == doctest::Approx(1.0));

    // Small signal: the intensity change is linear in the drive within 1 %.
    const double i0 = 0.5;
    const double slope = -0.5 * M_PI;
    std::vector<double> d;
    for (double v = -0.05; v <= 0.05 + 1e-12; v += 0.005) {
        if (std::abs(v) > 1e-9) d.push_back(v);
    }
    const auto e = ddmzm_modulate(Waveform::electrical(d, 1e9), 0.5, 1.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double di = std::norm(e.samples()[k]) - i0;
        CHECK(std::abs(di / (slope * d[k]) - 1.0) < 0.01);
    }

    std::vector<std::string> warnings;
    const std::vector<double> over{0.2, -1.3};
    ddmzm_modulate(Waveform::electrical(over, 1e9), 0.5, 1.0, &warnings);
    CHECK(warnings.size() == 1);
}

TEST_CASE("super-Gaussian filter edges and transparency") {
    CHECK(std::norm(super_gaussian_response(19.5e9, 0.0, 39e9, 3)) == doctest::Approx(0.5));
    CHECK(std::norm(super_gaussian_response(-19.5e9, 0.0, 39e9, 3)) == doctest::Approx(0.5));
    CHECK(std::norm(super_gaussian_response(0.5e9, 20e9, 39e9, 3)) == doctest::Approx(0.5));

    const std::size_t n = 1 << 13;
    auto x = complex_tone(n, kRate, on_grid(3e9, n, kRate));
    const auto y = optical_filter(Waveform::optical(x, kRate), 0.0, 39e9, 3);
    CHECK(10.0 * std::log10(y.mean_power()) == doctest::Approx(0.0).epsilon(0.1));
}

TEST_CASE("20 GHz detuning suppresses the upper sideband") {
    LinkConfig cfg;
    Pam4Config pam;
    pam.training_len = 0;
    const auto frame = pam4_build_frame(testing::random_bits(16384, 4), pam);
    auto drive = dac(frame.waveform, cfg).real();
    for (auto& v : drive) v *= -0.3;
    const auto e = ddmzm_modulate(Waveform::electrical(drive, kRate), 0.5, 1.0);
    const auto f = optical_filter(e, -20e9, 39e9, 3);
    const double upper = band_power(f.samples(), kRate, 0.5e9, 28e9);
    const double lower = band_power(f.samples(), kRate, -28e9, -0.5e9);
    CHECK(10.0 * std::log10(lower / upper) >= 10.0);
    const double upper_dsb = band_power(e.samples(), kRate, 0.5e9, 28e9);
    const double lower_dsb = band_power(e.samples(), kRate, -28e9, -0.5e9);
    CHECK(std::abs(10.0 * std::log10(lower_dsb / upper_dsb)) < 0.5);
}

TEST_CASE("fiber dispersion is all-pass and inverted by the DCM") {
    const std::size_t n = 1 << 12;
    GaussianSource rng(1);
    std::vector<cplx> x(n);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    const auto in = Waveform::optical(x, kRate);

    CHECK(fiber_cd(in, 0.0, 17.0, 1550.0).samples() == in.samples());

    const auto out = fiber_cd(in, 80.0, 17.0, 1550.0);
    CHECK(std::abs(out.mean_power() / in.mean_power() - 1.0) < 1e-9);

    LinkConfig cfg;
    cfg.fiber_length_km = 80.0;
    cfg.dcm_enabled = true;
    const auto back = dcm(out, cfg);
    CHECK(testing::rms_diff(back.samples(), in.samples()) < 1e-9);

    LinkConfig b2b;
    b2b.dcm_enabled = true;
    CHECK(testing::rms_diff(dcm(in, b2b).samples(), in.samples()) < 1e-12);

    cfg.dcm_residual_ps_nm = 100.0;
    const auto residual = dcm(out, cfg);
    const auto equivalent = fiber_cd(in, 100.0 / 17.0, 17.0, 1550.0);
    CHECK(testing::rms_diff(residual.samples(), equivalent.samples()) < 1e-9);
}

TEST_CASE("DSB fading nulls follow the analytic formula") {
    // 50 MHz tone sweep; nulls are local minima 20 dB below the low-frequency response.
    std::vector<double> freqs, resp;
    for (double f = 1e9; f <= 17e9; f += 50e6) {
        freqs.push_back(f);
        resp.push_back(detected_tone_db(f, 80.0, 0.0));
    }
    std::vector<double> nulls;
    for (std::size_t i = 1; i + 1 < resp.size(); ++i) {
        if (resp[i] < resp[i - 1] && resp[i] <= resp[i + 1] && resp[i] < resp[0] - 20.0) nulls.push_back(freqs[i]);
    }
    REQUIRE(nulls.size() >= 3);
    for (int k = 0; k < 3; ++k) {
        const double expected = fading_null(k);
        MESSAGE("null " << k << ": " << nulls[static_cast<std::size_t>(k)] / 1e9 << " GHz, expected " << expected / 1e9);
        CHECK(std::abs(nulls[static_cast<std::size_t>(k)] / expected - 1.0) < 0.02);
    }
    CHECK(fading_null(0) == doctest::Approx(6.77e9).epsilon(0.01));
}

TEST_CASE("VSB detuning lifts the first null by 10 dB") {
    const double f1 = fading_null(0);
    const double dsb = detected_tone_db(f1, 80.0, 0.0);
    const double vsb = detected_tone_db(f1, 80.0, 20e9);
    CHECK(vsb - dsb >= 10.0);
}

TEST_CASE("ASE loading hits the requested OSNR") {
    const std::size_t n = 1 << 18;
    const std::vector<cplx> carrier(n, cplx(1.0, 0.0));
    const auto in = Waveform::optical(carrier, kRate);
    const auto out = set_osnr(in, 30.0, 99);
    std::vector<cplx> noise(n);
    for (std::size_t i = 0; i < n; ++i) noise[i] = out.samples()[i] - carrier[i];
    const double in_ref = band_power(noise, kRate, -6.25e9, 6.25e9);
    CHECK(in_ref == doctest::Approx(1e-3).epsilon(0.03));

    // Periodogram estimate from the output alone: noise floor away from DC.
    const auto psd = periodogram(out.samples(), kRate);
    double floor = 0.0;
    for (std::size_t k = 1; k < n; ++k) floor += psd[k];
    floor /= static_cast<double>(n - 1);
    const double measured = 10.0 * std::log10(1.0 / (floor * kOsnrReferenceBandwidth));
    CHECK(std::abs(measured - 30.0) < 0.1);

    const auto clean = set_osnr(in, std::numeric_limits<double>::infinity(), 99);
    CHECK(clean.samples() == in.samples());
    CHECK(set_osnr(in, 30.0, 99).samples() == out.samples());
    CHECK(set_osnr(in, 30.0, 100).samples() != out.samples());

    const std::vector<cplx> dark(16, cplx{});
    CHECK_THROWS_AS(set_osnr(Waveform::optical(dark, kRate), 20.0, 1), MeasurementError);
}

TEST_CASE("square-law detection") {
    const std::vector<cplx> flat(64, cplx(0.6, 0.8) * 0.5);
    for (double v : photodiode(Waveform::optical(flat, kRate)).real()) CHECK(v == doctest::Approx(0.25));

    const std::size_t n = 4096;
    const double f1 = on_grid(3e9, n, kRate), f2 = on_grid(8e9, n, kRate);
    auto a = complex_tone(n, kRate, f1);
    const auto b = complex_tone(n, kRate, f2, 0.5);
    for (std::size_t i = 0; i < n; ++i) a[i] += b[i];
    const auto i = photodiode(Waveform::optical(a, kRate));
    CHECK(std::abs(tone_phasor(i.samples(), kRate, f2 - f1)) == doctest::Approx(0.5));
    for (double v : i.real()) CHECK(v >= 0.0);
}

TEST_CASE("receiver front end") {
    const std::size_t n = 1 << 14;
    const double f = on_grid(5e9, n, kRate);
    auto x = testing::tone(n, kRate, f);
    for (auto& v : x) v += 2.0;

    LinkConfig wide;
    wide.adc_bits = 16;
    wide.adc_bandwidth_hz = 2e12;
    const auto out = pin_tia_adc(Waveform::electrical(x, kRate), wide, 84e9, 1);
    CHECK(out.size() == n / 2);
    CHECK(out.sample_rate() == 84e9);
    double mean = 0.0;
    for (double v : out.real()) mean += v;
    CHECK(std::abs(mean / static_cast<double>(out.size())) < 1e-9);
    const auto expected = testing::tone(n / 2, 84e9, f);
    CHECK(20.0 * std::log10(testing::rms_diff(out.real(), expected) / std::sqrt(0.5)) < -70.0);

    // 1 % thermal noise on a clean carrier: 40 dB SNR.
    LinkConfig noisy = wide;
    noisy.tia_noise_rms = 0.01;
    const auto carrier = testing::tone(n, kRate, f);
    const auto y = pin_tia_adc(Waveform::electrical(carrier, kRate), noisy, kRate, 7);
    const cplx a = tone_phasor(y.samples(), kRate, f);
    const double signal = 2.0 * std::norm(a);
    const double snr = 10.0 * std::log10(signal / (y.mean_power() - signal));
    CHECK(snr == doctest::Approx(40.0).epsilon(0.5 / 40.0));
}

TEST_CASE("link configuration checks") {
    LinkConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.laser_detuning_hz = 30e9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LinkConfig{};
    cfg.fiber_length_km = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LinkConfig{};
    cfg.osnr_db = std::nan("");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("link simulation is reproducible and seed dependent") {
    LinkConfig cfg;
    cfg.osnr_db = 25.0;
    cfg.tia_noise_rms = 0.01;
    Pam4Config pam;
    pam.training_len = 0;
    const auto frame = pam4_build_frame(testing::random_bits(4096, 9), pam);
    const auto a = simulate_link(frame.waveform, cfg, 0.3, 42);
    const auto b = simulate_link(frame.waveform, cfg, 0.3, 42);
    const auto c = simulate_link(frame.waveform, cfg, 0.3, 43);
    CHECK(a.received.samples() == b.received.samples());
    CHECK(a.received.samples() != c.received.samples());
    CHECK(a.received.sample_rate() == 84e9);
    CHECK(a.received.size() == frame.waveform.size());
}
