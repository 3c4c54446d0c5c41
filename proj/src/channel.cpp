#include "imdd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imdd/error.hpp"
#include "imdd/filters.hpp"
#include "imdd/rng.hpp"

namespace imdd {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> real_parts(const std::vector<cplx>& x) {
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](cplx v) { return v.real(); });
    return out;
}

std::vector<cplx> as_complex(std::span<const double> x) { return {x.begin(), x.end()}; }

std::vector<double> lowpass(std::span<const double> x, double rate, double f_3db) {
    const auto y = apply_response(as_complex(x), rate, [f_3db](double f) { return bessel4_response(f, f_3db); });
    return real_parts(y);
}

std::size_t resampled_length(std::size_t n, double from_rate, double to_rate) {
    const double exact = static_cast<double>(n) * to_rate / from_rate;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-6) {
        throw ConfigError("frame length does not map to a whole number of samples at the target rate");
    }
    return static_cast<std::size_t>(rounded);
}

double peak_abs(std::span<const double> x) {
    double p = 0.0;
    for (double v : x) p = std::max(p, std::abs(v));
    return p;
}

}  // namespace

void LinkConfig::validate() const {
    auto bits_ok = [](int b) { return b >= 1 && b <= 24; };
    if (!bits_ok(dac_bits) || !bits_ok(adc_bits)) throw ConfigError("converter resolution must lie in [1, 24] bits");
    if (!(dac_bandwidth_hz > 0 && modulator_bandwidth_hz > 0 && adc_bandwidth_hz > 0 && mux_passband_hz > 0)) {
        throw ConfigError("bandwidths must be positive");
    }
    if (mux_order < 1) throw ConfigError("mux_order must be at least 1");
    if (!(std::abs(laser_detuning_hz) < 25e9)) throw ConfigError("laser detuning must stay within +-25 GHz");
    if (!(fiber_length_km >= 0.0)) throw ConfigError("fiber length cannot be negative");
    if (std::isnan(osnr_db) || osnr_db == -std::numeric_limits<double>::infinity()) {
        throw ConfigError("osnr_db must be finite or +inf");
    }
    if (!(wavelength_nm > 0.0)) throw ConfigError("wavelength must be positive");
    if (!(pd_responsivity > 0.0)) throw ConfigError("photodiode responsivity must be positive");
    if (!(tia_noise_rms >= 0.0)) throw ConfigError("TIA noise cannot be negative");
    if (adc_rate_hz < 0.0) throw ConfigError("ADC rate cannot be negative");
    if (oversample_factor < 1) throw ConfigError("oversample factor must be at least 1");
    if (!(vpi > 0.0)) throw ConfigError("vpi must be positive");
}

std::vector<double> quantize(std::span<const double> x, int bits, double peak) {
    std::vector<double> out(x.begin(), x.end());
    if (!(peak > 0.0)) return out;
    const double levels = std::ldexp(1.0, bits);
    const double step = 2.0 * peak / (levels - 1.0);
    for (auto& v : out) {
        const double idx = std::clamp(std::round((v + peak) / step), 0.0, levels - 1.0);
        v = -peak + idx * step;
    }
    return out;
}

Waveform dac(const Waveform& w, const LinkConfig& cfg) {
    if (!w.is_electrical()) throw ConfigError("DAC expects an electrical waveform");
    const auto x = w.real();
    const auto q = quantize(x, cfg.dac_bits, peak_abs(x));
    const auto filtered = lowpass(q, w.sample_rate(), cfg.dac_bandwidth_hz);
    const auto n_out = w.size() * static_cast<std::size_t>(cfg.oversample_factor);
    const auto up = spectral_resample(as_complex(filtered), n_out);
    return Waveform::electrical(real_parts(up), w.sample_rate() * cfg.oversample_factor);
}

Waveform ddmzm_modulate(const Waveform& drive, double bias_fraction, double vpi, std::vector<std::string>* warnings) {
    if (!drive.is_electrical()) throw ConfigError("MZM drive must be electrical");
    const auto d = drive.real();
    std::vector<cplx> e(d.size());
    bool over = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        over = over || std::abs(d[i]) > vpi;
        e[i] = std::cos(0.5 * kPi * (bias_fraction + d[i] / vpi));
    }
    if (over && warnings) warnings->push_back("MZM over-modulated: drive exceeds +-vpi");
    return Waveform::optical(std::move(e), drive.sample_rate());
}

cplx super_gaussian_response(double f, double center_offset_hz, double passband_hz, int order) {
    const double x = 2.0 * (f - center_offset_hz) / passband_hz;
    return std::exp(-0.5 * std::numbers::ln2 * std::pow(x * x, order));
}

Waveform optical_filter(const Waveform& e, double center_offset_hz, double passband_hz, int order) {
    if (e.is_electrical()) throw ConfigError("optical filter expects an optical field");
    auto y = apply_response(e.samples(), e.sample_rate(), [=](double f) {
        return super_gaussian_response(f, center_offset_hz, passband_hz, order);
    });
    return Waveform::optical(std::move(y), e.sample_rate());
}

Waveform apply_dispersion(const Waveform& e, double ps_per_nm, double wavelength_nm) {
    if (e.is_electrical()) throw ConfigError("dispersion acts on an optical field");
    if (ps_per_nm == 0.0) return e;
    const double dl = ps_per_nm * 1e-3;  // s/m
    const double lambda = wavelength_nm * 1e-9;
    const double k = kPi * dl * lambda * lambda / kSpeedOfLight;
    auto y = apply_response(e.samples(), e.sample_rate(), [k](double f) { return std::polar(1.0, -k * f * f); });
    return Waveform::optical(std::move(y), e.sample_rate());
}

Waveform fiber_cd(const Waveform& e, double length_km, double d_ps_nm_km, double wavelength_nm) {
    return apply_dispersion(e, length_km * d_ps_nm_km, wavelength_nm);
}

Waveform dcm(const Waveform& e, const LinkConfig& cfg) {
    return apply_dispersion(e, -(cfg.accumulated_dispersion_ps_nm() - cfg.dcm_residual_ps_nm), cfg.wavelength_nm);
}

Waveform set_osnr(const Waveform& e, double osnr_db, std::uint64_t seed) {
    if (e.is_electrical()) throw ConfigError("OSNR loading acts on an optical field");
    if (osnr_db == std::numeric_limits<double>::infinity()) return e;
    const double p = e.mean_power();
    if (!(p > 0.0)) throw MeasurementError("cannot set OSNR on a signal without power");
    const double n0 = p / (std::pow(10.0, osnr_db / 10.0) * kOsnrReferenceBandwidth);
    const double sigma = std::sqrt(0.5 * n0 * e.sample_rate());
    GaussianSource src(seed);
    std::vector<cplx> y(e.samples());
    for (auto& v : y) {
        const double re = src.normal();
        const double im = src.normal();
        v += sigma * cplx(re, im);
    }
    return Waveform::optical(std::move(y), e.sample_rate());
}

Waveform photodiode(const Waveform& e, double responsivity) {
    if (e.is_electrical()) throw ConfigError("photodiode expects an optical field");
    std::vector<double> i(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) i[k] = responsivity * std::norm(e.samples()[k]);
    return Waveform::electrical(i, e.sample_rate());
}

Waveform pin_tia_adc(const Waveform& w, const LinkConfig& cfg, double adc_rate, std::uint64_t seed) {
    if (!w.is_electrical()) throw ConfigError("receiver front end expects an electrical waveform");
    auto x = w.real();
    if (cfg.tia_noise_rms > 0.0) {
        const double sigma = cfg.tia_noise_rms * w.rms();
        GaussianSource src(seed);
        for (auto& v : x) v += sigma * src.normal();
    }
    x = lowpass(x, w.sample_rate(), cfg.adc_bandwidth_hz);
    auto remove_mean = [](std::vector<double>& v) {
        double m = 0.0;
        for (double s : v) m += s;
        m /= static_cast<double>(v.size());
        for (auto& s : v) s -= m;
    };
    remove_mean(x);
    const auto n_out = resampled_length(x.size(), w.sample_rate(), adc_rate);
    auto y = real_parts(spectral_resample(as_complex(x), n_out));
    y = quantize(y, cfg.adc_bits, peak_abs(y));
    remove_mean(y);
    return Waveform::electrical(y, adc_rate);
}

Waveform optical_path(const Waveform& drive, const LinkConfig& cfg, std::uint64_t seed,
                      std::vector<std::string>* warnings) {
    const auto shaped = lowpass(drive.real(), drive.sample_rate(), cfg.modulator_bandwidth_hz);
    auto e = ddmzm_modulate(Waveform::electrical(shaped, drive.sample_rate()), cfg.bias_fraction, cfg.vpi, warnings);
    const double centre = -cfg.laser_detuning_hz;
    e = optical_filter(e, centre, cfg.mux_passband_hz, cfg.mux_order);
    e = fiber_cd(e, cfg.fiber_length_km, cfg.dispersion_ps_nm_km, cfg.wavelength_nm);
    if (cfg.dcm_enabled) e = dcm(e, cfg);
    e = set_osnr(e, cfg.osnr_db, seed);
    return optical_filter(e, centre, cfg.mux_passband_hz, cfg.mux_order);
}

LinkOutput simulate_link(const Waveform& tx, const LinkConfig& cfg, double drive_swing, std::uint64_t seed) {
    cfg.validate();
    if (!tx.is_electrical()) throw ConfigError("link input must be an electrical waveform");
    if (!(drive_swing > 0.0)) throw ConfigError("drive swing must be positive");
    LinkOutput out{tx, {}};
    const auto converted = dac(tx, cfg);
    auto d = converted.real();
    const double peak = peak_abs(tx.real());
    if (!(peak > 0.0)) throw MeasurementError("transmit frame is all zeros");
    const double gain = -drive_swing * cfg.vpi / peak;
    for (auto& v : d) v *= gain;
    const auto field = optical_path(Waveform::electrical(d, converted.sample_rate()), cfg,
                                    derive_seed(seed, "ase"), &out.warnings);
    const auto current = photodiode(field, cfg.pd_responsivity);
    const double adc_rate = cfg.adc_rate_hz > 0.0 ? cfg.adc_rate_hz : tx.sample_rate();
    out.received = pin_tia_adc(current, cfg, adc_rate, derive_seed(seed, "tia"));
    return out;
}

}  // namespace imdd
