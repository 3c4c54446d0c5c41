#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "imdd/waveform.hpp"

namespace imdd {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kOsnrReferenceBandwidth = 12.5e9;

// Physical link parameters. Signals are processed as periodic frames, so
// every filter below is a circular (FFT) filter.
struct LinkConfig {
    int dac_bits = 8;
    double dac_bandwidth_hz = 20e9;
    double modulator_bandwidth_hz = 27e9;
    double mux_passband_hz = 39e9;
    int mux_order = 3;
    double laser_detuning_hz = 0.0;          // 0 for DSB, 20e9 for VSB
    double fiber_length_km = 0.0;
    double dispersion_ps_nm_km = 17.0;
    double wavelength_nm = 1550.0;
    double osnr_db = std::numeric_limits<double>::infinity();  // inf: no ASE
    bool dcm_enabled = false;
    double dcm_residual_ps_nm = 0.0;
    double pd_responsivity = 1.0;
    double tia_noise_rms = 0.0;              // relative to the photocurrent RMS
    double adc_bandwidth_hz = 25e9;
    int adc_bits = 8;
    double adc_rate_hz = 0.0;                // 0: same as the DAC
    int oversample_factor = 2;
    double bias_fraction = 0.5;
    double vpi = 1.0;

    double accumulated_dispersion_ps_nm() const { return dispersion_ps_nm_km * fiber_length_km; }
    void validate() const;
};

// Mid-rise uniform quantiser with 2^bits levels spanning exactly [-peak, peak].
std::vector<double> quantize(std::span<const double> x, int bits, double peak);

// Quantise over the signal's own peak range, Bessel low-pass at
// dac_bandwidth, then interpolate to oversample_factor times the input rate.
Waveform dac(const Waveform& w, const LinkConfig& cfg);

// Chirp-free push-pull MZM: E = cos(pi/2 * (bias + drive / vpi)). Drive
// beyond +-vpi adds a warning.
Waveform ddmzm_modulate(const Waveform& drive, double bias_fraction, double vpi,
                        std::vector<std::string>* warnings = nullptr);

// Super-Gaussian band-pass with half-power points at center +- passband/2.
cplx super_gaussian_response(double f, double center_offset_hz, double passband_hz, int order);
Waveform optical_filter(const Waveform& e, double center_offset_hz, double passband_hz, int order);

// Chromatic dispersion all-pass for an accumulated dispersion (ps/nm).
Waveform apply_dispersion(const Waveform& e, double ps_per_nm, double wavelength_nm);
Waveform fiber_cd(const Waveform& e, double length_km, double d_ps_nm_km, double wavelength_nm);
// Compensates all but dcm_residual_ps_nm of the fiber's accumulated dispersion.
Waveform dcm(const Waveform& e, const LinkConfig& cfg);

// Adds circular complex white noise over the simulation bandwidth so that
// P_signal / (N0 * 12.5 GHz) equals the requested OSNR. Infinite OSNR passes
// the input through unchanged.
Waveform set_osnr(const Waveform& e, double osnr_db, std::uint64_t seed);

Waveform photodiode(const Waveform& e, double responsivity = 1.0);

// Thermal noise, Bessel low-pass at adc_bandwidth, AC coupling, resampling
// to `adc_rate` and quantisation to adc_bits. The output mean is removed
// again after quantisation.
Waveform pin_tia_adc(const Waveform& w, const LinkConfig& cfg, double adc_rate, std::uint64_t seed);

struct LinkOutput {
    Waveform received;
    std::vector<std::string> warnings;
};

// Complete chain DAC -> MZM -> MUX -> fiber -> DCM -> ASE -> DEMUX -> PIN/TIA
// -> ADC. The electrical frame is scaled so its peak drives the modulator to
// drive_swing * vpi; the drive is inverted so the detected intensity follows
// the transmitted signal.
LinkOutput simulate_link(const Waveform& tx, const LinkConfig& cfg, double drive_swing, std::uint64_t seed);

// Optical stage only (MUX through DEMUX), starting from the MZM drive at
// the internal rate. Used by the link and by the fading probe.
Waveform optical_path(const Waveform& drive, const LinkConfig& cfg, std::uint64_t seed,
                      std::vector<std::string>* warnings = nullptr);

}  // namespace imdd
