#pragma once

#include <span>
#include <utility>
#include <vector>

#include "imdd/frame.hpp"
#include "imdd/loading.hpp"
#include "imdd/waveform.hpp"

namespace imdd {

struct CapConfig {
    int n_bands = 12;
    double band_symbol_rate = 2e9;
    double dac_rate = 80e9;
    double rolloff = 0.1;
    int filter_span = 32;              // symbols
    std::vector<double> band_centers;  // Hz; empty selects (k + 1/2) * spacing
    LoadingTable loading;              // per band; empty selects default_cap_loading
    int target_bits_per_symbol = 28;   // summed over bands, per band symbol period
    int training_len = 1024;           // symbols per band
    int payload_symbols = 4095;        // per band and frame
    int ffe_taps = 14;
    double mma_step = 5e-4;
    double dd_step = 2e-4;
    double gap_db = 4.5;
    double drive_swing = 0.6;          // peak MZM drive as a fraction of V_pi

    int samples_per_symbol() const;
    double band_spacing() const { return band_symbol_rate * (1.0 + rolloff); }
    double band_center(int band) const;
    // Loading in effect: `loading` when set, the default spread otherwise.
    LoadingTable effective_loading() const;
    void validate() const;
};

// Spreads `total_bits` as evenly as possible over the bands, using only the
// differential QAM sizes (2..6 bits per symbol).
LoadingTable default_cap_loading(int n_bands, int total_bits);

// In-phase RRC*cos and quadrature RRC*sin shaping filters of one band on the
// DAC grid, truncated to filter_span symbols and jointly scaled so their
// energies sum to two.
std::pair<std::vector<double>, std::vector<double>> cap_filter_pair(int band, const CapConfig& cfg);

// Untruncated frequency responses (F_I(f), F_Q(f)) of the same pair. Frames
// are shaped and matched-filtered circularly with these, so adjacent bands
// share no spectrum at all.
std::pair<cplx, cplx> cap_band_response(int band, double f, const CapConfig& cfg);

// Circular convolution of x with the band's pair: I + jQ on the DAC grid.
// Sampled at the symbol instants of a clean frame it returns the band's
// symbols (times its power scale).
std::vector<cplx> cap_matched_filter(std::span<const cplx> x, int band, const CapConfig& cfg);

// Differential QAM, rotationally invariant to multiples of pi/2. The first
// two bits of each symbol select the quadrant change (Gray coded), the
// remaining bits label the point inside the quadrant. Supported orders:
// 4, 8, 16, 32 (cross) and 64.
class DiffQam {
public:
    explicit DiffQam(int order);

    int order() const { return order_; }
    int bits_per_symbol() const { return bits_; }
    const std::vector<cplx>& points() const { return points_; }

    std::vector<cplx> encode(const BitSequence& bits) const;
    BitSequence decode(std::span<const cplx> symbols) const;
    cplx nearest(cplx z) const;

    // E|Re a|^4 / E|Re a|^2, the multi-modulus dispersion constant.
    double mma_radius() const;

private:
    int order_;
    int bits_;
    std::vector<cplx> base_;        // first-quadrant points, indexed by inner label
    std::vector<cplx> points_;      // full constellation, index = quadrant * base + label
};

std::vector<cplx> diff_qam_encode(const BitSequence& bits, int order);
BitSequence diff_qam_decode(std::span<const cplx> symbols, int order);

// Known QPSK training symbols of one band.
std::vector<cplx> cap_training_symbols(int band, int length);

// Each loaded band carries its training prefix, one reference symbol (no
// data, absorbs the differential start-up) and its payload. Payload bits are
// taken band 0 first, payload_symbols * bits(band) per band.
TxFrame cap_modulate(const BitSequence& bits, const CapConfig& cfg);

}  // namespace imdd
