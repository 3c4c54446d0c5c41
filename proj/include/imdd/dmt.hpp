#pragma once

#include <span>
#include <vector>

#include "imdd/frame.hpp"
#include "imdd/loading.hpp"
#include "imdd/waveform.hpp"

namespace imdd {

struct DmtConfig {
    int fft_size = 512;
    int cp_len = 8;
    double dac_rate = 84e9;
    int first_carrier = 1;
    int last_carrier = 200;          // inclusive
    double clip_ratio_db = 13.0;
    int target_bits_per_symbol = 347;
    int training_symbols = 8;        // one-tap equalizer training
    int payload_symbols = 128;       // per frame
    int probe_symbols = 256;         // SNR probe frame length
    double gap_db = 4.5;
    double drive_swing = 0.7;        // peak MZM drive as a fraction of V_pi

    int active_carriers() const { return last_carrier - first_carrier + 1; }
    int symbol_length() const { return fft_size + cp_len; }
    double carrier_frequency(int index) const { return index * dac_rate / fft_size; }
    void validate() const;
};

// Known QPSK value for (training symbol, carrier); same on both ends.
cplx dmt_training_value(int symbol, int carrier);

// Inverse FFT of a Hermitian-extended spectrum. `carriers` holds bins
// 1..fft_size/2-1; DC and Nyquist are forced to zero. The imaginary part of
// the result is numerical residue only.
std::vector<cplx> dmt_ifft(std::span<const cplx> carriers, int fft_size);

// Limits every sample to +-rms * 10^(clip_ratio_db / 20).
Waveform clip(const Waveform& w, double clip_ratio_db);

// Training symbols (known QPSK on every loaded carrier, scaled by its power)
// followed by payload symbols. Throws FramingError unless the bit count is a
// multiple of the table's bits per symbol.
TxFrame dmt_modulate(const BitSequence& bits, const LoadingTable& table, const DmtConfig& cfg);

// Flat QPSK table over every active carrier, used for SNR probing.
LoadingTable dmt_probe_table(const DmtConfig& cfg);

}  // namespace imdd
