#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "imdd/cap.hpp"
#include "imdd/dmt.hpp"
#include "imdd/frame.hpp"
#include "imdd/loading.hpp"
#include "imdd/pam4.hpp"
#include "imdd/waveform.hpp"

namespace imdd {

struct SyncResult {
    std::size_t offset = 0;  // rx index where the reference starts
    double peak = 0.0;       // normalised correlation at that offset
};

// Circular normalised cross-correlation of rx against the reference; the
// offset with the largest |correlation| wins. Throws SyncError below min_peak.
SyncResult synchronize(std::span<const double> rx, std::span<const double> reference, double min_peak = 0.5);

// Brings rx onto the transmit sample grid (band-limited circular
// resampling), synchronises on the training waveform and returns exactly
// one frame starting at the frame boundary.
std::vector<double> align_frame(const Waveform& rx, const FrameDescriptor& fd, double tx_rate);

struct FfeResult {
    std::vector<double> symbols;  // one per symbol period
    std::vector<double> taps;
    double mse_head = 0.0;        // first quarter of training
    double mse_tail = 0.0;        // last quarter of training
};

// Real T/2-spaced FFE for PAM-4. Output k is centred on rx_t2[2k]; indices
// wrap around the frame. LMS against `training` for the first
// training.size() outputs, then decision-directed on the unit-energy PAM-4
// levels. Taps start as a centre spike. Throws EqualizerDivergence when the
// training error grows.
FfeResult ffe_lms(std::span<const double> rx_t2, std::span<const double> training, std::size_t n_symbols,
                  int n_taps, double step);

BitSequence pam4_receive(const Waveform& rx, const FrameDescriptor& fd, const Pam4Config& cfg);

struct DmtRxResult {
    BitSequence bits;
    // One value per active carrier (first_carrier..last_carrier), in dB;
    // NaN where the table puts no power.
    std::vector<double> snr_db;
};

// One-tap equalisation from the training average; SNR from the training
// error vectors.
DmtRxResult dmt_receive(const Waveform& rx, const LoadingTable& table, const FrameDescriptor& fd,
                        const DmtConfig& cfg);

struct MmaSchedule {
    std::size_t blind_symbols = 0;   // outputs adapted towards blind_points' radius
    std::vector<cplx> blind_points;  // constellation sent during the blind span
    std::vector<cplx> payload_points;
    double mma_step = 5e-4;
    double dd_step = 0.0;            // > 0: decision-directed after the blind span
};

struct MmaResult {
    std::vector<cplx> symbols;
    std::vector<cplx> taps;
    double head_error = 0.0;         // modulus error, first 10 % of the adaptation span
    double tail_error = 0.0;         // last 10 %
    bool converged = true;
};

// Complex T/2-spaced multi-modulus FFE; output k is centred on rx_t2[2k].
// The radius for each rail is E a^4 / E a^2 of the constellation in use.
// Convergence is judged over the blind span (the whole stream without one).
MmaResult ffe_mma(std::span<const cplx> rx_t2, std::size_t n_symbols, int n_taps, const MmaSchedule& schedule);

// Mean squared distance of |y| to the nearest ring (distinct point
// magnitude) of the constellation.
double modulus_error(std::span<const cplx> y, std::span<const cplx> points);

struct CapBandReport {
    int band = 0;
    bool converged = true;
    double head_error = 0.0;
    double tail_error = 0.0;
};

struct CapRxResult {
    BitSequence bits;
    std::vector<CapBandReport> bands;  // loaded bands only

    bool all_converged() const;
};

// Per band: circular matched filter, 2 samples per symbol, blind MMA FFE,
// differential decoding. Bits are concatenated band 0 first.
CapRxResult cap_receive(const Waveform& rx, const CapConfig& cfg, const FrameDescriptor& fd);

// Equalised symbol streams (training, reference symbol, payload) of every
// loaded band, in loading-table order. Used by the receiver and the SNR probe.
std::vector<std::vector<cplx>> cap_equalized_bands(const Waveform& rx, const CapConfig& cfg, const FrameDescriptor& fd,
                                                   std::vector<CapBandReport>* reports = nullptr);

// SNR in dB from error-vector statistics of a probe frame whose loading and
// payload are known: per active carrier for DMT, per band for CAP. Uses the
// training symbols and the known payload. Throws MeasurementError when fewer
// than 8 known symbols are available.
std::vector<double> estimate_dmt_snr(const Waveform& rx, const LoadingTable& table, const FrameDescriptor& fd,
                                     const DmtConfig& cfg);
std::vector<double> estimate_cap_snr(const Waveform& rx, const CapConfig& cfg, const FrameDescriptor& fd);

}  // namespace imdd
