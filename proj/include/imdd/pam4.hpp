#pragma once

#include <span>
#include <vector>

#include "imdd/frame.hpp"
#include "imdd/waveform.hpp"

namespace imdd {

enum class Shaping { Rrc, None };

struct Pam4Config {
    double symbol_rate = 28e9;
    double dac_rate = 84e9;
    Shaping shaping = Shaping::Rrc;
    double rolloff = 0.2;
    int rrc_span = 16;
    int training_len = 2048;       // symbols
    int payload_symbols = 32768;   // per frame
    int ffe_taps = 11;
    double lms_step = 1e-3;
    double drive_swing = 0.6;      // peak MZM drive as a fraction of V_pi
    std::size_t min_payload_bits = 10000;

    // Samples per symbol on the DAC grid; throws ConfigError unless integral.
    int samples_per_symbol() const;
    void validate_transmitter() const;
    // Adds the receiver requirements (training >= 4x FFE taps, step > 0).
    void validate() const;
};

std::vector<double> pam4_encode(const BitSequence& bits);
BitSequence pam4_decode(std::span<const double> symbols);

// Fixed PRBS-15 derived training sequence shared by transmitter and receiver.
std::vector<double> pam4_training_symbols(int length);

// Places symbols on the DAC grid with the configured pulse shape.
std::vector<double> pam4_shape(std::span<const double> symbols, const Pam4Config& cfg);

TxFrame pam4_build_frame(const BitSequence& payload, const Pam4Config& cfg);

}  // namespace imdd
