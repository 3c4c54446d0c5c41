#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "imdd/waveform.hpp"

namespace imdd {

enum class Format { Pam4, Dmt, Cap };

std::string to_string(Format f);
Format parse_format(const std::string& s);

// Binds what was transmitted to what the receiver measures. Sample indices
// refer to the transmit waveform at the DAC rate.
struct FrameDescriptor {
    Format format = Format::Pam4;
    // PAM-4: one stream of training symbols. DMT: one vector per training
    // symbol holding the value sent on every loading-table entry (zero where
    // the entry carries no bits). CAP: one stream per band.
    std::vector<std::vector<cplx>> training_symbols;
    // Transmit samples of the training section, the synchronisation reference.
    std::vector<double> training_waveform;
    BitSequence payload_bits;
    std::size_t training_start = 0;
    std::size_t payload_start = 0;
    std::size_t frame_length = 0;

    // Throws FramingError unless training_start <= payload_start < frame_length.
    void validate() const;
};

struct TxFrame {
    Waveform waveform;
    FrameDescriptor descriptor;
    std::vector<std::string> warnings;
};

}  // namespace imdd
