#include "imdd/pam4.hpp"

#include <cmath>
#include <string>

#include "imdd/constellation.hpp"
#include "imdd/error.hpp"
#include "imdd/filters.hpp"
#include "imdd/prbs.hpp"

namespace imdd {

namespace {

constexpr std::uint64_t kTrainingSeed = 0x1D3;

const Constellation& pam4_constellation() {
    static const Constellation c = Constellation::pam(4);
    return c;
}

}  // namespace

int Pam4Config::samples_per_symbol() const {
    const double ratio = dac_rate / symbol_rate;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 || rounded < 2) {
        throw ConfigError("PAM-4 DAC rate must be an integer multiple (>= 2) of the symbol rate");
    }
    return static_cast<int>(rounded);
}

void Pam4Config::validate_transmitter() const {
    samples_per_symbol();
    if (training_len < 0) throw ConfigError("PAM-4 training length cannot be negative");
    if (payload_symbols < 1) throw ConfigError("PAM-4 payload must hold at least one symbol");
    if (shaping == Shaping::Rrc && !(rolloff > 0.0 && rolloff <= 1.0)) {
        throw ConfigError("PAM-4 rolloff must lie in (0, 1]");
    }
}

void Pam4Config::validate() const {
    validate_transmitter();
    if (ffe_taps < 1) throw ConfigError("PAM-4 FFE needs at least one tap");
    if (training_len < 4 * ffe_taps) throw ConfigError("PAM-4 training must span at least 4x the FFE taps");
    if (!(lms_step > 0.0)) throw ConfigError("PAM-4 LMS step size must be positive");
}

std::vector<double> pam4_encode(const BitSequence& bits) {
    if (bits.size() % 2 != 0) throw FramingError("PAM-4 needs an even number of bits");
    const auto sym = map_symbols(bits, pam4_constellation());
    std::vector<double> out(sym.size());
    for (std::size_t i = 0; i < sym.size(); ++i) out[i] = sym[i].real();
    return out;
}

BitSequence pam4_decode(std::span<const double> symbols) {
    std::vector<cplx> c(symbols.begin(), symbols.end());
    return demap_symbols(c, pam4_constellation());
}

std::vector<double> pam4_training_symbols(int length) {
    if (length == 0) return {};
    return pam4_encode(prbs_generate(15, kTrainingSeed, static_cast<std::size_t>(2 * length)));
}

std::vector<double> pam4_shape(std::span<const double> symbols, const Pam4Config& cfg) {
    const int sps = cfg.samples_per_symbol();
    std::vector<double> up(symbols.size() * static_cast<std::size_t>(sps), 0.0);
    if (cfg.shaping == Shaping::None) {
        for (std::size_t i = 0; i < up.size(); ++i) up[i] = symbols[i / static_cast<std::size_t>(sps)];
        return up;
    }
    // Impulses scaled by sqrt(sps) keep the mean sample power at the symbol energy.
    const double gain = std::sqrt(static_cast<double>(sps));
    for (std::size_t i = 0; i < symbols.size(); ++i) up[i * static_cast<std::size_t>(sps)] = symbols[i] * gain;
    return filter_same(up, rrc_taps(cfg.rolloff, cfg.rrc_span, sps));
}

TxFrame pam4_build_frame(const BitSequence& payload, const Pam4Config& cfg) {
    cfg.validate_transmitter();
    const auto payload_symbols = pam4_encode(payload);
    const auto training = pam4_training_symbols(cfg.training_len);

    std::vector<double> all(training);
    all.insert(all.end(), payload_symbols.begin(), payload_symbols.end());
    auto samples = pam4_shape(all, cfg);

    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol());
    FrameDescriptor fd;
    fd.format = Format::Pam4;
    fd.training_symbols = {std::vector<cplx>(training.begin(), training.end())};
    fd.training_waveform.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(training.size() * sps));
    fd.payload_bits = payload;
    fd.training_start = 0;
    fd.payload_start = training.size() * sps;
    fd.frame_length = samples.size();
    fd.validate();

    TxFrame frame{Waveform::electrical(samples, cfg.dac_rate), std::move(fd), {}};
    if (payload.size() < cfg.min_payload_bits) {
        frame.warnings.push_back("payload of " + std::to_string(payload.size()) +
                                 " bits is below the configured minimum for a reliable BER");
    }
    return frame;
}

}  // namespace imdd
