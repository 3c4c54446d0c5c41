#include "imdd/dmt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imdd/constellation.hpp"
#include "imdd/error.hpp"
#include "imdd/fft.hpp"
#include "imdd/rng.hpp"

namespace imdd {

void DmtConfig::validate() const {
    if (fft_size < 8 || (fft_size & (fft_size - 1)) != 0) throw ConfigError("DMT FFT size must be a power of two");
    if (cp_len < 0 || cp_len >= fft_size) throw ConfigError("DMT cyclic prefix must be shorter than the FFT");
    if (first_carrier < 1 || last_carrier >= fft_size / 2 || first_carrier > last_carrier) {
        throw ConfigError("DMT active carriers must exclude DC and Nyquist");
    }
    if (training_symbols < 1) throw ConfigError("DMT needs at least one training symbol");
    if (payload_symbols < 1) throw ConfigError("DMT payload must hold at least one symbol");
    if (!(dac_rate > 0.0)) throw ConfigError("DMT DAC rate must be positive");
}

cplx dmt_training_value(int symbol, int carrier) {
    const auto h = derive_seed(static_cast<std::uint64_t>(symbol) * 4099U + 17U, static_cast<std::uint64_t>(carrier));
    const double s = 1.0 / std::sqrt(2.0);
    return {(h & 1U) ? s : -s, (h & 2U) ? s : -s};
}

std::vector<cplx> dmt_ifft(std::span<const cplx> carriers, int fft_size) {
    const auto n = static_cast<std::size_t>(fft_size);
    if (carriers.size() != n / 2 - 1) throw FramingError("DMT spectrum must hold fft_size/2-1 carriers");
    std::vector<cplx> spec(n, cplx{});
    for (std::size_t k = 1; k < n / 2; ++k) {
        spec[k] = carriers[k - 1];
        spec[n - k] = std::conj(carriers[k - 1]);
    }
    return fft::inverse(spec);
}

Waveform clip(const Waveform& w, double clip_ratio_db) {
    if (!w.is_electrical()) throw ConfigError("clipping expects an electrical waveform");
    const double limit = w.rms() * std::pow(10.0, clip_ratio_db / 20.0);
    auto x = w.real();
    for (auto& v : x) v = std::clamp(v, -limit, limit);
    return Waveform::electrical(x, w.sample_rate());
}

LoadingTable dmt_probe_table(const DmtConfig& cfg) {
    return LoadingTable::flat(cfg.first_carrier, cfg.active_carriers(), 2);
}

TxFrame dmt_modulate(const BitSequence& bits, const LoadingTable& table, const DmtConfig& cfg) {
    cfg.validate();
    table.validate();
    const int per_symbol = table.total_bits_per_symbol;
    if (per_symbol <= 0) throw FramingError("DMT loading table carries no bits");
    if (bits.size() % static_cast<std::size_t>(per_symbol) != 0) {
        throw FramingError("bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                           std::to_string(per_symbol) + " bits per DMT symbol");
    }
    for (const auto& e : table.entries) {
        if (e.index < cfg.first_carrier || e.index > cfg.last_carrier) {
            throw ConfigError("loading table carrier " + std::to_string(e.index) + " is outside the active band");
        }
    }

    const auto n = static_cast<std::size_t>(cfg.fft_size);
    const auto cp = static_cast<std::size_t>(cfg.cp_len);
    const std::size_t n_payload = bits.size() / static_cast<std::size_t>(per_symbol);
    const std::size_t n_train = static_cast<std::size_t>(cfg.training_symbols);

    // Scale so the time-domain samples have unit mean power before clipping.
    double p2 = 0.0;
    for (const auto& e : table.entries) {
        if (e.bits > 0) p2 += e.power_scale * e.power_scale;
    }
    const double scale = static_cast<double>(n) / std::sqrt(2.0 * p2);

    std::vector<Constellation> constellations;
    for (int b = 1; b <= 8; ++b) constellations.push_back(Constellation::for_bits(b));

    FrameDescriptor fd;
    fd.format = Format::Dmt;
    std::vector<double> samples;
    samples.reserve((n_train + n_payload) * (n + cp));
    auto emit = [&](const std::vector<cplx>& carriers) {
        const auto t = dmt_ifft(carriers, cfg.fft_size);
        for (std::size_t i = n - cp; i < n; ++i) samples.push_back(t[i].real() * scale);
        for (std::size_t i = 0; i < n; ++i) samples.push_back(t[i].real() * scale);
    };

    for (std::size_t s = 0; s < n_train; ++s) {
        std::vector<cplx> carriers(n / 2 - 1, cplx{});
        std::vector<cplx> known(table.entries.size(), cplx{});
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
            const auto& e = table.entries[i];
            if (e.bits == 0) continue;
            known[i] = dmt_training_value(static_cast<int>(s), e.index) * e.power_scale;
            carriers[static_cast<std::size_t>(e.index) - 1] = known[i];
        }
        fd.training_symbols.push_back(std::move(known));
        emit(carriers);
    }
    fd.payload_start = samples.size();

    std::size_t pos = 0;
    for (std::size_t s = 0; s < n_payload; ++s) {
        std::vector<cplx> carriers(n / 2 - 1, cplx{});
        for (const auto& e : table.entries) {
            if (e.bits == 0) continue;
            const auto& c = constellations[static_cast<std::size_t>(e.bits) - 1];
            carriers[static_cast<std::size_t>(e.index) - 1] = c.point(pack_bits(bits.bits, pos, e.bits)) * e.power_scale;
            pos += static_cast<std::size_t>(e.bits);
        }
        emit(carriers);
    }

    auto clipped = clip(Waveform::electrical(samples, cfg.dac_rate), cfg.clip_ratio_db);
    const auto out = clipped.real();
    fd.training_waveform.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(fd.payload_start));
    fd.payload_bits = bits;
    fd.training_start = 0;
    fd.frame_length = out.size();
    fd.validate();
    return TxFrame{std::move(clipped), std::move(fd), {}};
}

}  // namespace imdd
