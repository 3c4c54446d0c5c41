#include "imdd/cap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include "imdd/constellation.hpp"
#include "imdd/error.hpp"
#include "imdd/fft.hpp"
#include "imdd/filters.hpp"
#include "imdd/rng.hpp"

namespace imdd {

namespace {

struct QuadrantLayout {
    std::vector<std::pair<int, int>> grid;  // (i, j) -> point (2i+1, 2j+1), position = label
};

// First-quadrant layouts. Square orders use Gray per axis; the 32-point cross
// uses the 3x3-minus-corner quadrant with the best achievable labelling (one
// of its ten neighbour pairs differs in two bits).
QuadrantLayout layout_for(int order) {
    switch (order) {
        case 4: return {{{0, 0}}};
        case 8: return {{{0, 0}, {1, 0}}};
        case 16: return {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
        case 32: {
            QuadrantLayout l;
            l.grid.resize(8);
            const std::pair<int, int> cells[8] = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1}};
            const int labels[8] = {0, 1, 3, 2, 5, 7, 6, 4};
            for (int i = 0; i < 8; ++i) l.grid[static_cast<std::size_t>(labels[i])] = cells[i];
            return l;
        }
        case 64: {
            QuadrantLayout l;
            l.grid.resize(16);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    l.grid[(gray_encode(static_cast<unsigned>(i)) << 2) | gray_encode(static_cast<unsigned>(j))] = {i, j};
            return l;
        }
        default: throw ConfigError("unsupported differential QAM order " + std::to_string(order));
    }
}

cplx rotate(cplx z, int quarter_turns) {
    switch (((quarter_turns % 4) + 4) % 4) {
        case 1: return {-z.imag(), z.real()};
        case 2: return -z;
        case 3: return {z.imag(), -z.real()};
        default: return z;
    }
}

}  // namespace

DiffQam::DiffQam(int order) : order_(order) {
    const auto layout = layout_for(order);
    bits_ = 2;
    while ((1 << bits_) < order) ++bits_;
    double energy = 0.0;
    for (auto [i, j] : layout.grid) {
        const cplx p{2.0 * i + 1.0, 2.0 * j + 1.0};
        base_.push_back(p);
        energy += std::norm(p);
    }
    const double scale = 1.0 / std::sqrt(energy / static_cast<double>(base_.size()));
    for (auto& p : base_) p *= scale;
    for (int q = 0; q < 4; ++q)
        for (const auto& p : base_) points_.push_back(rotate(p, q));
}

cplx DiffQam::nearest(cplx z) const {
    return *std::min_element(points_.begin(), points_.end(),
                             [z](cplx a, cplx b) { return std::norm(z - a) < std::norm(z - b); });
}

std::vector<cplx> DiffQam::encode(const BitSequence& bits) const {
    const auto b = static_cast<std::size_t>(bits_);
    if (bits.size() % b != 0) throw FramingError("bit count is not a multiple of the differential QAM symbol size");
    std::vector<cplx> out;
    out.reserve(bits.size() / b);
    int quadrant = 0;
    for (std::size_t i = 0; i < bits.size(); i += b) {
        const unsigned step = gray_decode(pack_bits(bits.bits, i, 2));
        const unsigned label = pack_bits(bits.bits, i + 2, bits_ - 2);
        quadrant = (quadrant + static_cast<int>(step)) % 4;
        out.push_back(rotate(base_[label], quadrant));
    }
    return out;
}

BitSequence DiffQam::decode(std::span<const cplx> symbols) const {
    BitSequence out;
    out.bits.reserve(symbols.size() * static_cast<std::size_t>(bits_));
    const std::size_t per_quadrant = base_.size();
    int previous = 0;
    for (const auto& z : symbols) {
        std::size_t best = 0;
        double best_d = std::norm(z - points_[0]);
        for (std::size_t k = 1; k < points_.size(); ++k) {
            const double d = std::norm(z - points_[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        const int quadrant = static_cast<int>(best / per_quadrant);
        const auto label = static_cast<unsigned>(best % per_quadrant);
        const auto step = static_cast<unsigned>(((quadrant - previous) % 4 + 4) % 4);
        previous = quadrant;
        unpack_bits(gray_encode(step), 2, out.bits);
        unpack_bits(label, bits_ - 2, out.bits);
    }
    return out;
}

double DiffQam::mma_radius() const {
    double m2 = 0.0, m4 = 0.0;
    for (const auto& p : points_) {
        const double r2 = p.real() * p.real();
        m2 += r2;
        m4 += r2 * r2;
    }
    return m4 / m2;
}

std::vector<cplx> diff_qam_encode(const BitSequence& bits, int order) { return DiffQam(order).encode(bits); }

BitSequence diff_qam_decode(std::span<const cplx> symbols, int order) { return DiffQam(order).decode(symbols); }

int CapConfig::samples_per_symbol() const {
    const double ratio = dac_rate / band_symbol_rate;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 || rounded < 2) {
        throw ConfigError("CAP DAC rate must be an integer multiple of the band symbol rate");
    }
    return static_cast<int>(rounded);
}

double CapConfig::band_center(int band) const {
    if (band < 0 || band >= n_bands) throw ConfigError("CAP band index out of range");
    if (!band_centers.empty()) return band_centers[static_cast<std::size_t>(band)];
    return (band + 0.5) * band_spacing();
}

LoadingTable default_cap_loading(int n_bands, int total_bits) {
    if (n_bands < 1) throw ConfigError("CAP needs at least one band");
    const int base = total_bits / n_bands;
    const int extra = total_bits % n_bands;
    if (base < 2 || base + (extra > 0 ? 1 : 0) > 6) {
        throw ConfigError("cannot spread " + std::to_string(total_bits) + " bits over " + std::to_string(n_bands) +
                          " CAP bands with 2..6 bits each");
    }
    LoadingTable t;
    for (int k = 0; k < n_bands; ++k) t.entries.push_back({k, base + (k < extra ? 1 : 0), 1.0});
    t.total_bits_per_symbol = total_bits;
    return t;
}

LoadingTable CapConfig::effective_loading() const {
    return loading.entries.empty() ? default_cap_loading(n_bands, target_bits_per_symbol) : loading;
}

void CapConfig::validate() const {
    const int sps = samples_per_symbol();
    if (n_bands < 1) throw ConfigError("CAP needs at least one band");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("CAP rolloff must lie in (0, 1]");
    if (filter_span < 20) throw ConfigError("CAP filter span must cover at least 20 symbols");
    if (!band_centers.empty() && static_cast<int>(band_centers.size()) != n_bands) {
        throw ConfigError("CAP band_centers must list one centre per band");
    }
    if (training_len < 1 || payload_symbols < 1) throw ConfigError("CAP frame needs training and payload symbols");
    if (ffe_taps < 2) throw ConfigError("CAP FFE needs at least two taps");
    const double half_bw = 0.5 * band_symbol_rate * (1.0 + rolloff);
    for (int k = 0; k < n_bands; ++k) {
        const double fc = band_center(k);
        if (fc - half_bw < -1e-6 * band_symbol_rate || fc + half_bw > 0.5 * dac_rate) {
            throw ConfigError("CAP band " + std::to_string(k) + " does not fit between DC and Nyquist");
        }
        if (k > 0 && fc - band_center(k - 1) < 2.0 * half_bw * (1.0 - 1e-9)) {
            throw ConfigError("CAP bands overlap for the configured rolloff");
        }
    }
    (void)sps;
    const auto table = effective_loading();
    table.validate();
    if (static_cast<int>(table.entries.size()) != n_bands) throw ConfigError("CAP loading must list every band");
    for (const auto& e : table.entries) {
        if (e.bits == 1 || e.bits > 6) throw ConfigError("CAP bands carry 0 or 2..6 bits per symbol");
    }
}

namespace {

double checked_center(int band, const CapConfig& cfg) {
    const double fc = cfg.band_center(band);
    const double half_bw = 0.5 * cfg.band_symbol_rate * (1.0 + cfg.rolloff);
    if (fc - half_bw < -1e-6 * cfg.band_symbol_rate || fc + half_bw > 0.5 * cfg.dac_rate) {
        throw ConfigError("CAP band " + std::to_string(band) + " is too close to DC or Nyquist");
    }
    return fc;
}

// Bin responses of one band over an n-point frame.
std::pair<std::vector<cplx>, std::vector<cplx>> band_bins(int band, std::size_t n, const CapConfig& cfg) {
    const auto freqs = fft::bin_frequencies(n, cfg.dac_rate);
    std::vector<cplx> ri(n), rq(n);
    for (std::size_t k = 0; k < n; ++k) std::tie(ri[k], rq[k]) = cap_band_response(band, freqs[k], cfg);
    return {ri, rq};
}

}  // namespace

std::pair<cplx, cplx> cap_band_response(int band, double f, const CapConfig& cfg) {
    const double fc = checked_center(band, cfg);
    const double g = std::sqrt(static_cast<double>(cfg.samples_per_symbol()) / 2.0);
    const double up = rrc_amplitude(f - fc, cfg.band_symbol_rate, cfg.rolloff);
    const double down = rrc_amplitude(f + fc, cfg.band_symbol_rate, cfg.rolloff);
    return {g * (up + down), cplx(0.0, -g) * (up - down)};
}

std::vector<cplx> cap_matched_filter(std::span<const cplx> x, int band, const CapConfig& cfg) {
    auto spec = fft::forward(x);
    const auto [ri, rq] = band_bins(band, spec.size(), cfg);
    std::vector<cplx> si(spec.size()), sq(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        si[k] = spec[k] * ri[k];
        sq[k] = spec[k] * rq[k];
    }
    const auto yi = fft::inverse(si);
    const auto yq = fft::inverse(sq);
    std::vector<cplx> out(spec.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {yi[k].real(), yq[k].real()};
    return out;
}

std::pair<std::vector<double>, std::vector<double>> cap_filter_pair(int band, const CapConfig& cfg) {
    const int sps = cfg.samples_per_symbol();
    const double fc = checked_center(band, cfg);
    const auto g = rrc_taps(cfg.rolloff, cfg.filter_span, sps);
    const auto centre = static_cast<double>(g.size() / 2);
    std::vector<double> fi(g.size()), fq(g.size());
    double energy = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = (static_cast<double>(i) - centre) / cfg.dac_rate;
        const double phase = 2.0 * std::numbers::pi * fc * t;
        fi[i] = g[i] * std::cos(phase);
        fq[i] = g[i] * std::sin(phase);
        energy += fi[i] * fi[i] + fq[i] * fq[i];
    }
    const double norm = std::sqrt(2.0 / energy);
    for (auto& v : fi) v *= norm;
    for (auto& v : fq) v *= norm;
    return {fi, fq};
}

std::vector<cplx> cap_training_symbols(int band, int length) {
    std::vector<cplx> out(static_cast<std::size_t>(length));
    const double s = 1.0 / std::sqrt(2.0);
    GaussianSource src(derive_seed(0xCA9ULL, static_cast<std::uint64_t>(band)));
    for (auto& v : out) {
        const auto r = src.raw();
        v = {(r >> 63) ? s : -s, ((r >> 62) & 1U) ? s : -s};
    }
    return out;
}

TxFrame cap_modulate(const BitSequence& bits, const CapConfig& cfg) {
    cfg.validate();
    const auto table = cfg.effective_loading();
    const int per_period = table.total_bits_per_symbol;
    if (per_period <= 0) throw FramingError("CAP loading carries no bits");
    if (bits.size() % static_cast<std::size_t>(per_period) != 0) {
        throw FramingError("bit count " + std::to_string(bits.size()) + " does not match the CAP loading (" +
                           std::to_string(per_period) + " bits per symbol period)");
    }
    const std::size_t n_payload = bits.size() / static_cast<std::size_t>(per_period);
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol());
    const auto n_train = static_cast<std::size_t>(cfg.training_len);
    const std::size_t n_symbols = n_train + 1 + n_payload;
    const std::size_t n_samples = n_symbols * sps;

    FrameDescriptor fd;
    fd.format = Format::Cap;
    fd.training_symbols.resize(static_cast<std::size_t>(cfg.n_bands));
    std::vector<cplx> spectrum(n_samples, cplx{});
    std::size_t pos = 0;
    for (const auto& e : table.entries) {
        if (e.bits == 0) continue;
        const std::size_t n_bits = n_payload * static_cast<std::size_t>(e.bits);
        BitSequence band_bits;
        band_bits.bits.assign(static_cast<std::size_t>(e.bits), 0);  // reference symbol
        band_bits.bits.insert(band_bits.bits.end(), bits.bits.begin() + static_cast<std::ptrdiff_t>(pos),
                              bits.bits.begin() + static_cast<std::ptrdiff_t>(pos + n_bits));
        pos += n_bits;

        auto symbols = cap_training_symbols(e.index, cfg.training_len);
        fd.training_symbols[static_cast<std::size_t>(e.index)] = symbols;
        const auto payload = DiffQam(1 << e.bits).encode(band_bits);
        symbols.insert(symbols.end(), payload.begin(), payload.end());

        std::vector<cplx> up_i(n_samples, cplx{}), up_q(n_samples, cplx{});
        for (std::size_t s = 0; s < symbols.size(); ++s) {
            up_i[s * sps] = symbols[s].real();
            up_q[s * sps] = symbols[s].imag();
        }
        const auto ui = fft::forward(up_i);
        const auto uq = fft::forward(up_q);
        const auto [ri, rq] = band_bins(e.index, n_samples, cfg);
        for (std::size_t k = 0; k < n_samples; ++k) spectrum[k] += e.power_scale * (ui[k] * ri[k] - uq[k] * rq[k]);
    }
    const auto shaped = fft::inverse(spectrum);
    std::vector<double> total(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) total[i] = shaped[i].real();

    fd.training_waveform.assign(total.begin(), total.begin() + static_cast<std::ptrdiff_t>(n_train * sps));
    fd.payload_bits = bits;
    fd.training_start = 0;
    fd.payload_start = n_train * sps;
    fd.frame_length = n_samples;
    fd.validate();
    return TxFrame{Waveform::electrical(total, cfg.dac_rate), std::move(fd), {}};
}

}  // namespace imdd
