#include "imdd/rx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "imdd/constellation.hpp"
#include "imdd/error.hpp"
#include "imdd/fft.hpp"
#include "imdd/filters.hpp"

namespace imdd {

namespace {

constexpr double kBlowUp = 1e3;
constexpr std::size_t kSyncBands = 64;

std::vector<cplx> as_complex(std::span<const double> x) { return {x.begin(), x.end()}; }

std::vector<double> real_parts(std::span<const cplx> x) {
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](cplx v) { return v.real(); });
    return out;
}

double pam4_slice(double y) {
    static const double u = 1.0 / std::sqrt(5.0);
    if (y < -2.0 * u) return -3.0 * u;
    if (y < 0.0) return -u;
    if (y < 2.0 * u) return u;
    return 3.0 * u;
}

cplx mma_error(cplx y, double r) {
    const double a = y.real(), b = y.imag();
    return {a * (a * a - r), b * (b * b - r)};
}

cplx nearest_point(cplx y, std::span<const cplx> points) {
    return *std::min_element(points.begin(), points.end(),
                             [y](cplx a, cplx b) { return std::norm(y - a) < std::norm(y - b); });
}

// DMT symbol spectra with the FFT window starting `offset` samples into
// each symbol (0 is the start of the cyclic prefix).
std::vector<std::vector<cplx>> dmt_spectra(std::span<const double> x, const DmtConfig& cfg, std::size_t offset,
                                           std::size_t max_symbols = std::numeric_limits<std::size_t>::max()) {
    const auto n = static_cast<std::size_t>(cfg.fft_size);
    const auto len = static_cast<std::size_t>(cfg.symbol_length());
    std::vector<std::vector<cplx>> out;
    std::vector<cplx> block(n);
    for (std::size_t s = 0; (s + 1) * len <= x.size() && s < max_symbols; ++s) {
        for (std::size_t i = 0; i < n; ++i) block[i] = x[(s * len + offset + i) % x.size()];
        out.push_back(fft::forward(block));
    }
    return out;
}

// Known transmitted values per symbol and table entry: training, then the
// payload mapped from the descriptor's bits.
std::vector<std::vector<cplx>> dmt_known_symbols(const LoadingTable& table, const FrameDescriptor& fd) {
    auto known = fd.training_symbols;
    if (table.total_bits_per_symbol <= 0) return known;
    const auto per = static_cast<std::size_t>(table.total_bits_per_symbol);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < fd.payload_bits.size() / per; ++s) {
        std::vector<cplx> row(table.entries.size(), cplx{});
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
            const auto& e = table.entries[i];
            if (e.bits == 0) continue;
            row[i] = Constellation::for_bits(e.bits).point(pack_bits(fd.payload_bits.bits, pos, e.bits)) * e.power_scale;
            pos += static_cast<std::size_t>(e.bits);
        }
        known.push_back(std::move(row));
    }
    return known;
}

// Per-entry SNR from Y/X ratios over the given symbols; also returns the
// channel estimate (mean ratio).
void ratio_statistics(const std::vector<std::vector<cplx>>& spectra, const std::vector<std::vector<cplx>>& known,
                      std::size_t n_symbols, const LoadingTable& table, std::vector<cplx>& h, std::vector<double>& snr) {
    h.assign(table.entries.size(), cplx{});
    snr.assign(table.entries.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        const auto k = static_cast<std::size_t>(table.entries[i].index);
        std::vector<cplx> r;
        for (std::size_t s = 0; s < n_symbols; ++s) {
            if (std::norm(known[s][i]) > 0.0) r.push_back(spectra[s][k] / known[s][i]);
        }
        if (r.empty()) continue;
        const cplx mean = std::accumulate(r.begin(), r.end(), cplx{}) / static_cast<double>(r.size());
        h[i] = mean;
        if (r.size() < 2) continue;
        double var = 0.0;
        for (const auto& v : r) var += std::norm(v - mean);
        var /= static_cast<double>(r.size() - 1);
        snr[i] = 10.0 * std::log10(std::norm(mean) / std::max(var, 1e-300));
    }
}

std::vector<double> per_active_carrier(const std::vector<double>& per_entry, const LoadingTable& table,
                                       const DmtConfig& cfg) {
    std::vector<double> out(static_cast<std::size_t>(cfg.active_carriers()), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        const int k = table.entries[i].index;
        if (k >= cfg.first_carrier && k <= cfg.last_carrier) out[static_cast<std::size_t>(k - cfg.first_carrier)] = per_entry[i];
    }
    return out;
}

// Window offset inside the cyclic prefix with the smallest training error,
// so channels whose memory fits the prefix are inverted exactly.
std::size_t dmt_window_offset(std::span<const double> x, const LoadingTable& table, const FrameDescriptor& fd,
                              const DmtConfig& cfg) {
    const std::size_t n_train = fd.training_symbols.size();
    std::size_t best = static_cast<std::size_t>(cfg.cp_len / 2);
    if (n_train < 2) return best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w <= static_cast<std::size_t>(cfg.cp_len); ++w) {
        const auto spectra = dmt_spectra(x, cfg, w, n_train);
        std::vector<cplx> h;
        std::vector<double> snr;
        ratio_statistics(spectra, fd.training_symbols, n_train, table, h, snr);
        double cost = 0.0;
        for (double v : snr) {
            if (!std::isnan(v)) cost += std::pow(10.0, -v / 10.0);
        }
        // Ties (noiseless channels) keep the offset nearest the prefix centre.
        const auto centre = static_cast<double>(cfg.cp_len) / 2.0;
        if (cost < best_cost * (1.0 - 1e-9) ||
            (cost <= best_cost * (1.0 + 1e-9) &&
             std::abs(static_cast<double>(w) - centre) < std::abs(static_cast<double>(best) - centre))) {
            best_cost = std::min(cost, best_cost);
            best = w;
        }
    }
    return best;
}

}  // namespace

SyncResult synchronize(std::span<const double> rx, std::span<const double> reference, double min_peak) {
    const std::size_t n = rx.size();
    const std::size_t l = reference.size();
    if (l == 0 || n < l) throw FramingError("capture is shorter than the synchronisation reference");
    std::vector<cplx> ref(n, cplx{});
    std::copy(reference.begin(), reference.end(), ref.begin());
    const auto fr = fft::forward(as_complex(rx));
    const auto ft = fft::forward(ref);
    std::vector<cplx> prod(n);
    for (std::size_t k = 0; k < n; ++k) prod[k] = fr[k] * std::conj(ft[k]);

    // Sub-band correlation magnitudes, combined without phase. A frequency
    // response that changes sign across the band (power fading) cancels the
    // plain correlation peak but leaves every sub-band peak in place.
    const std::size_t half = n / 2;
    const std::size_t width = std::max<std::size_t>(1, half / kSyncBands);
    double ref_total = 0.0;
    for (std::size_t k = 1; k < half; ++k) ref_total += std::norm(ft[k]);
    std::vector<double> metric(n, 0.0);
    double den = 0.0;
    std::vector<cplx> slice(n);
    for (std::size_t lo = 1; lo < half; lo += width) {
        const std::size_t hi = std::min(half, lo + width);
        double e_ref = 0.0, e_rx = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            e_ref += std::norm(ft[k]);
            e_rx += std::norm(fr[k]);
        }
        if (!(e_ref > 1e-9 * ref_total)) continue;
        std::fill(slice.begin(), slice.end(), cplx{});
        std::copy(prod.begin() + static_cast<std::ptrdiff_t>(lo), prod.begin() + static_cast<std::ptrdiff_t>(hi),
                  slice.begin() + static_cast<std::ptrdiff_t>(lo));
        const auto c = fft::inverse(slice);
        for (std::size_t d = 0; d < n; ++d) metric[d] += std::norm(c[d]);
        // Parseval: band energies are sum |X|^2 / n; the rx window holds l of n samples.
        den += (e_ref / static_cast<double>(n)) * (e_rx / static_cast<double>(n)) * static_cast<double>(l) /
               static_cast<double>(n);
    }
    if (!(den > 0.0)) {
        throw SyncError("synchronisation failed: no signal energy", 0.0);
    }
    const auto coarse = static_cast<std::size_t>(std::max_element(metric.begin(), metric.end()) - metric.begin());
    const double peak = std::sqrt(metric[coarse] / den);
    if (!(peak >= min_peak)) {
        throw SyncError("synchronisation failed: correlation peak " + std::to_string(peak) + " is below " +
                            std::to_string(min_peak),
                        peak);
    }

    // Sample-accurate refinement with the full-band correlation where the
    // channel keeps its sign over the band.
    const auto corr = fft::inverse(prod);
    double ref_energy = 0.0;
    for (double v : reference) ref_energy += v * v;
    std::vector<double> cum(2 * n + 1, 0.0);
    for (std::size_t i = 0; i < 2 * n; ++i) cum[i + 1] = cum[i] + rx[i % n] * rx[i % n];
    const auto reach = static_cast<std::ptrdiff_t>(2 * kSyncBands);
    std::size_t fine = coarse;
    double fine_rho = 0.0;
    for (std::ptrdiff_t off = -reach; off <= reach; ++off) {
        const auto d = static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(coarse) + off) % static_cast<std::ptrdiff_t>(n) +
                                                 static_cast<std::ptrdiff_t>(n)) %
                                                static_cast<std::ptrdiff_t>(n));
        const double e = cum[d + l] - cum[d];
        if (!(e > 0.0)) continue;
        const double rho = std::abs(corr[d].real()) / std::sqrt(e * ref_energy);
        if (rho > fine_rho) {
            fine_rho = rho;
            fine = d;
        }
    }
    return {fine_rho >= 0.5 * peak ? fine : coarse, peak};
}

std::vector<double> align_frame(const Waveform& rx, const FrameDescriptor& fd, double tx_rate) {
    if (!rx.is_electrical()) throw ConfigError("receiver expects an electrical waveform");
    auto x = rx.real();
    if (std::abs(rx.sample_rate() - tx_rate) > 1e-6 * tx_rate) {
        const double exact = static_cast<double>(x.size()) * tx_rate / rx.sample_rate();
        x = real_parts(spectral_resample(as_complex(x), static_cast<std::size_t>(std::llround(exact))));
    }
    if (x.size() < fd.frame_length) throw FramingError("capture holds less than one frame");
    const auto sync = synchronize(x, fd.training_waveform);
    const std::size_t n = x.size();
    const std::size_t start = (sync.offset + n - fd.training_start % n) % n;
    std::vector<double> out(fd.frame_length);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[(start + i) % n];
    return out;
}

FfeResult ffe_lms(std::span<const double> rx_t2, std::span<const double> training, std::size_t n_symbols,
                  int n_taps, double step) {
    if (n_taps < 1) throw ConfigError("FFE needs at least one tap");
    if (!(step > 0.0)) throw ConfigError("LMS step size must be positive");
    if (rx_t2.size() < 2 * n_symbols) throw FramingError("FFE input is shorter than 2 samples per symbol");
    const auto taps = static_cast<std::size_t>(n_taps);
    const auto centre = static_cast<std::ptrdiff_t>(taps / 2);
    const auto n = static_cast<std::ptrdiff_t>(rx_t2.size());
    const std::size_t n_train = std::min(training.size(), n_symbols);
    const std::size_t quarter = n_train / 4;

    FfeResult res;
    res.taps.assign(taps, 0.0);
    res.taps[taps / 2] = 1.0;
    res.symbols.resize(n_symbols);
    std::vector<double> x(taps);
    double head = 0.0, tail = 0.0;
    for (std::size_t k = 0; k < n_symbols; ++k) {
        const auto base = static_cast<std::ptrdiff_t>(2 * k) - centre;
        double y = 0.0;
        for (std::size_t i = 0; i < taps; ++i) {
            x[i] = rx_t2[static_cast<std::size_t>(((base + static_cast<std::ptrdiff_t>(i)) % n + n) % n)];
            y += res.taps[i] * x[i];
        }
        if (!std::isfinite(y) || std::abs(y) > kBlowUp) {
            throw EqualizerDivergence("FFE diverged at symbol " + std::to_string(k) + "; reduce the LMS step size");
        }
        res.symbols[k] = y;
        const bool trained = k < n_train;
        const double e = (trained ? training[k] : pam4_slice(y)) - y;
        if (trained && k < quarter) head += e * e;
        if (trained && k >= n_train - quarter) tail += e * e;
        for (std::size_t i = 0; i < taps; ++i) res.taps[i] += step * e * x[i];
    }
    if (quarter > 0) {
        res.mse_head = head / static_cast<double>(quarter);
        res.mse_tail = tail / static_cast<double>(quarter);
        if (res.mse_tail > 2.0 * res.mse_head + 1e-12) {
            throw EqualizerDivergence("FFE training error grew from " + std::to_string(res.mse_head) + " to " +
                                      std::to_string(res.mse_tail) + "; reduce the LMS step size");
        }
    }
    return res;
}

BitSequence pam4_receive(const Waveform& rx, const FrameDescriptor& fd, const Pam4Config& cfg) {
    cfg.validate();
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol());
    auto x = align_frame(rx, fd, cfg.dac_rate);
    if (cfg.shaping == Shaping::Rrc) {
        const double rs = cfg.symbol_rate, beta = cfg.rolloff;
        x = real_parts(apply_response(as_complex(x), cfg.dac_rate,
                                      [rs, beta](double f) { return cplx(rrc_amplitude(f, rs, beta)); }));
    }
    const std::size_t n_symbols = fd.frame_length / sps;
    const auto t2 = real_parts(spectral_resample(as_complex(x), 2 * n_symbols));

    // Gain and sign from the training symbols, so the centre-spike start is close.
    const auto& training_c = fd.training_symbols.at(0);
    std::vector<double> training(training_c.size());
    for (std::size_t i = 0; i < training.size(); ++i) training[i] = training_c[i].real();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < training.size(); ++k) {
        num += t2[2 * k] * training[k];
        den += training[k] * training[k];
    }
    const double gain = den > 0.0 ? num / den : 0.0;
    if (!(std::abs(gain) > 1e-12)) throw MeasurementError("PAM-4 receiver sees no signal");
    std::vector<double> scaled(t2.size());
    for (std::size_t i = 0; i < t2.size(); ++i) scaled[i] = t2[i] / gain;

    const auto eq = ffe_lms(scaled, training, n_symbols, cfg.ffe_taps, cfg.lms_step);
    const std::size_t n_payload = fd.payload_bits.size() / 2;
    const auto first = static_cast<std::ptrdiff_t>(training.size());
    return pam4_decode(std::span<const double>(eq.symbols).subspan(static_cast<std::size_t>(first), n_payload));
}

DmtRxResult dmt_receive(const Waveform& rx, const LoadingTable& table, const FrameDescriptor& fd,
                        const DmtConfig& cfg) {
    cfg.validate();
    table.validate();
    const auto x = align_frame(rx, fd, cfg.dac_rate);
    const auto spectra = dmt_spectra(x, cfg, dmt_window_offset(x, table, fd, cfg));
    const std::size_t n_train = fd.training_symbols.size();
    if (n_train == 0 || spectra.size() < n_train) throw FramingError("DMT frame lacks its training symbols");

    std::vector<cplx> h;
    std::vector<double> snr;
    ratio_statistics(spectra, fd.training_symbols, n_train, table, h, snr);

    DmtRxResult res;
    res.snr_db = per_active_carrier(snr, table, cfg);
    const std::size_t n_payload =
        table.total_bits_per_symbol > 0 ? fd.payload_bits.size() / static_cast<std::size_t>(table.total_bits_per_symbol) : 0;
    if (spectra.size() < n_train + n_payload) throw FramingError("DMT frame is shorter than its payload");
    std::vector<Constellation> constellations;
    for (int b = 1; b <= 8; ++b) constellations.push_back(Constellation::for_bits(b));
    res.bits.bits.reserve(fd.payload_bits.size());
    for (std::size_t s = 0; s < n_payload; ++s) {
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
            const auto& e = table.entries[i];
            if (e.bits == 0) continue;
            const cplx y = spectra[n_train + s][static_cast<std::size_t>(e.index)];
            const cplx z = std::abs(h[i]) > 0.0 ? y / (h[i] * e.power_scale) : cplx{};
            unpack_bits(constellations[static_cast<std::size_t>(e.bits) - 1].nearest_label(z), e.bits, res.bits.bits);
        }
    }
    return res;
}

std::vector<double> estimate_dmt_snr(const Waveform& rx, const LoadingTable& table, const FrameDescriptor& fd,
                                     const DmtConfig& cfg) {
    cfg.validate();
    table.validate();
    const auto x = align_frame(rx, fd, cfg.dac_rate);
    const auto spectra = dmt_spectra(x, cfg, dmt_window_offset(x, table, fd, cfg));
    const auto known = dmt_known_symbols(table, fd);
    const std::size_t n = std::min(spectra.size(), known.size());
    if (n < 8) throw MeasurementError("SNR estimation needs at least 8 known DMT symbols");
    std::vector<cplx> h;
    std::vector<double> snr;
    ratio_statistics(spectra, known, n, table, h, snr);
    return per_active_carrier(snr, table, cfg);
}

namespace {

// Squared distance of each |y| to the nearest ring of the constellation.
std::vector<double> ring_errors(std::span<const cplx> y, std::span<const cplx> points) {
    std::vector<double> rings;
    for (const auto& p : points) rings.push_back(std::abs(p));
    std::sort(rings.begin(), rings.end());
    rings.erase(std::unique(rings.begin(), rings.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                rings.end());
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& v : y) {
        const double r = std::abs(v);
        double best = std::numeric_limits<double>::infinity();
        for (double ring : rings) best = std::min(best, (r - ring) * (r - ring));
        out.push_back(best);
    }
    return out;
}

std::pair<double, double> mean_and_variance(const std::vector<double>& v) {
    double m = 0.0, q = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) q += (x - m) * (x - m);
    return {m, v.size() > 1 ? q / static_cast<double>(v.size() - 1) : 0.0};
}

}  // namespace

double modulus_error(std::span<const cplx> y, std::span<const cplx> points) {
    if (y.empty() || points.empty()) return 0.0;
    return mean_and_variance(ring_errors(y, points)).first;
}

MmaResult ffe_mma(std::span<const cplx> rx_t2, std::size_t n_symbols, int n_taps, const MmaSchedule& schedule) {
    if (n_taps < 1) throw ConfigError("FFE needs at least one tap");
    if (!(schedule.mma_step > 0.0)) throw ConfigError("MMA step size must be positive");
    if (schedule.payload_points.empty() || (schedule.blind_symbols > 0 && schedule.blind_points.empty())) {
        throw ConfigError("MMA schedule needs its constellations");
    }
    if (rx_t2.size() < 2 * n_symbols) throw FramingError("FFE input is shorter than 2 samples per symbol");
    const auto taps = static_cast<std::size_t>(n_taps);
    const auto centre = static_cast<std::ptrdiff_t>(taps / 2);
    const auto n = static_cast<std::ptrdiff_t>(rx_t2.size());
    auto radius = [](std::span<const cplx> pts) {
        double m2 = 0.0, m4 = 0.0;
        for (const auto& p : pts) {
            m2 += p.real() * p.real();
            m4 += std::pow(p.real(), 4);
        }
        return m4 / m2;
    };
    const double r_blind = schedule.blind_symbols > 0 ? radius(schedule.blind_points) : 0.0;
    const double r_payload = radius(schedule.payload_points);
    const bool use_dd = schedule.dd_step > 0.0;

    MmaResult res;
    res.taps.assign(taps, cplx{});
    res.taps[taps / 2] = 1.0;
    res.symbols.resize(n_symbols);
    std::vector<cplx> x(taps);
    for (std::size_t k = 0; k < n_symbols; ++k) {
        const auto base = static_cast<std::ptrdiff_t>(2 * k) - centre;
        cplx y{};
        for (std::size_t i = 0; i < taps; ++i) {
            x[i] = rx_t2[static_cast<std::size_t>(((base + static_cast<std::ptrdiff_t>(i)) % n + n) % n)];
            y += res.taps[i] * x[i];
        }
        if (!std::isfinite(y.real()) || !std::isfinite(y.imag()) || std::abs(y) > kBlowUp) {
            throw EqualizerDivergence("MMA equalizer diverged at symbol " + std::to_string(k) +
                                      "; reduce the step size");
        }
        res.symbols[k] = y;
        cplx e;
        double mu = schedule.mma_step;
        if (k < schedule.blind_symbols) {
            e = mma_error(y, r_blind);
        } else if (use_dd) {
            e = y - nearest_point(y, schedule.payload_points);
            mu = schedule.dd_step;
        } else {
            e = mma_error(y, r_payload);
        }
        for (std::size_t i = 0; i < taps; ++i) res.taps[i] -= mu * e * std::conj(x[i]);
    }

    const bool blind = schedule.blind_symbols > 0;
    const std::size_t span_len = blind ? std::min(schedule.blind_symbols, n_symbols) : n_symbols;
    const auto& points = blind ? schedule.blind_points : schedule.payload_points;
    const std::size_t m = span_len / 10;
    if (m > 0) {
        const std::span<const cplx> s(res.symbols.data(), span_len);
        const auto [head, head_var] = mean_and_variance(ring_errors(s.first(m), points));
        const auto [tail, tail_var] = mean_and_variance(ring_errors(s.last(m), points));
        res.head_error = head;
        res.tail_error = tail;
        double d_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i)
            for (std::size_t j = i + 1; j < points.size(); ++j) d_min = std::min(d_min, std::abs(points[i] - points[j]));
        // Not converged: the error grew by more than three standard errors
        // and the radial spread left exceeds a quarter of the point spacing.
        const double spread = 3.0 * std::sqrt((head_var + tail_var) / static_cast<double>(m));
        res.converged = tail <= head + spread + 1e-12 || tail <= d_min * d_min / 16.0;
    }
    return res;
}

bool CapRxResult::all_converged() const {
    return std::all_of(bands.begin(), bands.end(), [](const CapBandReport& b) { return b.converged; });
}

std::vector<std::vector<cplx>> cap_equalized_bands(const Waveform& rx, const CapConfig& cfg, const FrameDescriptor& fd,
                                                   std::vector<CapBandReport>* reports) {
    cfg.validate();
    const int sps = cfg.samples_per_symbol();
    if (sps % 2 != 0) throw ConfigError("CAP receiver needs an even number of samples per symbol");
    const auto half = static_cast<std::size_t>(sps / 2);
    const auto x = as_complex(align_frame(rx, fd, cfg.dac_rate));
    const std::size_t n_symbols = fd.frame_length / static_cast<std::size_t>(sps);
    const auto table = cfg.effective_loading();
    const DiffQam qpsk(4);

    std::vector<std::vector<cplx>> out;
    for (const auto& e : table.entries) {
        if (e.bits == 0) continue;
        const auto mf = cap_matched_filter(x, e.index, cfg);
        const auto n = static_cast<std::ptrdiff_t>(mf.size());
        // Blind timing: the sampling phase with the most energy at the
        // symbol instants, within half a symbol of the frame grid.
        std::ptrdiff_t tau = 0;
        double best = -1.0;
        for (std::ptrdiff_t t = -sps / 2; t < sps / 2; ++t) {
            double energy = 0.0;
            for (std::size_t k = 0; k < n_symbols; ++k) {
                energy += std::norm(mf[static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(k) * sps + t) % n + n) % n)]);
            }
            if (energy > best) {
                best = energy;
                tau = t;
            }
        }
        std::vector<cplx> t2(2 * n_symbols);
        double p = 0.0;
        cplx fourth{};
        for (std::size_t m = 0; m < t2.size(); ++m) {
            t2[m] = mf[static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(m * half) + tau) % n + n) % n)];
            if (m % 2 == 0) {
                p += std::norm(t2[m]);
                if (m / 2 < static_cast<std::size_t>(cfg.training_len)) fourth += std::pow(t2[m], 4);
            }
        }
        p /= static_cast<double>(n_symbols);
        if (!(p > 0.0)) throw MeasurementError("CAP band " + std::to_string(e.index) + " carries no power");
        // Blind phase from the fourth power of the QPSK training, modulo the
        // quarter turns the differential code absorbs.
        const cplx derotate = std::polar(1.0 / std::sqrt(p), -(std::arg(fourth) - M_PI) / 4.0);
        for (auto& v : t2) v *= derotate;

        MmaSchedule schedule;
        schedule.blind_symbols = static_cast<std::size_t>(cfg.training_len);
        schedule.blind_points = qpsk.points();
        schedule.payload_points = DiffQam(1 << e.bits).points();
        schedule.mma_step = cfg.mma_step;
        schedule.dd_step = cfg.dd_step;
        auto eq = ffe_mma(t2, n_symbols, cfg.ffe_taps, schedule);
        if (reports) reports->push_back({e.index, eq.converged, eq.head_error, eq.tail_error});
        out.push_back(std::move(eq.symbols));
    }
    return out;
}

CapRxResult cap_receive(const Waveform& rx, const CapConfig& cfg, const FrameDescriptor& fd) {
    CapRxResult res;
    const auto streams = cap_equalized_bands(rx, cfg, fd, &res.bands);
    const auto table = cfg.effective_loading();
    const auto n_train = static_cast<std::size_t>(cfg.training_len);
    const std::size_t n_payload =
        table.total_bits_per_symbol > 0 ? fd.payload_bits.size() / static_cast<std::size_t>(table.total_bits_per_symbol) : 0;
    std::size_t band = 0;
    for (const auto& e : table.entries) {
        if (e.bits == 0) continue;
        const auto& y = streams[band++];
        if (y.size() < n_train + 1 + n_payload) throw FramingError("CAP frame is shorter than its payload");
        // The reference symbol only anchors the differential chain.
        const auto decoded = DiffQam(1 << e.bits).decode(std::span<const cplx>(y).subspan(n_train, n_payload + 1));
        res.bits.bits.insert(res.bits.bits.end(), decoded.bits.begin() + e.bits, decoded.bits.end());
    }
    return res;
}

std::vector<double> estimate_cap_snr(const Waveform& rx, const CapConfig& cfg, const FrameDescriptor& fd) {
    const auto streams = cap_equalized_bands(rx, cfg, fd);
    const auto table = cfg.effective_loading();
    const auto n_train = static_cast<std::size_t>(cfg.training_len);
    const std::size_t n_payload =
        table.total_bits_per_symbol > 0 ? fd.payload_bits.size() / static_cast<std::size_t>(table.total_bits_per_symbol) : 0;
    std::vector<double> snr(static_cast<std::size_t>(cfg.n_bands), std::numeric_limits<double>::quiet_NaN());
    std::size_t band = 0, pos = 0;
    for (const auto& e : table.entries) {
        if (e.bits == 0) continue;
        const auto& y = streams[band++];
        BitSequence band_bits;
        band_bits.bits.assign(static_cast<std::size_t>(e.bits), 0);
        const std::size_t n_bits = n_payload * static_cast<std::size_t>(e.bits);
        band_bits.bits.insert(band_bits.bits.end(), fd.payload_bits.bits.begin() + static_cast<std::ptrdiff_t>(pos),
                              fd.payload_bits.bits.begin() + static_cast<std::ptrdiff_t>(pos + n_bits));
        pos += n_bits;
        auto known = cap_training_symbols(e.index, cfg.training_len);
        const auto payload = DiffQam(1 << e.bits).encode(band_bits);
        known.insert(known.end(), payload.begin(), payload.end());
        const std::size_t n = std::min(known.size(), y.size());
        if (n < 8) throw MeasurementError("SNR estimation needs at least 8 known CAP symbols");
        // Skip the first training quarter while the blind equalizer settles.
        const std::size_t first = std::min(n_train / 4, n - 8);
        cplx num{};
        double den = 0.0;
        for (std::size_t k = first; k < n; ++k) {
            num += y[k] * std::conj(known[k]);
            den += std::norm(known[k]);
        }
        const cplx g = num / den;
        double noise = 0.0;
        for (std::size_t k = first; k < n; ++k) noise += std::norm(y[k] - g * known[k]);
        snr[static_cast<std::size_t>(e.index)] = 10.0 * std::log10(std::norm(g) * den / std::max(noise, 1e-300));
    }
    return snr;
}

}  // namespace imdd
