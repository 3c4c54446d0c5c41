#include "imdd/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "imdd/error.hpp"
#include "imdd/prbs.hpp"
#include "imdd/rng.hpp"
#include "imdd/rx.hpp"
#include "imdd/spectrum.hpp"

namespace imdd {

namespace {

BitSequence payload_bits(std::size_t n, std::uint64_t seed) {
    // Low 31 bits of the register must not all be zero.
    const std::uint64_t reg = (splitmix64(seed) & 0x7fffffffULL) | 1ULL;
    return prbs_generate(31, reg, n);
}

double drive_swing(const Scenario& s) {
    switch (s.format) {
        case Format::Pam4: return s.pam4.drive_swing;
        case Format::Dmt: return s.dmt.drive_swing;
        case Format::Cap: return s.cap.drive_swing;
    }
    return 0.0;
}

Waveform transmit(const Scenario& s, const Waveform& tx, double osnr_db, std::uint64_t seed) {
    if (s.loopback) return tx;
    LinkConfig link = s.link;
    link.osnr_db = osnr_db;
    return simulate_link(tx, link, drive_swing(s), seed).received;
}

LoadingOptions loading_options(const Scenario& s) {
    LoadingOptions opts;
    if (s.format == Format::Dmt) {
        opts.first_index = s.dmt.first_carrier;
    } else {
        opts.allowed_bits = {2, 3, 4, 5, 6};
        opts.first_index = 0;
    }
    return opts;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

double BerPoint::ber() const {
    if (!valid || bits == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(errors) / static_cast<double>(bits);
}

void Scenario::validate() const {
    if (name.empty()) throw ConfigError("scenario needs a name");
    if (osnr_db.empty()) throw ConfigError("scenario " + name + " has no OSNR points");
    for (std::size_t i = 1; i < osnr_db.size(); ++i) {
        if (!(osnr_db[i] > osnr_db[i - 1])) throw ConfigError("scenario " + name + ": OSNR points must ascend");
    }
    if (min_errors == 0 || max_bits == 0) throw ConfigError("scenario " + name + ": stopping rule needs positive limits");
    link.validate();
    switch (format) {
        case Format::Pam4: pam4.validate(); break;
        case Format::Dmt: dmt.validate(); break;
        case Format::Cap: cap.validate(); break;
    }
}

double gross_bit_rate(const Scenario& s) {
    switch (s.format) {
        case Format::Pam4: return 2.0 * s.pam4.symbol_rate;
        case Format::Dmt: return s.dmt.target_bits_per_symbol * s.dmt.dac_rate / s.dmt.symbol_length();
        case Format::Cap: return s.cap.target_bits_per_symbol * s.cap.band_symbol_rate;
    }
    return 0.0;
}

std::pair<std::uint64_t, std::uint64_t> ber_count(const BitSequence& truth, const BitSequence& decided) {
    if (truth.size() != decided.size()) {
        throw FramingError("bit counts differ: " + std::to_string(truth.size()) + " sent, " +
                           std::to_string(decided.size()) + " decided");
    }
    std::uint64_t errors = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) errors += (truth.bits[i] != 0) != (decided.bits[i] != 0);
    return {errors, truth.size()};
}

namespace {

double effective_ber(const BerPoint& p) {
    return p.errors == 0 ? 1.0 / static_cast<double>(p.bits) : p.ber();
}

std::vector<const BerPoint*> usable(const BerCurve& curve) {
    std::vector<const BerPoint*> v;
    for (const auto& p : curve.points)
        if (p.valid && p.bits > 0 && std::isfinite(p.osnr_db)) v.push_back(&p);
    return v;
}

}  // namespace

double rosnr_at(const BerCurve& curve, double target_ber) {
    if (!(target_ber > 0.0 && target_ber < 1.0)) throw ConfigError("target BER must lie in (0, 1)");
    const auto pts = usable(curve);
    std::ptrdiff_t last_above = -1;
    for (std::size_t j = 0; j < pts.size(); ++j)
        if (effective_ber(*pts[j]) > target_ber) last_above = static_cast<std::ptrdiff_t>(j);
    if (last_above == -1 && !pts.empty() && pts.front()->ber() == target_ber) return pts.front()->osnr_db;
    if (last_above >= 0 && static_cast<std::size_t>(last_above) + 1 < pts.size()) {
        const auto& p0 = *pts[static_cast<std::size_t>(last_above)];
        const auto& p1 = *pts[static_cast<std::size_t>(last_above) + 1];
        const double hi = effective_ber(p0), lo = effective_ber(p1);
        const double t = (std::log10(target_ber) - std::log10(hi)) / (std::log10(lo) - std::log10(hi));
        return p0.osnr_db + t * (p1.osnr_db - p0.osnr_db);
    }
    throw NoCrossingError("scenario " + curve.scenario + " does not cross BER " + fmt("%g", target_ber));
}

std::string crossing_status(const BerCurve& curve, double target_ber) {
    try {
        rosnr_at(curve, target_ber);
        return "ok";
    } catch (const NoCrossingError&) {
    }
    bool any = false, above = false;
    for (const auto& p : curve.points) {
        if (!p.valid || p.bits == 0) continue;
        any = true;
        above |= p.ber() > target_ber;
    }
    return any && !above ? "floor" : "no-crossing";
}

LoadingTable probe_loading(const Scenario& s, double osnr_db, std::uint64_t seed) {
    if (s.format == Format::Dmt) {
        const auto probe = dmt_probe_table(s.dmt);
        DmtConfig cfg = s.dmt;
        cfg.payload_symbols = cfg.probe_symbols;
        const auto bits = payload_bits(
            static_cast<std::size_t>(probe.total_bits_per_symbol) * static_cast<std::size_t>(cfg.probe_symbols),
            derive_seed(seed, "bits"));
        const auto frame = dmt_modulate(bits, probe, cfg);
        const auto rx = transmit(s, frame.waveform, osnr_db, derive_seed(seed, "link"));
        const auto snr = estimate_dmt_snr(rx, probe, frame.descriptor, cfg);
        return chow_load(snr, cfg.target_bits_per_symbol, cfg.gap_db, loading_options(s));
    }
    if (s.format == Format::Cap) {
        CapConfig cfg = s.cap;
        cfg.loading = LoadingTable::flat(0, cfg.n_bands, 2);
        const auto bits = payload_bits(static_cast<std::size_t>(cfg.payload_symbols) * 2 * cfg.n_bands,
                                       derive_seed(seed, "bits"));
        const auto frame = cap_modulate(bits, cfg);
        const auto rx = transmit(s, frame.waveform, osnr_db, derive_seed(seed, "link"));
        const auto snr = estimate_cap_snr(rx, cfg, frame.descriptor);
        return chow_load(snr, cfg.target_bits_per_symbol, cfg.gap_db, loading_options(s));
    }
    throw ConfigError("PAM-4 uses no loading table");
}

BerPoint run_point(const Scenario& s, double osnr_db, std::uint64_t seed) {
    BerPoint point;
    point.osnr_db = osnr_db;
    try {
        LoadingTable table;
        if (s.format != Format::Pam4) table = probe_loading(s, osnr_db, derive_seed(seed, "probe"));
        CapConfig cap = s.cap;
        cap.loading = table;
        for (std::uint64_t frame_no = 0; point.errors < s.min_errors && point.bits < s.max_bits; ++frame_no) {
            const auto fs = derive_seed(seed, frame_no);
            const auto link_seed = derive_seed(fs, "link");
            BitSequence sent, got;
            switch (s.format) {
                case Format::Pam4: {
                    sent = payload_bits(2 * static_cast<std::size_t>(s.pam4.payload_symbols), derive_seed(fs, "bits"));
                    const auto frame = pam4_build_frame(sent, s.pam4);
                    got = pam4_receive(transmit(s, frame.waveform, osnr_db, link_seed), frame.descriptor, s.pam4);
                    break;
                }
                case Format::Dmt: {
                    sent = payload_bits(static_cast<std::size_t>(table.total_bits_per_symbol) *
                                            static_cast<std::size_t>(s.dmt.payload_symbols),
                                        derive_seed(fs, "bits"));
                    const auto frame = dmt_modulate(sent, table, s.dmt);
                    got = dmt_receive(transmit(s, frame.waveform, osnr_db, link_seed), table, frame.descriptor, s.dmt)
                              .bits;
                    break;
                }
                case Format::Cap: {
                    sent = payload_bits(static_cast<std::size_t>(table.total_bits_per_symbol) *
                                            static_cast<std::size_t>(cap.payload_symbols),
                                        derive_seed(fs, "bits"));
                    const auto frame = cap_modulate(sent, cap);
                    const auto res = cap_receive(transmit(s, frame.waveform, osnr_db, link_seed), cap, frame.descriptor);
                    for (const auto& b : res.bands) {
                        if (!b.converged) {
                            throw EqualizerDivergence("CAP band " + std::to_string(b.band) + " did not converge (modulus error " +
                                                      fmt("%.3g", b.head_error) + " -> " + fmt("%.3g", b.tail_error) + ")");
                        }
                    }
                    got = res.bits;
                    break;
                }
            }
            const auto [e, n] = ber_count(sent, got);
            point.errors += e;
            point.bits += n;
        }
        point.valid = true;
    } catch (const SyncError& e) {
        point = BerPoint{osnr_db, 0, 0, false, std::string("sync: ") + e.what()};
    } catch (const EqualizerDivergence& e) {
        point = BerPoint{osnr_db, 0, 0, false, std::string("equalizer: ") + e.what()};
    } catch (const MeasurementError& e) {
        point = BerPoint{osnr_db, 0, 0, false, std::string("measurement: ") + e.what()};
    }
    return point;
}

namespace {

// Keyed by OSNR, not by scenario, so scenarios compared at one OSNR see the
// same payload and noise.
std::uint64_t point_seed(std::uint64_t seed, double osnr_db) {
    if (std::isinf(osnr_db)) return derive_seed(seed, "inf");
    return derive_seed(seed, static_cast<std::uint64_t>(std::llround(osnr_db * 1000.0)));
}

struct Job {
    std::size_t scenario;
    std::size_t point;
};

void run_jobs(const std::vector<Scenario>& scenarios, std::vector<BerCurve>& curves, std::uint64_t seed,
              unsigned threads) {
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        curves[i].points.resize(scenarios[i].osnr_db.size());
        for (std::size_t k = 0; k < scenarios[i].osnr_db.size(); ++k) jobs.push_back({i, k});
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
            const auto& s = scenarios[jobs[j].scenario];
            const auto k = jobs[j].point;
            try {
                curves[jobs[j].scenario].points[k] = run_point(s, s.osnr_db[k], point_seed(seed, s.osnr_db[k]));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

BerCurve empty_curve(const Scenario& s) {
    BerCurve c;
    c.scenario = s.name;
    c.format = s.format;
    c.sideband = s.sideband();
    c.fiber_km = s.link.fiber_length_km;
    c.dcm = s.link.dcm_enabled;
    return c;
}

void finish(BerCurve& c) {
    c.status = crossing_status(c);
    if (c.status == "ok") c.rosnr_db = rosnr_at(c);
}

}  // namespace

BerCurve run_scenario(const Scenario& s, std::uint64_t seed, unsigned threads) {
    return run_comparison(std::vector<Scenario>{s}, seed, threads).front();
}

std::vector<BerCurve> run_comparison(const std::vector<Scenario>& scenarios, std::uint64_t seed, unsigned threads) {
    std::vector<BerCurve> curves;
    for (const auto& s : scenarios) {
        s.validate();
        curves.push_back(empty_curve(s));
    }
    run_jobs(scenarios, curves, seed, threads);
    for (auto& c : curves) finish(c);
    return curves;
}

void write_curves_csv(std::ostream& os, std::span<const BerCurve> curves) {
    os << "scenario,format,sideband,fiber_km,dcm,osnr_db,errors,bits,ber,valid\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            os << c.scenario << ',' << to_string(c.format) << ',' << c.sideband << ',' << fmt("%g", c.fiber_km) << ','
               << (c.dcm ? 1 : 0) << ',' << fmt("%g", p.osnr_db) << ',' << p.errors << ',' << p.bits << ','
               << (p.valid ? fmt("%.6e", p.ber()) : std::string()) << ',' << (p.valid ? 1 : 0) << '\n';
        }
    }
}

void write_comparison_csv(std::ostream& os, std::span<const BerCurve> curves) {
    os << "scenario,rosnr_db,status\n";
    for (const auto& c : curves) {
        os << c.scenario << ',' << (c.rosnr_db ? fmt("%.2f", *c.rosnr_db) : std::string()) << ',' << c.status << '\n';
    }
}

void write_plot_script(std::ostream& os, std::span<const BerCurve> curves, const std::string& csv_name) {
    os << "set datafile separator ','\n"
          "set logscale y\n"
          "set format y '10^{%L}'\n"
          "set xlabel 'OSNR (dB / 0.1 nm)'\n"
          "set ylabel 'BER'\n"
          "set yrange [1e-6:0.5]\n"
          "set key outside right\n"
       << "set arrow from graph 0, first " << kFecThreshold << " to graph 1, first " << kFecThreshold
       << " nohead dashtype 2\n"
          "set terminal pngcairo size 1000,700\n"
          "set output 'ber_curves.png'\n"
          "plot \\\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        os << "  '" << csv_name << "' using ($1 eq '" << curves[i].scenario
           << "' && $10 == 1 && $7 > 0 ? $6 : NaN):9 with linespoints title '" << curves[i].scenario << "'"
           << (i + 1 < curves.size() ? ", \\\n" : "\n");
    }
}

std::vector<NotchSample> notch_probe(const LinkConfig& cfg, std::span<const double> frequencies_hz,
                                     double sample_rate) {
    cfg.validate();
    const std::size_t n = 1 << 14;
    LinkConfig quiet = cfg;
    quiet.osnr_db = std::numeric_limits<double>::infinity();
    std::vector<NotchSample> out;
    for (double f : frequencies_hz) {
        if (!(f > 0.0 && f < 0.5 * sample_rate)) throw ConfigError("probe frequency outside (0, fs/2)");
        const double fg = std::round(f * n / sample_rate) * sample_rate / n;
        std::vector<double> drive(n);
        for (std::size_t i = 0; i < n; ++i) {
            drive[i] = 0.05 * cfg.vpi * std::cos(2.0 * M_PI * fg * static_cast<double>(i) / sample_rate);
        }
        const auto field = optical_path(Waveform::electrical(drive, sample_rate), quiet, 0);
        const auto current = photodiode(field, cfg.pd_responsivity);
        const double a = std::abs(tone_phasor(current.samples(), sample_rate, fg));
        out.push_back({f, 20.0 * std::log10(std::max(a, 1e-300))});
    }
    return out;
}

std::vector<double> find_nulls(std::span<const NotchSample> response, double depth_db) {
    std::vector<double> nulls;
    const std::size_t n = response.size();
    for (std::size_t i = 0; i < n;) {
        // Equal samples (requests snapped to one FFT bin) form one plateau.
        std::size_t j = i;
        while (j + 1 < n && response[j + 1].power_db == response[i].power_db) ++j;
        const double p = response[i].power_db;
        const bool left_higher = i > 0 && response[i - 1].power_db > p;
        const bool right_higher = j + 1 < n && response[j + 1].power_db > p;
        if (left_higher && right_higher) {
            double left = p, right = p;
            for (std::size_t k = i; k-- > 0 && response[k].power_db >= p;) left = std::max(left, response[k].power_db);
            for (std::size_t k = j + 1; k < n && response[k].power_db >= p; ++k) right = std::max(right, response[k].power_db);
            if (std::min(left, right) - p >= depth_db) {
                nulls.push_back(0.5 * (response[i].frequency_hz + response[j].frequency_hz));
            }
        }
        i = j + 1;
    }
    return nulls;
}

}  // namespace imdd
