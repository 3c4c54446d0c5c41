#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imdd/cap.hpp"
#include "imdd/channel.hpp"
#include "imdd/dmt.hpp"
#include "imdd/frame.hpp"
#include "imdd/loading.hpp"
#include "imdd/pam4.hpp"

namespace imdd {

inline constexpr double kFecThreshold = 3.8e-3;

struct BerPoint {
    double osnr_db = 0.0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    bool valid = false;
    std::string failure;  // why the point is invalid

    // NaN for invalid or empty points.
    double ber() const;
};

struct Scenario {
    std::string name;
    Format format = Format::Pam4;
    LinkConfig link;
    Pam4Config pam4;
    DmtConfig dmt;
    CapConfig cap;
    std::vector<double> osnr_db;  // ascending; +inf allowed
    std::uint64_t min_errors = 100;
    std::uint64_t max_bits = 1'000'000;
    bool loopback = false;        // bypass the link entirely

    std::string sideband() const { return link.laser_detuning_hz != 0.0 ? "vsb" : "dsb"; }
    void validate() const;
};

struct BerCurve {
    std::string scenario;
    Format format = Format::Pam4;
    std::string sideband;
    double fiber_km = 0.0;
    bool dcm = false;
    std::vector<BerPoint> points;
    std::optional<double> rosnr_db;
    std::string status;  // ok, no-crossing or floor
};

// Gross line rate of a format's configuration in bit/s.
double gross_bit_rate(const Scenario& s);

// (errors, bits counted). Throws FramingError on a length mismatch.
std::pair<std::uint64_t, std::uint64_t> ber_count(const BitSequence& truth, const BitSequence& decided);

// OSNR at target_ber by linear interpolation of OSNR against log10(BER)
// over the last downward crossing of the valid points. A point without
// errors stands in with BER 1/bits. Throws NoCrossingError when the target
// is not bracketed.
double rosnr_at(const BerCurve& curve, double target_ber = kFecThreshold);

// ok, no-crossing (never reaches the target) or floor (never above it).
std::string crossing_status(const BerCurve& curve, double target_ber = kFecThreshold);

// Loading for DMT or CAP from a probe frame sent through the scenario's
// link at the given OSNR. Throws what the probe receiver throws.
LoadingTable probe_loading(const Scenario& s, double osnr_db, std::uint64_t seed);

// One OSNR point: frames until min_errors errors or max_bits bits. Receiver
// failures make the point invalid instead of propagating.
BerPoint run_point(const Scenario& s, double osnr_db, std::uint64_t seed);

// Every point of a scenario. A point's seed depends only on the master seed
// and its OSNR, so results do not depend on scheduling and scenarios share
// noise at equal OSNR.
BerCurve run_scenario(const Scenario& s, std::uint64_t seed, unsigned threads = 1);
std::vector<BerCurve> run_comparison(const std::vector<Scenario>& scenarios, std::uint64_t seed,
                                     unsigned threads = 1);

// `scenario,format,sideband,fiber_km,dcm,osnr_db,errors,bits,ber,valid`
void write_curves_csv(std::ostream& os, std::span<const BerCurve> curves);
// `scenario,rosnr_db,status`
void write_comparison_csv(std::ostream& os, std::span<const BerCurve> curves);
// gnuplot script drawing every curve from the curves CSV.
void write_plot_script(std::ostream& os, std::span<const BerCurve> curves, const std::string& csv_name);

struct NotchSample {
    double frequency_hz = 0.0;
    double power_db = 0.0;
};

// Small-index tone (5 % of V_pi) through modulator, filters, fiber and
// photodiode, noise free. Power is the detected tone power in dB.
std::vector<NotchSample> notch_probe(const LinkConfig& cfg, std::span<const double> frequencies_hz,
                                     double sample_rate = 168e9);

// Minima whose prominence (drop below the lower of the two enclosing
// maxima) is at least depth_db.
std::vector<double> find_nulls(std::span<const NotchSample> response, double depth_db = 20.0);

}  // namespace imdd
