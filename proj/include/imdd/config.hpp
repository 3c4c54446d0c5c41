#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "imdd/metrics.hpp"

namespace imdd {

struct SweepSettings {
    double osnr_start_db = 20.0;
    double osnr_stop_db = 40.0;
    double osnr_step_db = 1.0;
    std::uint64_t min_errors = 100;
    std::uint64_t max_bits = 1'000'000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double target_ber = kFecThreshold;
    // Gross rate every scenario must carry, bit/s; 0 disables the check.
    double required_rate_bps = 56e9;
    double notch_start_hz = 0.5e9;
    double notch_stop_hz = 20e9;
    double notch_step_hz = 50e6;

    std::vector<double> osnr_grid() const;
    std::vector<double> notch_grid() const;
};

// Everything one run needs, read from an INI file with the sections
// [link], [pam4], [dmt], [cap] and [sweep]. Keys are the field names.
struct RunConfig {
    LinkConfig link;
    Pam4Config pam4;
    DmtConfig dmt;
    CapConfig cap;
    SweepSettings sweep;
};

// Throws ConfigError naming the source and line for unknown sections or
// keys, malformed values and duplicates.
RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Sets one field; `section` is link, pam4, dmt, cap or sweep.
void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

// Scenario for one format from a run configuration.
Scenario make_scenario(const RunConfig& cfg, const std::string& name, Format format);

// Manifest: an optional [sweep] section (with `config = FILE` naming the base
// configuration, relative to the manifest) and [scenario.NAME] sections.
// Scenario sections take `format`, `loopback`, and `section.key` overrides
// of the base configuration, e.g. `link.fiber_length_km = 80`.
struct Manifest {
    RunConfig base;
    std::vector<Scenario> scenarios;
};

Manifest parse_manifest(std::istream& is, const std::filesystem::path& base_dir, const std::string& source = "<manifest>");
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace imdd
