#include "imdd/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "imdd/error.hpp"

namespace imdd {

namespace {

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::string where;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<Entry> read_ini(std::istream& is, const std::string& source) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    std::vector<Entry> out;
    for (const auto& [section, keys] : tree) {
        if (keys.empty()) throw ConfigError(source + ": key '" + section + "' outside any section");
        for (const auto& [key, value] : keys) {
            out.push_back({section, key, trim(value.data()), source + " [" + section + "] " + key});
        }
    }
    return out;
}

double to_real(const std::string& v) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x)) throw ConfigError("not a number: '" + v + "'");
    return x;
}

long long to_integer(const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno == ERANGE) {
        // Accept integral reals such as 1e6.
        const double r = to_real(v);
        if (r != std::floor(r) || std::abs(r) > 9e18) throw ConfigError("not an integer: '" + v + "'");
        return static_cast<long long>(r);
    }
    return x;
}

std::uint64_t to_count(const std::string& v) {
    const auto x = to_integer(v);
    if (x < 0) throw ConfigError("negative count: '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

bool to_flag(const std::string& v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError("not a flag: '" + v + "'");
}

std::vector<double> to_reals(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_real(item));
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

#define REAL(sec, field) {#field, [](RunConfig& c, const std::string& v) { c.sec.field = to_real(v); }}
#define INT(sec, field) {#field, [](RunConfig& c, const std::string& v) { c.sec.field = static_cast<int>(to_integer(v)); }}
#define FLAG(sec, field) {#field, [](RunConfig& c, const std::string& v) { c.sec.field = to_flag(v); }}
#define COUNT(sec, field) {#field, [](RunConfig& c, const std::string& v) { c.sec.field = to_count(v); }}

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table{
        {"link",
         {INT(link, dac_bits), REAL(link, dac_bandwidth_hz), REAL(link, modulator_bandwidth_hz),
          REAL(link, mux_passband_hz), INT(link, mux_order), REAL(link, laser_detuning_hz),
          REAL(link, fiber_length_km), REAL(link, dispersion_ps_nm_km), REAL(link, wavelength_nm),
          REAL(link, osnr_db), FLAG(link, dcm_enabled), REAL(link, dcm_residual_ps_nm),
          REAL(link, pd_responsivity), REAL(link, tia_noise_rms), REAL(link, adc_bandwidth_hz),
          INT(link, adc_bits), REAL(link, adc_rate_hz), INT(link, oversample_factor), REAL(link, bias_fraction),
          REAL(link, vpi)}},
        {"pam4",
         {REAL(pam4, symbol_rate), REAL(pam4, dac_rate),
          {"shaping",
           [](RunConfig& c, const std::string& v) {
               if (v == "rrc") c.pam4.shaping = Shaping::Rrc;
               else if (v == "none") c.pam4.shaping = Shaping::None;
               else throw ConfigError("shaping must be rrc or none, got '" + v + "'");
           }},
          REAL(pam4, rolloff), INT(pam4, rrc_span), INT(pam4, training_len), INT(pam4, payload_symbols),
          INT(pam4, ffe_taps), REAL(pam4, lms_step), REAL(pam4, drive_swing),
          {"min_payload_bits", [](RunConfig& c, const std::string& v) { c.pam4.min_payload_bits = to_count(v); }}}},
        {"dmt",
         {INT(dmt, fft_size), INT(dmt, cp_len), REAL(dmt, dac_rate), INT(dmt, first_carrier), INT(dmt, last_carrier),
          REAL(dmt, clip_ratio_db), INT(dmt, target_bits_per_symbol), INT(dmt, training_symbols),
          INT(dmt, payload_symbols), INT(dmt, probe_symbols), REAL(dmt, gap_db), REAL(dmt, drive_swing)}},
        {"cap",
         {INT(cap, n_bands), REAL(cap, band_symbol_rate), REAL(cap, dac_rate), REAL(cap, rolloff),
          INT(cap, filter_span),
          {"band_centers", [](RunConfig& c, const std::string& v) { c.cap.band_centers = to_reals(v); }},
          INT(cap, target_bits_per_symbol), INT(cap, training_len), INT(cap, payload_symbols), INT(cap, ffe_taps),
          REAL(cap, mma_step), REAL(cap, dd_step), REAL(cap, gap_db), REAL(cap, drive_swing)}},
        {"sweep",
         {REAL(sweep, osnr_start_db), REAL(sweep, osnr_stop_db), REAL(sweep, osnr_step_db), COUNT(sweep, min_errors),
          COUNT(sweep, max_bits), COUNT(sweep, seed),
          {"threads", [](RunConfig& c, const std::string& v) { c.sweep.threads = static_cast<unsigned>(to_count(v)); }},
          REAL(sweep, target_ber), REAL(sweep, required_rate_bps), REAL(sweep, notch_start_hz),
          REAL(sweep, notch_stop_hz), REAL(sweep, notch_step_hz)}},
    };
    return table;
}

#undef REAL
#undef INT
#undef FLAG
#undef COUNT

void validate(const RunConfig& c) {
    c.link.validate();
    c.pam4.validate();
    c.dmt.validate();
    c.cap.validate();
    c.sweep.osnr_grid();
    c.sweep.notch_grid();
    if (!(c.sweep.target_ber > 0.0 && c.sweep.target_ber < 1.0)) throw ConfigError("target_ber must lie in (0, 1)");
}

}  // namespace

std::vector<double> SweepSettings::osnr_grid() const {
    if (!(osnr_step_db > 0.0) || !(osnr_stop_db >= osnr_start_db)) throw ConfigError("OSNR grid needs start <= stop and step > 0");
    std::vector<double> out;
    const auto n = static_cast<int>(std::floor((osnr_stop_db - osnr_start_db) / osnr_step_db + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(osnr_start_db + i * osnr_step_db);
    return out;
}

std::vector<double> SweepSettings::notch_grid() const {
    if (!(notch_step_hz > 0.0) || !(notch_start_hz > 0.0) || !(notch_stop_hz >= notch_start_hz)) {
        throw ConfigError("notch grid needs 0 < start <= stop and step > 0");
    }
    std::vector<double> out;
    const auto n = static_cast<int>(std::floor((notch_stop_hz - notch_start_hz) / notch_step_hz + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(notch_start_hz + i * notch_step_hz);
    return out;
}

void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
    const auto s = setters().find(section);
    if (s == setters().end()) throw ConfigError("unknown section [" + section + "]");
    const auto k = s->second.find(key);
    if (k == s->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    k->second(cfg, value);
}

RunConfig parse_config(std::istream& is, const std::string& source) {
    RunConfig cfg;
    for (const auto& e : read_ini(is, source)) {
        try {
            apply_setting(cfg, e.section, e.key, e.value);
        } catch (const ConfigError& err) {
            throw ConfigError(e.where + ": " + err.what());
        }
    }
    try {
        validate(cfg);
    } catch (const Error& err) {
        throw ConfigError(source + ": " + err.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in, path.string());
}

Scenario make_scenario(const RunConfig& cfg, const std::string& name, Format format) {
    Scenario s;
    s.name = name;
    s.format = format;
    s.link = cfg.link;
    s.pam4 = cfg.pam4;
    s.dmt = cfg.dmt;
    s.cap = cfg.cap;
    s.osnr_db = cfg.sweep.osnr_grid();
    s.min_errors = cfg.sweep.min_errors;
    s.max_bits = cfg.sweep.max_bits;
    if (cfg.sweep.required_rate_bps > 0.0 && gross_bit_rate(s) < cfg.sweep.required_rate_bps) {
        throw ConfigError("scenario " + name + " carries " + std::to_string(gross_bit_rate(s) / 1e9) +
                          " Gbit/s, below the required rate");
    }
    return s;
}

Manifest parse_manifest(std::istream& is, const std::filesystem::path& base_dir, const std::string& source) {
    const auto entries = read_ini(is, source);
    Manifest m;
    for (const auto& e : entries) {
        if (e.section == "sweep" && e.key == "config") m.base = load_config(base_dir / e.value);
    }
    // Manifest-wide overrides, then one scenario per [scenario.NAME].
    std::vector<std::string> order;
    std::map<std::string, std::vector<const Entry*>> per_scenario;
    for (const auto& e : entries) {
        try {
            if (e.section.rfind("scenario.", 0) == 0) {
                const auto name = e.section.substr(9);
                if (name.empty()) throw ConfigError("scenario needs a name");
                if (!per_scenario.count(name)) order.push_back(name);
                per_scenario[name].push_back(&e);
            } else if (!(e.section == "sweep" && e.key == "config")) {
                apply_setting(m.base, e.section, e.key, e.value);
            }
        } catch (const ConfigError& err) {
            throw ConfigError(e.where + ": " + err.what());
        }
    }
    try {
        validate(m.base);
    } catch (const Error& err) {
        throw ConfigError(source + ": " + err.what());
    }
    if (order.empty()) throw ConfigError(source + ": no [scenario.NAME] sections");
    for (const auto& name : order) {
        RunConfig cfg = m.base;
        std::string format;
        bool loopback = false;
        for (const Entry* e : per_scenario[name]) {
            try {
                if (e->key == "format") {
                    format = e->value;
                } else if (e->key == "loopback") {
                    loopback = to_flag(e->value);
                } else {
                    const auto dot = e->key.find('.');
                    if (dot == std::string::npos) throw ConfigError("unknown scenario key '" + e->key + "'");
                    apply_setting(cfg, e->key.substr(0, dot), e->key.substr(dot + 1), e->value);
                }
            } catch (const ConfigError& err) {
                throw ConfigError(e->where + ": " + err.what());
            }
        }
        if (format.empty()) throw ConfigError(source + ": scenario " + name + " needs a format");
        try {
            validate(cfg);
            auto s = make_scenario(cfg, name, parse_format(format));
            s.loopback = loopback;
            s.validate();
            m.scenarios.push_back(std::move(s));
        } catch (const Error& err) {
            throw ConfigError(source + ": scenario " + name + ": " + err.what());
        }
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    return parse_manifest(in, path.parent_path(), path.string());
}

}  // namespace imdd
