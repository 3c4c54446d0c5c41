#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "imdd/config.hpp"
#include "imdd/error.hpp"
#include "imdd/metrics.hpp"

using namespace imdd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNoCrossing = 3;

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    return os;
}

int simulate(const std::string& config, const std::string& format, const std::string& osnr, std::uint64_t seed) {
    const auto cfg = load_config(config);
    auto s = make_scenario(cfg, "simulate", parse_format(format));
    double o;
    try {
        o = osnr == "inf" ? std::numeric_limits<double>::infinity() : std::stod(osnr);
    } catch (const std::exception&) {
        throw ConfigError("--osnr expects a number or inf, got '" + osnr + "'");
    }
    s.osnr_db = {o};
    s.validate();
    const auto p = run_point(s, o, seed);
    std::printf("osnr_db,errors,bits,ber,valid\n%g,%llu,%llu,%s,%d\n", p.osnr_db,
                static_cast<unsigned long long>(p.errors), static_cast<unsigned long long>(p.bits),
                p.valid ? std::to_string(p.ber()).c_str() : "", p.valid ? 1 : 0);
    if (!p.valid) {
        std::fprintf(stderr, "invalid point: %s\n", p.failure.c_str());
        return kExitNoCrossing;
    }
    return 0;
}

int sweep(const std::string& manifest, const std::string& out_dir) {
    const auto m = load_manifest(manifest);
    std::filesystem::create_directories(out_dir);
    const auto curves = run_comparison(m.scenarios, m.base.sweep.seed, m.base.sweep.threads);
    const std::filesystem::path dir(out_dir);
    auto c = open_out(dir / "ber_curves.csv");
    write_curves_csv(c, curves);
    auto r = open_out(dir / "rosnr.csv");
    write_comparison_csv(r, curves);
    auto g = open_out(dir / "ber_curves.gp");
    write_plot_script(g, curves, "ber_curves.csv");
    write_comparison_csv(std::cout, curves);
    bool failed = false;
    for (const auto& curve : curves) {
        failed |= curve.status == "no-crossing";
        for (const auto& p : curve.points) failed |= !p.valid;
    }
    return failed ? kExitNoCrossing : 0;
}

int loadmap(const std::string& config, const std::string& format, std::uint64_t seed, const std::string& out) {
    const auto cfg = load_config(config);
    const auto f = parse_format(format);
    if (f == Format::Pam4) throw ConfigError("loadmap needs dmt or cap");
    auto s = make_scenario(cfg, "loadmap", f);
    const auto table = probe_loading(s, cfg.link.osnr_db, seed);
    if (out.empty()) {
        table.write_csv(std::cout);
    } else {
        auto os = open_out(out);
        table.write_csv(os);
    }
    std::fprintf(stderr, "margin %.2f dB, %d entries loaded\n", table.margin_db, table.used_entries());
    return 0;
}

int notch(const std::string& config, const std::string& out) {
    const auto cfg = load_config(config);
    const auto response = notch_probe(cfg.link, cfg.sweep.notch_grid());
    auto os = open_out(out);
    os << "frequency_hz,power_db\n";
    for (const auto& r : response) {
        char line[64];
        std::snprintf(line, sizeof line, "%.6e,%.4f\n", r.frequency_hz, r.power_db);
        os << line;
    }
    for (double f : find_nulls(response)) std::printf("null at %.3f GHz\n", f / 1e9);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IM/DD link simulator: PAM-4, DMT and multi-band CAP"};
    app.require_subcommand(1);

    std::string config, format, osnr, manifest, out;
    std::uint64_t seed = 1;

    auto* sim = app.add_subcommand("simulate", "one OSNR point; prints the BER point");
    sim->add_option("--config", config)->required()->check(CLI::ExistingFile);
    sim->add_option("--format", format)->required()->check(CLI::IsMember({"pam4", "dmt", "cap"}));
    sim->add_option("--osnr", osnr, "dB in 0.1 nm, or inf")->required();
    sim->add_option("--seed", seed);

    auto* sw = app.add_subcommand("sweep", "every scenario of a manifest; writes CSVs and a gnuplot script");
    sw->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    sw->add_option("--out", out)->required();

    auto* lm = app.add_subcommand("loadmap", "loading table from an SNR probe at the configured OSNR");
    lm->add_option("--config", config)->required()->check(CLI::ExistingFile);
    lm->add_option("--format", format)->required()->check(CLI::IsMember({"dmt", "cap"}));
    lm->add_option("--seed", seed);
    lm->add_option("--out", out, "CSV file; stdout when omitted");

    auto* nt = app.add_subcommand("notch", "detected tone response of the link");
    nt->add_option("--config", config)->required()->check(CLI::ExistingFile);
    nt->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return simulate(config, format, osnr, seed);
        if (*sw) return sweep(manifest, out);
        if (*lm) return loadmap(config, format, seed, out);
        if (*nt) return notch(config, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SyncError& e) {
        std::cerr << "sync failure: " << e.what() << '\n';
        return kExitNoCrossing;
    } catch (const NoCrossingError& e) {
        std::cerr << e.what() << '\n';
        return kExitNoCrossing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
