#include "imdd/loading.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "imdd/error.hpp"

namespace imdd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

bool usable(double snr_db) { return std::isfinite(snr_db); }

// Energy needed for b bits relative to the per-entry SNR, gap excluded.
double cost(double snr_lin, int b) { return b == 0 ? 0.0 : (std::ldexp(1.0, b) - 1.0) / snr_lin; }

std::vector<int> level_set(const LoadingOptions& opt) {
    std::vector<int> levels{0};
    if (opt.allowed_bits.empty()) {
        for (int b = 1; b <= opt.max_bits; ++b) levels.push_back(b);
    } else {
        for (int b : opt.allowed_bits) {
            if (b < 1 || b > opt.max_bits) throw ConfigError("allowed bit counts must lie in [1, max_bits]");
            levels.push_back(b);
        }
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    }
    return levels;
}

bool contiguous(const std::vector<int>& levels) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] != static_cast<int>(i)) return false;
    }
    return true;
}

// Chow: find the margin at which rounded Shannon-gap bit counts first reach
// the target.
std::vector<int> chow_initial(const std::vector<double>& snr, int target, double gap_lin, int max_bits) {
    auto allocate = [&](double margin_db) {
        const double gm = gap_lin * db_to_linear(margin_db);
        std::vector<int> b(snr.size(), 0);
        for (std::size_t k = 0; k < snr.size(); ++k) {
            if (snr[k] <= 0.0) continue;
            const double ideal = std::log2(1.0 + snr[k] / gm);
            b[k] = std::clamp(static_cast<int>(std::lround(ideal)), 0, max_bits);
        }
        return b;
    };
    auto total = [](const std::vector<int>& b) {
        long long t = 0;
        for (int v : b) t += v;
        return t;
    };
    double lo = -80.0;  // total >= target here
    double hi = 80.0;   // total < target here
    if (total(allocate(lo)) < target) return allocate(lo);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (total(allocate(mid)) >= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return allocate(lo);
}

void levin_campello(std::vector<int>& b, const std::vector<double>& snr, int target, int max_bits) {
    const std::size_t n = b.size();
    auto add_cost = [&](std::size_t k) { return b[k] >= max_bits || snr[k] <= 0.0 ? kInf : std::ldexp(1.0, b[k]) / snr[k]; };
    auto remove_saving = [&](std::size_t k) { return b[k] == 0 ? -kInf : std::ldexp(1.0, b[k] - 1) / snr[k]; };
    auto cheapest_add = [&] {
        std::size_t best = n;
        for (std::size_t k = 0; k < n; ++k) {
            if (add_cost(k) < kInf && (best == n || add_cost(k) < add_cost(best))) best = k;
        }
        return best;
    };
    auto dearest_remove = [&] {
        std::size_t best = n;
        for (std::size_t k = 0; k < n; ++k) {
            if (b[k] > 0 && (best == n || remove_saving(k) > remove_saving(best))) best = k;
        }
        return best;
    };

    long long total = 0;
    for (int v : b) total += v;
    while (total > target) {
        --b[dearest_remove()];
        --total;
    }
    while (total < target) {
        ++b[cheapest_add()];
        ++total;
    }
    // Efficiency: no single bit move may lower the total energy.
    for (std::size_t guard = 0; guard < 64 * n * static_cast<std::size_t>(max_bits + 1); ++guard) {
        const std::size_t from = dearest_remove();
        const std::size_t to = cheapest_add();
        if (from == n || to == n || from == to) break;
        if (!(remove_saving(from) > add_cost(to) * (1.0 + 1e-12))) break;
        --b[from];
        ++b[to];
    }
}

std::vector<int> dynamic_allocation(const std::vector<double>& snr, int target, const std::vector<int>& levels) {
    const std::size_t n = snr.size();
    const auto t_max = static_cast<std::size_t>(target);
    std::vector<std::vector<double>> best(n + 1, std::vector<double>(t_max + 1, kInf));
    std::vector<std::vector<int>> choice(n + 1, std::vector<int>(t_max + 1, 0));
    best[0][0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t t = 0; t <= t_max; ++t) {
            if (best[k][t] == kInf) continue;
            for (int level : levels) {
                if (level > 0 && snr[k] <= 0.0) continue;
                const std::size_t nt = t + static_cast<std::size_t>(level);
                if (nt > t_max) break;
                const double c = best[k][t] + cost(snr[k], level);
                if (c < best[k + 1][nt]) {
                    best[k + 1][nt] = c;
                    choice[k + 1][nt] = level;
                }
            }
        }
    }
    if (best[n][t_max] == kInf) throw CapacityError("target bit count is not reachable with the allowed levels", 0);
    std::vector<int> b(n, 0);
    std::size_t t = t_max;
    for (std::size_t k = n; k > 0; --k) {
        b[k - 1] = choice[k][t];
        t -= static_cast<std::size_t>(b[k - 1]);
    }
    return b;
}

}  // namespace

void LoadingTable::validate() const {
    int sum = 0;
    double p2 = 0.0;
    int used = 0;
    for (const auto& e : entries) {
        if (e.bits < 0 || e.bits > 8) throw ConfigError("loading entry bits must lie in [0, 8]");
        if (!(e.power_scale > 0.0)) throw ConfigError("loading entry power scale must be positive");
        sum += e.bits;
        if (e.bits > 0) {
            p2 += e.power_scale * e.power_scale;
            ++used;
        }
    }
    if (sum != total_bits_per_symbol) throw ConfigError("loading table bit total does not match its entries");
    if (used > 0 && std::abs(p2 / used - 1.0) > 1e-9) {
        throw ConfigError("loading table power scales are not normalised");
    }
}

int LoadingTable::used_entries() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.bits > 0; }));
}

void LoadingTable::write_csv(std::ostream& os) const {
    os << "carrier,bits,power_scale\n";
    auto old = os.precision(17);
    for (const auto& e : entries) os << e.index << ',' << e.bits << ',' << e.power_scale << '\n';
    os.precision(old);
}

LoadingTable LoadingTable::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("carrier,bits,power_scale", 0) != 0) {
        throw ConfigError("loading table CSV must start with 'carrier,bits,power_scale'");
    }
    LoadingTable t;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        LoadingEntry e;
        char c1 = 0, c2 = 0;
        if (!(row >> e.index >> c1 >> e.bits >> c2 >> e.power_scale) || c1 != ',' || c2 != ',') {
            throw ConfigError("malformed loading table row: " + line);
        }
        t.entries.push_back(e);
        t.total_bits_per_symbol += e.bits;
    }
    t.validate();
    return t;
}

LoadingTable LoadingTable::flat(int first_index, int count, int bits) {
    LoadingTable t;
    for (int i = 0; i < count; ++i) t.entries.push_back({first_index + i, bits, 1.0});
    t.total_bits_per_symbol = count * bits;
    return t;
}

double allocation_margin_db(std::span<const double> snr_db, std::span<const int> bits, double gap_db) {
    double sum = 0.0;
    for (std::size_t k = 0; k < snr_db.size(); ++k) {
        if (bits[k] == 0) continue;
        if (!usable(snr_db[k])) return -kInf;
        sum += cost(db_to_linear(snr_db[k]), bits[k]);
    }
    if (sum == 0.0) return kInf;
    return 10.0 * std::log10(static_cast<double>(snr_db.size()) / (db_to_linear(gap_db) * sum));
}

LoadingTable chow_load(std::span<const double> snr_db, int target_bits, double gap_db, const LoadingOptions& options) {
    if (snr_db.empty()) throw ConfigError("loading needs at least one SNR entry");
    if (target_bits < 0) throw ConfigError("target bit count cannot be negative");
    if (options.max_bits < 1 || options.max_bits > 8) throw ConfigError("max_bits must lie in [1, 8]");
    const auto levels = level_set(options);

    std::vector<double> snr(snr_db.size());
    int n_usable = 0;
    for (std::size_t k = 0; k < snr.size(); ++k) {
        snr[k] = usable(snr_db[k]) ? db_to_linear(snr_db[k]) : 0.0;
        n_usable += snr[k] > 0.0 ? 1 : 0;
    }
    const int achievable = n_usable * levels.back();
    if (target_bits > achievable) {
        throw CapacityError("target of " + std::to_string(target_bits) + " bits exceeds the achievable " +
                                std::to_string(achievable),
                            achievable);
    }

    std::vector<int> bits;
    if (contiguous(levels)) {
        bits = chow_initial(snr, target_bits, db_to_linear(gap_db), options.max_bits);
        levin_campello(bits, snr, target_bits, options.max_bits);
    } else {
        bits = dynamic_allocation(snr, target_bits, levels);
    }

    LoadingTable table;
    double p2_sum = 0.0;
    int used = 0;
    for (std::size_t k = 0; k < snr.size(); ++k) {
        LoadingEntry e{options.first_index + static_cast<int>(k), bits[k], 1.0};
        if (e.bits > 0) {
            e.power_scale = std::sqrt(cost(snr[k], e.bits));
            p2_sum += cost(snr[k], e.bits);
            ++used;
        }
        table.entries.push_back(e);
        table.total_bits_per_symbol += e.bits;
    }
    if (used > 0) {
        const double norm = std::sqrt(used / p2_sum);
        for (auto& e : table.entries) {
            if (e.bits > 0) e.power_scale *= norm;
        }
    }
    table.margin_db = allocation_margin_db(snr_db, bits, gap_db);
    table.validate();
    return table;
}

}  // namespace imdd
