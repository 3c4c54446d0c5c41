#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace imdd {

struct LoadingEntry {
    int index = 0;             // subcarrier or band number
    int bits = 0;              // 0..8
    double power_scale = 1.0;  // amplitude factor, > 0
};

// Per-subcarrier (DMT) or per-band (CAP) bit and power assignment.
//
// Power scales follow the equal-margin rule and are normalised so the mean
// of power_scale^2 over entries carrying bits is one. Entries without bits
// keep power_scale = 1 and are not transmitted.
struct LoadingTable {
    std::vector<LoadingEntry> entries;
    int total_bits_per_symbol = 0;
    // Common margin (dB) of the loaded entries relative to the SNR vector the
    // table was computed from, total power held at one unit per entry.
    double margin_db = 0.0;

    void validate() const;
    int used_entries() const;

    // CSV with header `carrier,bits,power_scale`.
    void write_csv(std::ostream& os) const;
    static LoadingTable read_csv(std::istream& is);

    static LoadingTable flat(int first_index, int count, int bits);
};

struct LoadingOptions {
    int max_bits = 8;
    // Bit counts an entry may take besides zero, ascending. Empty means every
    // count in [1, max_bits].
    std::vector<int> allowed_bits;
    int first_index = 1;
};

// Margin-adaptive loading: Chow's iterative margin search gives the initial
// integer allocation, then Levin-Campello bit moves hit the exact target and
// make the allocation efficient. With gaps in `allowed_bits` the final
// allocation is solved exactly by dynamic programming over entries instead.
//
// Throws CapacityError (with the achievable maximum) when the target cannot
// be met.
LoadingTable chow_load(std::span<const double> snr_db, int target_bits, double gap_db,
                       const LoadingOptions& options = {});

// Equalised margin (dB) of a given allocation, total power of one unit per
// entry. Returns -inf when a loaded entry has no usable SNR.
double allocation_margin_db(std::span<const double> snr_db, std::span<const int> bits, double gap_db);

}  // namespace imdd
