#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace imdd {

using cplx = std::complex<double>;

enum class Domain { ElectricalReal, OpticalEnvelope };

// Uniformly sampled signal. Electrical waveforms keep an exactly zero
// imaginary part; the constructor rejects anything else.
class Waveform {
public:
    Waveform(std::vector<cplx> samples, double sample_rate, Domain domain);

    static Waveform electrical(std::span<const double> samples, double sample_rate);
    static Waveform optical(std::vector<cplx> samples, double sample_rate);

    const std::vector<cplx>& samples() const { return samples_; }
    double sample_rate() const { return sample_rate_; }
    Domain domain() const { return domain_; }
    std::size_t size() const { return samples_.size(); }
    bool is_electrical() const { return domain_ == Domain::ElectricalReal; }

    std::vector<double> real() const;
    double mean_power() const;
    double rms() const;
    double peak() const;

private:
    std::vector<cplx> samples_;
    double sample_rate_;
    Domain domain_;
};

enum class BitOrigin { Prbs, File, Explicit };

struct BitSequence {
    std::vector<std::uint8_t> bits;
    BitOrigin origin = BitOrigin::Explicit;

    std::size_t size() const { return bits.size(); }
    bool operator==(const BitSequence& other) const { return bits == other.bits; }
};

}  // namespace imdd
