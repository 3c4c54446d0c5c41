#include "imdd/waveform.hpp"

#include <algorithm>
#include <cmath>

#include "imdd/error.hpp"

namespace imdd {

Waveform::Waveform(std::vector<cplx> samples, double sample_rate, Domain domain)
    : samples_(std::move(samples)), sample_rate_(sample_rate), domain_(domain) {
    if (!(sample_rate_ > 0.0)) throw ConfigError("waveform sample rate must be positive");
    if (samples_.empty()) throw ConfigError("waveform must contain at least one sample");
    if (domain_ == Domain::ElectricalReal) {
        for (const auto& s : samples_) {
            if (s.imag() != 0.0) throw ConfigError("electrical waveform has a nonzero imaginary part");
        }
    }
}

Waveform Waveform::electrical(std::span<const double> samples, double sample_rate) {
    std::vector<cplx> c(samples.begin(), samples.end());
    return Waveform(std::move(c), sample_rate, Domain::ElectricalReal);
}

Waveform Waveform::optical(std::vector<cplx> samples, double sample_rate) {
    return Waveform(std::move(samples), sample_rate, Domain::OpticalEnvelope);
}

std::vector<double> Waveform::real() const {
    std::vector<double> out(samples_.size());
    std::transform(samples_.begin(), samples_.end(), out.begin(), [](cplx s) { return s.real(); });
    return out;
}

double Waveform::mean_power() const {
    double acc = 0.0;
    for (const auto& s : samples_) acc += std::norm(s);
    return acc / static_cast<double>(samples_.size());
}

double Waveform::rms() const { return std::sqrt(mean_power()); }

double Waveform::peak() const {
    double p = 0.0;
    for (const auto& s : samples_) p = std::max(p, std::abs(s));
    return p;
}

}  // namespace imdd
