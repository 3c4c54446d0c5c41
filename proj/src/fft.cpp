#include "imdd/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace imdd::fft {

namespace {

// FFTW's planner is not thread-safe, fftw_execute_dft is. Plans are created
// once per (length, direction) under a lock and reused with new arrays.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<cplx> scratch_in(static_cast<std::size_t>(n));
        std::vector<cplx> scratch_out(static_cast<std::size_t>(n));
        fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                          reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

std::vector<cplx> execute(std::span<const cplx> x, int sign) {
    const int n = static_cast<int>(x.size());
    std::vector<cplx> in(x.begin(), x.end());
    std::vector<cplx> out(x.size());
    if (n == 0) return out;
    fftw_plan plan = cache().get(n, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

std::vector<cplx> forward(std::span<const cplx> x) { return execute(x, FFTW_FORWARD); }

std::vector<cplx> inverse(std::span<const cplx> x) {
    auto out = execute(x, FFTW_BACKWARD);
    const double scale = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= scale;
    return out;
}

std::vector<double> bin_frequencies(std::size_t n, double sample_rate) {
    std::vector<double> f(n);
    const double df = sample_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto signed_k = k < (n + 1) / 2 ? static_cast<double>(k)
                                              : static_cast<double>(k) - static_cast<double>(n);
        f[k] = signed_k * df;
    }
    return f;
}

}  // namespace imdd::fft
