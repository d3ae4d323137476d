#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "fslab/grid.hpp"

namespace fslab {
namespace detail {

// Process-wide FFTW plan cache. Plan creation is not reentrant, so it is
// guarded; execution through the new-array interface is thread-safe.
// Plans are created FFTW_UNALIGNED so they may run on any caller buffer.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    struct Pair {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    Pair get(int dim, int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(dim, n);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        std::size_t total = dim == 1 ? std::size_t(n) : std::size_t(n) * n;
        std::vector<std::complex<double>> buf(total);
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        Pair pair;
        if (dim == 1) {
            pair.fwd = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, flags);
            pair.bwd = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, flags);
        } else {
            pair.fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, flags);
            pair.bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, flags);
        }
        cache_[key] = pair;
        return pair;
    }

private:
    FftPlans() = default;
    std::mutex mutex_;
    std::map<std::pair<int, int>, Pair> cache_;
};

inline void execute(fftw_plan plan, std::complex<double>* data) {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, p, p);
}

// In-place forward DFT with 1/N normalization (coefficients of e^{ikx}).
inline void forward(int dim, int n, std::complex<double>* data) {
    execute(FftPlans::instance().get(dim, n).fwd, data);
    std::size_t total = dim == 1 ? std::size_t(n) : std::size_t(n) * n;
    double scale = 1.0 / double(total);
    for (std::size_t i = 0; i < total; ++i) data[i] *= scale;
}

// In-place backward DFT, no scaling (inverse of forward above).
inline void backward(int dim, int n, std::complex<double>* data) {
    execute(FftPlans::instance().get(dim, n).bwd, data);
}

inline void zero_nyquist(SpectralField& F) {
    const int n = F.grid.n;
    const int ny = n / 2;
    if (F.grid.dim == 1) {
        F.coeffs[std::size_t(ny)] = 0.0;
    } else {
        for (int j = 0; j < n; ++j) {
            F.at(ny, j) = 0.0;
            F.at(j, ny) = 0.0;
        }
    }
}

} // namespace detail

inline SpectralField transform(const ScalarField& f) {
    if (!f.all_finite()) throw InvalidField("transform: non-finite input values");
    SpectralField F(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) F.coeffs[i] = f.values[i];
    detail::forward(f.grid.dim, f.grid.n, F.coeffs.data());
    detail::zero_nyquist(F);
    return F;
}

inline ScalarField inverse(const SpectralField& F) {
    std::vector<std::complex<double>> buf = F.coeffs;
    detail::backward(F.grid.dim, F.grid.n, buf.data());
    ScalarField f(F.grid);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = buf[i].real();
    return f;
}

} // namespace fslab
