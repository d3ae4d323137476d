#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>

#include "fslab/fft.hpp"
#include "fslab/grid.hpp"

namespace fslab {

// Signed wavevector; component 1 is zero for d=1 fields.
using Wavevector = std::array<int, 2>;

inline double wavevector_norm(const Wavevector& k) {
    return std::sqrt(double(k[0]) * k[0] + double(k[1]) * k[1]);
}

namespace detail {

template <class Fn>
void for_each_mode(SpectralField& F, Fn&& fn) {
    const int n = F.grid.n;
    if (F.grid.dim == 1) {
        for (int j = 0; j < n; ++j)
            fn(Wavevector{F.grid.wavenumber(j), 0}, F.coeffs[std::size_t(j)]);
    } else {
        for (int j0 = 0; j0 < n; ++j0) {
            const int k0 = F.grid.wavenumber(j0);
            for (int j1 = 0; j1 < n; ++j1)
                fn(Wavevector{k0, F.grid.wavenumber(j1)}, F.at(j0, j1));
        }
    }
}

// Restore coeffs(-k) = conj(coeffs(k)) after a symbol application.
inline void hermitian_symmetrize(SpectralField& F) {
    const int n = F.grid.n;
    auto pair_up = [](std::complex<double>& a, std::complex<double>& b) {
        const std::complex<double> avg = 0.5 * (a + std::conj(b));
        a = avg;
        b = std::conj(avg);
    };
    if (F.grid.dim == 1) {
        for (int j = 1; j < n / 2; ++j) pair_up(F.coeffs[j], F.coeffs[std::size_t(n - j)]);
        F.coeffs[0] = F.coeffs[0].real();
    } else {
        for (int j0 = 0; j0 < n; ++j0) {
            const int m0 = j0 == 0 ? 0 : n - j0;
            for (int j1 = 0; j1 < n; ++j1) {
                const int m1 = j1 == 0 ? 0 : n - j1;
                if (std::size_t(j0) * n + j1 < std::size_t(m0) * n + m1)
                    pair_up(F.at(j0, j1), F.at(m0, m1));
            }
        }
        F.at(0, 0) = F.at(0, 0).real();
    }
}

} // namespace detail

// Exact spectral derivative of the trigonometric interpolant.
inline ScalarField derivative(const ScalarField& f, int axis = 0, int order = 1) {
    if (order < 1) throw DomainError("derivative: order must be >= 1");
    if (axis < 0 || axis >= f.grid.dim) throw DimensionMismatch("derivative: bad axis");
    SpectralField F = transform(f);
    detail::for_each_mode(F, [&](const Wavevector& k, std::complex<double>& c) {
        const std::complex<double> ik(0.0, double(k[axis]));
        c *= std::pow(ik, order);
    });
    return inverse(F);
}

// Fourier multiplier with a real symbol evaluated at each grid wavevector.
inline ScalarField apply_multiplier(const ScalarField& f,
                                    const std::function<double(const Wavevector&)>& symbol) {
    SpectralField F = transform(f);
    detail::for_each_mode(F, [&](const Wavevector& k, std::complex<double>& c) {
        const double s = symbol(k);
        if (!std::isfinite(s)) throw InvalidField("apply_multiplier: non-finite symbol");
        c *= s;
    });
    detail::hermitian_symmetrize(F);
    return inverse(F);
}

// |D|^s with |D|^0 := identity also on the zero mode.
inline ScalarField fractional_laplacian(const ScalarField& f, double s) {
    return apply_multiplier(f, [s](const Wavevector& k) {
        const double kn = wavevector_norm(k);
        return kn == 0.0 ? (s == 0.0 ? 1.0 : 0.0) : std::pow(kn, s);
    });
}

inline double integrate(const ScalarField& f) {
    double sum = 0.0;
    for (double v : f.values) sum += v;
    return sum / double(f.size()) * f.grid.volume();
}

inline double inner(const ScalarField& f, const ScalarField& g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] * g[i];
    return sum / double(f.size()) * f.grid.volume();
}

inline double l2_norm(const ScalarField& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

inline int dealias_cutoff(int n) { return n / 3; }

// 2/3 rule: zero every mode with any |k_i| > n/3.
inline SpectralField dealias(const SpectralField& F) {
    SpectralField out = F;
    const int cut = dealias_cutoff(F.grid.n);
    detail::for_each_mode(out, [&](const Wavevector& k, std::complex<double>& c) {
        if (std::abs(k[0]) > cut || std::abs(k[1]) > cut) c = 0.0;
    });
    return out;
}

inline ScalarField dealias(const ScalarField& f) { return inverse(dealias(transform(f))); }

inline SpectralField band_limit(const SpectralField& F, int kmax) {
    SpectralField out = F;
    detail::for_each_mode(out, [&](const Wavevector& k, std::complex<double>& c) {
        if (std::abs(k[0]) > kmax || std::abs(k[1]) > kmax) c = 0.0;
    });
    return out;
}

// Gradient components; d=1 returns just the x-derivative.
inline std::vector<ScalarField> gradient(const ScalarField& f) {
    std::vector<ScalarField> g;
    for (int a = 0; a < f.grid.dim; ++a) g.push_back(derivative(f, a, 1));
    return g;
}

inline ScalarField laplacian(const ScalarField& f) {
    SpectralField F = transform(f);
    detail::for_each_mode(F, [&](const Wavevector& k, std::complex<double>& c) {
        c *= -(double(k[0]) * k[0] + double(k[1]) * k[1]);
    });
    return inverse(F);
}

inline ScalarField divergence(const std::vector<ScalarField>& v) {
    ScalarField out = derivative(v[0], 0, 1);
    for (int a = 1; a < int(v.size()); ++a) out = out + derivative(v[a], a, 1);
    return out;
}

inline double grad_sup_norm(const ScalarField& f) {
    double m = 0.0;
    for (const auto& g : gradient(f))
        for (double v : g.values) m = std::max(m, std::abs(v));
    return m;
}

// Pointwise |grad f|^2 without dealiasing (caller decides).
inline ScalarField grad_squared(const ScalarField& f) {
    auto g = gradient(f);
    ScalarField out = g[0] * g[0];
    for (int a = 1; a < int(g.size()); ++a) out = out + g[a] * g[a];
    return out;
}

inline double parseval_sum(const SpectralField& F) {
    double s = 0.0;
    for (const auto& c : F.coeffs) s += std::norm(c);
    return s;
}

} // namespace fslab
