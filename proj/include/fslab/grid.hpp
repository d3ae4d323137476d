#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "fslab/errors.hpp"

namespace fslab {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Uniform periodic grid on T^d, d in {1,2}, period 2*pi per axis.
// Integer wavevectors; node x_j = 2*pi*j/n.
struct TorusGrid {
    int dim = 1;
    int n = 0; // points per axis, even, >= 8

    TorusGrid() = default;
    TorusGrid(int dim_, int n_) : dim(dim_), n(n_) {
        if (dim != 1 && dim != 2)
            throw GeometryError("TorusGrid: dim must be 1 or 2");
        if (n < 8 || n % 2 != 0)
            throw GeometryError("TorusGrid: n must be even and >= 8");
    }

    std::size_t size() const { return dim == 1 ? std::size_t(n) : std::size_t(n) * n; }
    double node(int j) const { return two_pi * j / n; }
    double cell_volume() const { return std::pow(two_pi / n, dim); }
    double volume() const { return std::pow(two_pi, dim); }

    // Signed wavevector component for storage index j (Nyquist lands at -n/2).
    int wavenumber(int j) const { return j <= n / 2 ? j : j - n; }

    bool operator==(const TorusGrid& o) const { return dim == o.dim && n == o.n; }
};

// Real scalar field sampled on a TorusGrid. Row-major for d=2:
// values[i0*n + i1] = f(x_{i0}, x_{i1}).
struct ScalarField {
    TorusGrid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const TorusGrid& g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    double& at(int i0, int i1) { return values[std::size_t(i0) * grid.n + i1]; }
    double at(int i0, int i1) const { return values[std::size_t(i0) * grid.n + i1]; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double min() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::min(m, v);
        return m;
    }
    double max() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::max(m, v);
        return m;
    }
    double max_abs() const { return std::max(std::abs(min()), std::abs(max())); }
};

// Build a field from a pointwise function of the node coordinates.
inline ScalarField make_field(const TorusGrid& g, const std::function<double(double)>& f) {
    if (g.dim != 1) throw DimensionMismatch("make_field: 1-argument sampler needs dim=1");
    ScalarField out(g);
    for (int j = 0; j < g.n; ++j) out[j] = f(g.node(j));
    return out;
}

inline ScalarField make_field(const TorusGrid& g,
                              const std::function<double(double, double)>& f) {
    if (g.dim != 2) throw DimensionMismatch("make_field: 2-argument sampler needs dim=2");
    ScalarField out(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) out.at(i, j) = f(g.node(i), g.node(j));
    return out;
}

// Complex Fourier coefficients of a real field, standard FFT ordering per axis.
// Hermitian symmetry coeffs(-k) = conj(coeffs(k)); Nyquist modes zeroed.
struct SpectralField {
    TorusGrid grid;
    std::vector<std::complex<double>> coeffs;

    SpectralField() = default;
    explicit SpectralField(const TorusGrid& g)
        : grid(g), coeffs(g.size(), std::complex<double>(0.0, 0.0)) {}

    std::complex<double>& operator[](std::size_t i) { return coeffs[i]; }
    std::complex<double> operator[](std::size_t i) const { return coeffs[i]; }

    std::complex<double>& at(int j0, int j1) {
        return coeffs[std::size_t(j0) * grid.n + j1];
    }

    // Coefficient of e^{i k x} for signed k (d=1).
    std::complex<double> mode(int k) const {
        int j = k >= 0 ? k : k + grid.n;
        return coeffs[std::size_t(j)];
    }
    // Coefficient of e^{i (k0 x0 + k1 x1)} (d=2).
    std::complex<double> mode(int k0, int k1) const {
        int j0 = k0 >= 0 ? k0 : k0 + grid.n;
        int j1 = k1 >= 0 ? k1 : k1 + grid.n;
        return coeffs[std::size_t(j0) * grid.n + j1];
    }
};

// Pointwise arithmetic helpers used throughout the nonlinear terms.
inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}
inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}
inline ScalarField operator*(double s, const ScalarField& a) {
    ScalarField out = a;
    for (double& v : out.values) v *= s;
    return out;
}
inline ScalarField operator+(const ScalarField& a, double s) {
    ScalarField out = a;
    for (double& v : out.values) v += s;
    return out;
}

template <class F>
ScalarField map_field(const ScalarField& a, F&& f) {
    ScalarField out = a;
    for (double& v : out.values) v = f(v);
    return out;
}

} // namespace fslab
