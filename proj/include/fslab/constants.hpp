#pragma once

#include <cmath>

#include "fslab/errors.hpp"

namespace fslab {

// gamma_d(c) = 2c(d + (d+sqrt(d))c) + 4 sqrt(c (d + (d+1)c) (12/(1-2c) + 1)),
// defined for 0 <= c < 1/2 and strictly increasing in c.
inline double gamma_d(double c, int d) {
    if (c < 0.0 || c >= 0.5) throw DomainError("gamma_d: need 0 <= c < 1/2");
    const double dd = double(d);
    const double first = 2.0 * c * (dd + (dd + std::sqrt(dd)) * c);
    const double inside = c * (dd + (dd + 1.0) * c) * (12.0 / (1.0 - 2.0 * c) + 1.0);
    return first + 4.0 * std::sqrt(inside);
}

// Root of gamma_d(c) = 1/2 in [0, 1/4]; bisection keeps clear of the
// 1/(1-2c) pole and needs no derivative.
inline double solve_c_d(int d) {
    if (d < 1) throw DomainError("solve_c_d: d must be >= 1");
    double lo = 0.0, hi = 0.25;
    if (gamma_d(hi, d) < 0.5) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gamma_d(mid, d) < 0.5)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

// Dissipation constants of the thin-film / porous-medium entropy family.
inline double entropy_constant_thin_film(double m) {
    return (-2.0 * m * m + m + 1.0) / 9.0;
}

inline double entropy_constant_boussinesq(double m) {
    if (m == -1.0) throw DomainError("entropy_constant_boussinesq: m = -1");
    return (m + 2.0) / (m + 1.0) * (m + 3.0) * (m + 3.0) / 36.0 -
           (m * m - m + 2.0) / 4.0;
}

struct EntropyConstants {
    double c_thinfilm = 0.0;
    double c_boussinesq = 0.0;
};

inline EntropyConstants entropy_constants(double m) {
    return {entropy_constant_thin_film(m), entropy_constant_boussinesq(m)};
}

// Coercivity margin 1/9 + (1/alpha - 1/4) * 4/(3 alpha - 2)^2, positive for
// every alpha > 2/3.
inline double check_bvy_coercivity(double alpha) {
    if (alpha <= 2.0 / 3.0) throw DomainError("check_bvy_coercivity: alpha must exceed 2/3");
    const double q = 3.0 * alpha - 2.0;
    return 1.0 / 9.0 + (1.0 / alpha - 0.25) * 4.0 / (q * q);
}

} // namespace fslab
