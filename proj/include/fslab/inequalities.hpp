#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "fslab/constants.hpp"
#include "fslab/functionals.hpp"
#include "fslab/harmonic.hpp"
#include "fslab/spectral.hpp"

namespace fslab {

// Band-limited random smooth fields with |coeff(k)| ~ |k|^{-decay}; the
// offset keeps the field positive when an inequality needs it. Band edge at
// 2n/5 keeps quartic integrands alias-free in quadrature.
struct RandomFieldSpec {
    TorusGrid grid{1, 64};
    double spectral_decay = 2.5;
    double amplitude = 1.0;
    double offset = 0.0;         // 0 requests the automatic positive offset
    bool ensure_positive = true; // false leaves the field mean-free
    std::uint64_t seed = 0;
};

inline ScalarField random_field(const RandomFieldSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int kmax = 2 * spec.grid.n / 5;

    SpectralField F(spec.grid);
    auto put = [&](int j0, int j1, const Wavevector& k) {
        const double kn = wavevector_norm(k);
        if (kn == 0.0 || std::abs(k[0]) > kmax || std::abs(k[1]) > kmax) return;
        const double mag = std::pow(kn, -spec.spectral_decay);
        const std::complex<double> c(gauss(rng), gauss(rng));
        std::size_t p = spec.grid.dim == 1 ? std::size_t(j0)
                                           : std::size_t(j0) * spec.grid.n + j1;
        F.coeffs[p] = 0.5 * spec.amplitude * mag * c;
    };
    const int n = spec.grid.n;
    if (spec.grid.dim == 1) {
        for (int j = 0; j < n; ++j) put(j, 0, {spec.grid.wavenumber(j), 0});
    } else {
        for (int j0 = 0; j0 < n; ++j0)
            for (int j1 = 0; j1 < n; ++j1)
                put(j0, j1, {spec.grid.wavenumber(j0), spec.grid.wavenumber(j1)});
    }
    detail::hermitian_symmetrize(F);
    detail::zero_nyquist(F);
    ScalarField f = inverse(F);

    double offset = spec.offset;
    if (offset <= 0.0) {
        // Riemann-zeta style bound on the coefficient sum keeps min f > 0.
        offset = 4.0 * spec.amplitude;
    }
    const double fmin = f.min();
    if (offset > 0.0 && fmin + offset <= 0.0) offset = -2.0 * fmin + spec.amplitude;
    for (double& v : f.values) v += offset;
    return f;
}

struct InequalityReport {
    std::string name;
    int trials = 0;
    double worst_lhs = 0.0;
    double worst_rhs = 0.0;
    double min_margin = 1e300; // (rhs - lhs) normalized by rhs
    int violations = 0;
    std::vector<std::uint64_t> seeds_of_violations;
    std::uint64_t worst_seed = 0;

    void record(double lhs, double rhs, std::uint64_t seed) {
        ++trials;
        const double denom = std::abs(rhs) > 1e-12 ? std::abs(rhs) : 1.0;
        const double margin = (rhs - lhs) / denom;
        if (margin < min_margin) {
            min_margin = margin;
            worst_lhs = lhs;
            worst_rhs = rhs;
            worst_seed = seed;
        }
        if (margin < -1e-10) {
            ++violations;
            seeds_of_violations.push_back(seed);
        }
    }

    nlohmann::json to_json() const {
        return {{"name", name},
                {"trials", trials},
                {"lhs", worst_lhs},
                {"rhs", worst_rhs},
                {"min_margin", min_margin},
                {"violations", violations},
                {"worst_seed", worst_seed},
                {"seeds_of_violations", seeds_of_violations}};
    }
};

// Sobolev-type inequality: for mu = -1 the Bernis form
//   int |grad theta^{1/2}|^4 <= (9/16) int (lap theta)^2,
// otherwise the uniform-in-mu variant
//   (mu^2/3) int theta^{mu-1}|grad theta|^4
//     <= int theta^{mu+1}(lap theta)^2 + 2 int theta^{mu+1}|hess theta|^2.
inline InequalityReport check_sobolev(const ScalarField& theta, double mu,
                                      std::uint64_t seed = 0) {
    require_positive(theta, "check_sobolev");
    InequalityReport rep;
    rep.name = "sobolev(mu=" + std::to_string(mu) + ")";

    ScalarField g2 = grad_squared(theta);
    ScalarField lap = laplacian(theta);
    double lhs, rhs;
    if (mu == -1.0) {
        ScalarField w(theta.grid);
        for (std::size_t p = 0; p < theta.size(); ++p)
            w[p] = g2[p] * g2[p] / (theta[p] * theta[p]);
        lhs = integrate(w) / 16.0;
        rhs = 9.0 / 16.0 * inner(lap, lap);
    } else {
        ScalarField tm1 = map_field(theta, [&](double v) { return std::pow(v, mu - 1.0); });
        ScalarField tp1 = map_field(theta, [&](double v) { return std::pow(v, mu + 1.0); });
        lhs = mu * mu / 3.0 * integrate(tm1 * (g2 * g2));
        rhs = integrate(tp1 * (lap * lap)) + 2.0 * integrate(tp1 * hessian_squared(theta));
    }
    rep.record(lhs, rhs, seed);
    return rep;
}

// Rellich-type control of the DtN by the tangential gradient:
//   int (G(h)zeta)^2 <= int (1+|grad h|^2) |grad zeta - B grad h|^2,
//   B = (G(h)zeta + grad zeta . grad h)/(1+|grad h|^2).
inline InequalityReport check_rellich(const ScalarField& h, const ScalarField& zeta,
                                      const StripConfig& strip = {},
                                      std::uint64_t seed = 0) {
    InequalityReport rep;
    rep.name = "rellich";
    ScalarField G = dtn(h, zeta, strip);
    ScalarField g2 = grad_squared(h);

    ScalarField B(h.grid);
    {
        ScalarField dot(h.grid);
        for (int a = 0; a < h.grid.dim; ++a) {
            ScalarField za = derivative(zeta, a, 1);
            ScalarField ha = derivative(h, a, 1);
            for (std::size_t p = 0; p < h.size(); ++p) dot[p] += za[p] * ha[p];
        }
        for (std::size_t p = 0; p < h.size(); ++p) B[p] = (G[p] + dot[p]) / (1.0 + g2[p]);
    }

    ScalarField rhs_int(h.grid);
    for (int a = 0; a < h.grid.dim; ++a) {
        ScalarField za = derivative(zeta, a, 1);
        ScalarField ha = derivative(h, a, 1);
        for (std::size_t p = 0; p < h.size(); ++p) {
            const double va = za[p] - B[p] * ha[p];
            rhs_int[p] += va * va;
        }
    }
    for (std::size_t p = 0; p < h.size(); ++p) rhs_int[p] *= 1.0 + g2[p];

    rep.record(inner(G, G), integrate(rhs_int), seed);
    return rep;
}

// Pointwise (div v)^2 <= d |jacobian v|^2 over the grid; reports the worst
// margin over nodes.
inline InequalityReport check_div_bound(const std::vector<ScalarField>& v) {
    if (v.empty()) throw DomainError("check_div_bound: empty vector field");
    const TorusGrid grid = v[0].grid;
    const int d = grid.dim;
    if (int(v.size()) != d) throw DimensionMismatch("check_div_bound: needs d components");

    ScalarField div = divergence(v);
    ScalarField jac2(grid);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            ScalarField dab = derivative(v[a], b, 1);
            for (std::size_t p = 0; p < grid.size(); ++p) jac2[p] += dab[p] * dab[p];
        }

    InequalityReport rep;
    rep.name = "div_bound";
    for (std::size_t p = 0; p < grid.size(); ++p)
        rep.record(div[p] * div[p], double(d) * jac2[p], 0);
    rep.trials = 1;
    return rep;
}

enum class InequalitySelector { Sobolev, Rellich, DivBound };

// Deterministic randomized sweep; per-trial seed is spec.seed + index so
// serial and parallel runs agree.
inline InequalityReport fuzz(const RandomFieldSpec& spec, InequalitySelector which,
                             int trials, double mu = -1.0, const StripConfig& strip = {}) {
    if (trials < 1) throw DomainError("fuzz: trials must be >= 1");
    InequalityReport total;
    switch (which) {
    case InequalitySelector::Sobolev:
        total.name = "sobolev(mu=" + std::to_string(mu) + ")";
        break;
    case InequalitySelector::Rellich: total.name = "rellich"; break;
    case InequalitySelector::DivBound: total.name = "div_bound"; break;
    }

    for (int i = 0; i < trials; ++i) {
        RandomFieldSpec s = spec;
        s.seed = spec.seed + std::uint64_t(i);
        if (which == InequalitySelector::Sobolev) {
            ScalarField theta = random_field(s);
            InequalityReport r = check_sobolev(theta, mu, s.seed);
            total.record(r.worst_lhs, r.worst_rhs, s.seed);
        } else if (which == InequalitySelector::Rellich) {
            RandomFieldSpec hs = s;
            hs.amplitude = std::min(spec.amplitude, 0.15);
            hs.offset = 1e-300; // mean-free surface, no positivity needed
            ScalarField h = random_field(hs);
            for (double& x : h.values) x -= 1e-300;
            s.seed += 0x9e3779b97f4a7c15ull;
            ScalarField zeta = random_field(s);
            InequalityReport r = check_rellich(h, zeta, strip, s.seed);
            total.record(r.worst_lhs, r.worst_rhs, s.seed);
        } else {
            ScalarField f = random_field(s);
            std::vector<ScalarField> v = gradient(f);
            InequalityReport r = check_div_bound(v);
            total.record(r.worst_lhs, r.worst_rhs, s.seed);
        }
    }
    return total;
}

} // namespace fslab
