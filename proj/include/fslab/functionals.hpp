#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fslab/equations.hpp"
#include "fslab/harmonic.hpp"
#include "fslab/spectral.hpp"

namespace fslab {

enum class FunctionalTag {
    L2,
    PowerMass,          // integral of h^{m+1}
    Area,
    Boltzmann,          // integral of h log h
    DirichletEnergyDtN, // integral of h G(h)h
    J,                  // integral of kappa G(h)h
    WeightedGradient,   // integral of h^m |grad h|^2
    Laugesen,           // integral of h^{-p} h_x^2, d=1
    ArctanSlope,        // integral of h_x arctan(h_x), d=1
    TimeDerivL2,        // integral of (h_t)^2
    CurvatureEnergy,    // integral of (1+h_x^2) kappa^2, d=1
    ConvexPhi,          // integral of Phi(h)
};

enum class PhiPreset { Square, Fourth, Exp };

struct FunctionalKind {
    FunctionalTag tag = FunctionalTag::L2;
    double param = 0.0;
    PhiPreset preset = PhiPreset::Square;

    static FunctionalKind l2() { return {FunctionalTag::L2}; }
    static FunctionalKind power_mass(double m) { return {FunctionalTag::PowerMass, m}; }
    static FunctionalKind area() { return {FunctionalTag::Area}; }
    static FunctionalKind boltzmann() { return {FunctionalTag::Boltzmann}; }
    static FunctionalKind dirichlet_dtn() { return {FunctionalTag::DirichletEnergyDtN}; }
    static FunctionalKind j() { return {FunctionalTag::J}; }
    static FunctionalKind weighted_gradient(double m) {
        return {FunctionalTag::WeightedGradient, m};
    }
    static FunctionalKind laugesen(double p) { return {FunctionalTag::Laugesen, p}; }
    static FunctionalKind arctan_slope() { return {FunctionalTag::ArctanSlope}; }
    static FunctionalKind time_deriv_l2() { return {FunctionalTag::TimeDerivL2}; }
    static FunctionalKind curvature_energy() { return {FunctionalTag::CurvatureEnergy}; }
    static FunctionalKind convex_phi(PhiPreset p) {
        FunctionalKind k{FunctionalTag::ConvexPhi};
        k.preset = p;
        return k;
    }

    bool needs_positivity() const {
        switch (tag) {
        case FunctionalTag::Boltzmann: return true;
        case FunctionalTag::PowerMass: return true;
        case FunctionalTag::WeightedGradient: return param != 0.0;
        case FunctionalTag::Laugesen: return param != 0.0;
        default: return false;
        }
    }
    bool needs_d1() const {
        return tag == FunctionalTag::Laugesen || tag == FunctionalTag::ArctanSlope ||
               tag == FunctionalTag::CurvatureEnergy;
    }
    bool needs_dtn() const {
        return tag == FunctionalTag::DirichletEnergyDtN || tag == FunctionalTag::J;
    }
    bool needs_rate() const { return tag == FunctionalTag::TimeDerivL2; }

    std::string name() const {
        auto num = [](double v) {
            std::string s = std::to_string(v);
            while (s.size() > 1 && s.back() == '0') s.pop_back();
            if (!s.empty() && s.back() == '.') s.pop_back();
            return s;
        };
        switch (tag) {
        case FunctionalTag::L2: return "L2";
        case FunctionalTag::PowerMass: return "PowerMass(" + num(param) + ")";
        case FunctionalTag::Area: return "Area";
        case FunctionalTag::Boltzmann: return "Boltzmann";
        case FunctionalTag::DirichletEnergyDtN: return "DirichletEnergyDtN";
        case FunctionalTag::J: return "J";
        case FunctionalTag::WeightedGradient: return "WeightedGradient(" + num(param) + ")";
        case FunctionalTag::Laugesen: return "Laugesen(" + num(param) + ")";
        case FunctionalTag::ArctanSlope: return "ArctanSlope";
        case FunctionalTag::TimeDerivL2: return "TimeDerivL2";
        case FunctionalTag::CurvatureEnergy: return "CurvatureEnergy";
        case FunctionalTag::ConvexPhi:
            switch (preset) {
            case PhiPreset::Square: return "ConvexPhi(square)";
            case PhiPreset::Fourth: return "ConvexPhi(fourth)";
            case PhiPreset::Exp: return "ConvexPhi(exp)";
            }
        }
        return "?";
    }
};

struct FunctionalSample {
    double t = 0.0;
    FunctionalKind kind;
    double value = 0.0;
    std::optional<double> dissipation; // analytic -dI/dt when a formula exists
};

inline constexpr double positivity_floor = 1e-8;

inline void require_positive(const ScalarField& h, const char* who) {
    if (h.min() <= positivity_floor)
        throw PositivityViolated(std::string(who) + ": field not strictly positive");
}

// Mean curvature of the graph of h, in divergence form so that its integral
// vanishes identically.
inline ScalarField curvature(const ScalarField& h) {
    auto g = gradient(h);
    ScalarField den(h.grid);
    for (std::size_t p = 0; p < h.size(); ++p) {
        double g2 = 0.0;
        for (const auto& ga : g) g2 += ga[p] * ga[p];
        den[p] = 1.0 / std::sqrt(1.0 + g2);
    }
    std::vector<ScalarField> flux;
    for (auto& ga : g) flux.push_back(dealias(ga * den));
    return -1.0 * divergence(flux);
}

// |hess h|^2 pointwise (sum of squares of all second derivatives).
inline ScalarField hessian_squared(const ScalarField& h) {
    ScalarField out(h.grid);
    for (int a = 0; a < h.grid.dim; ++a)
        for (int b = 0; b < h.grid.dim; ++b) {
            ScalarField hab = derivative(derivative(h, a, 1), b, 1);
            for (std::size_t p = 0; p < h.size(); ++p) out[p] += hab[p] * hab[p];
        }
    return out;
}

inline double evaluate(const FunctionalKind& kind, const ScalarField& h,
                       const std::optional<ScalarField>& h_t = std::nullopt,
                       const StripConfig& cfg = {}) {
    if (kind.needs_d1() && h.grid.dim != 1)
        throw DimensionMismatch(kind.name() + " is defined for d=1 only");
    if (kind.needs_positivity()) require_positive(h, kind.name().c_str());

    switch (kind.tag) {
    case FunctionalTag::L2:
        return inner(h, h);
    case FunctionalTag::PowerMass: {
        if (kind.param == 0.0) return integrate(h);
        return integrate(map_field(h, [&](double v) { return std::pow(v, kind.param + 1.0); }));
    }
    case FunctionalTag::Area: {
        ScalarField g2 = grad_squared(h);
        return integrate(map_field(g2, [](double v) { return std::sqrt(1.0 + v); }));
    }
    case FunctionalTag::Boltzmann:
        return integrate(map_field(h, [](double v) { return v * std::log(v); }));
    case FunctionalTag::DirichletEnergyDtN:
        return inner(h, dtn(h, h, cfg));
    case FunctionalTag::J:
        return inner(curvature(h), dtn(h, h, cfg));
    case FunctionalTag::WeightedGradient: {
        ScalarField g2 = grad_squared(h);
        ScalarField w = kind.param == 0.0
                            ? g2
                            : map_field(h, [&](double v) { return std::pow(v, kind.param); }) * g2;
        return integrate(w);
    }
    case FunctionalTag::Laugesen: {
        ScalarField hx = derivative(h, 0, 1);
        ScalarField w = hx * hx;
        if (kind.param != 0.0)
            w = map_field(h, [&](double v) { return std::pow(v, -kind.param); }) * w;
        return integrate(w);
    }
    case FunctionalTag::ArctanSlope: {
        ScalarField hx = derivative(h, 0, 1);
        return integrate(map_field(hx, [](double v) { return v * std::atan(v); }));
    }
    case FunctionalTag::TimeDerivL2:
        if (!h_t) throw DomainError("TimeDerivL2 requires h_t");
        return inner(*h_t, *h_t);
    case FunctionalTag::CurvatureEnergy: {
        ScalarField k = curvature(h);
        ScalarField hx = derivative(h, 0, 1);
        ScalarField w(h.grid);
        for (std::size_t p = 0; p < h.size(); ++p)
            w[p] = (1.0 + hx[p] * hx[p]) * k[p] * k[p];
        return integrate(w);
    }
    case FunctionalTag::ConvexPhi:
        switch (kind.preset) {
        case PhiPreset::Square: return integrate(h * h);
        case PhiPreset::Fourth: return integrate(map_field(h, [](double v) { return v * v * v * v; }));
        case PhiPreset::Exp: return integrate(map_field(h, [](double v) { return std::exp(v); }));
        }
    }
    throw DomainError("evaluate: unknown functional");
}

// theta = G(h)(zeta) - div(zeta grad h) with zeta = |grad_{t,x} h|^2/(1+|grad h|^2).
// Cross-checked against the equivalent B(h)* route; disagreement flags an
// inconsistent solve.
inline ScalarField theta_field(const ScalarField& h, const ScalarField& h_t,
                               const StripConfig& cfg = {}) {
    ScalarField g2 = grad_squared(h);
    ScalarField num(h.grid);
    for (std::size_t p = 0; p < h.size(); ++p) num[p] = h_t[p] * h_t[p] + g2[p];
    ScalarField zeta(h.grid);
    for (std::size_t p = 0; p < h.size(); ++p) zeta[p] = num[p] / (1.0 + g2[p]);
    zeta = dealias(zeta);

    ScalarField theta = dtn(h, zeta, cfg);
    std::vector<ScalarField> flux;
    for (int a = 0; a < h.grid.dim; ++a) flux.push_back(dealias(zeta * derivative(h, a, 1)));
    ScalarField div = divergence(flux);
    for (std::size_t p = 0; p < h.size(); ++p) theta[p] -= div[p];
    theta = dealias(theta);

    ScalarField alt = b_star(h, dealias(num), cfg);
    double diff = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < h.size(); ++p) {
        diff = std::max(diff, std::abs(theta[p] - alt[p]));
        scale = std::max(scale, std::abs(theta[p]));
    }
    if (diff > 1e-8 * (1.0 + scale))
        throw Error("theta_field: computation paths disagree by " + std::to_string(diff));
    return theta;
}

// Analytic dissipation rate -dI/dt for (functional, equation) pairs with a
// closed form. Unsupported pairs raise NoClosedForm.
inline double dissipation_rate(const FunctionalKind& kind, const EquationKind& eq,
                               const ScalarField& h, const StripConfig& cfg = {}) {
    const auto no_form = [&]() -> double {
        throw NoClosedForm("dissipation_rate: no closed form for " + kind.name() + " under " +
                           eq.name());
    };

    switch (eq.tag) {
    case EquationTag::Heat: {
        if (kind.tag == FunctionalTag::L2) return 2.0 * integrate(grad_squared(h));
        if (kind.tag == FunctionalTag::Boltzmann) {
            require_positive(h, "dissipation_rate");
            ScalarField g2 = grad_squared(h);
            ScalarField w(h.grid);
            for (std::size_t p = 0; p < h.size(); ++p) w[p] = g2[p] / h[p];
            return integrate(w);
        }
        return no_form();
    }
    case EquationTag::MeanCurvature: {
        if (kind.tag == FunctionalTag::Area) {
            ScalarField k = curvature(h);
            ScalarField g2 = grad_squared(h);
            ScalarField w(h.grid);
            for (std::size_t p = 0; p < h.size(); ++p)
                w[p] = std::sqrt(1.0 + g2[p]) * k[p] * k[p];
            return integrate(w);
        }
        if (h.grid.dim == 1 && kind.tag == FunctionalTag::L2) {
            ScalarField hx = derivative(h, 0, 1);
            return 2.0 * integrate(map_field(hx, [](double v) { return v * std::atan(v); }));
        }
        if (h.grid.dim == 1 && kind.tag == FunctionalTag::ArctanSlope) {
            ScalarField k = curvature(h);
            return 2.0 * inner(k, k);
        }
        if (h.grid.dim == 1 && kind.tag == FunctionalTag::TimeDerivL2) {
            // d_t h solves a divergence-form heat equation; rate from its
            // energy identity.
            ScalarField hx = derivative(h, 0, 1);
            ScalarField ht = dealias(map_field(hx, [](double v) { return std::atan(v); }));
            ht = derivative(ht, 0, 1); // equals RHS of the arctan formulation
            ScalarField htx = derivative(ht, 0, 1);
            ScalarField w(h.grid);
            for (std::size_t p = 0; p < h.size(); ++p)
                w[p] = htx[p] * htx[p] / (1.0 + hx[p] * hx[p]);
            return 2.0 * integrate(w);
        }
        return no_form();
    }
    case EquationTag::HeleShaw: {
        if (kind.tag == FunctionalTag::L2) {
            double r = 0.0;
            if (eq.g > 0.0) r += 2.0 * eq.g * inner(h, dtn(h, h, cfg));
            if (eq.mu > 0.0) r += 2.0 * eq.mu * inner(curvature(h), dtn(h, h, cfg));
            return r;
        }
        if (kind.tag == FunctionalTag::Area) {
            ScalarField k = curvature(h);
            double r = 0.0;
            if (eq.g > 0.0) r += eq.g * inner(k, dtn(h, h, cfg));
            if (eq.mu > 0.0) r += eq.mu * inner(k, dtn(h, k, cfg));
            return r;
        }
        if (kind.tag == FunctionalTag::ConvexPhi) {
            ScalarField dphi;
            switch (kind.preset) {
            case PhiPreset::Square: dphi = 2.0 * h; break;
            case PhiPreset::Fourth:
                dphi = map_field(h, [](double v) { return 4.0 * v * v * v; });
                break;
            case PhiPreset::Exp:
                dphi = map_field(h, [](double v) { return std::exp(v); });
                break;
            }
            ScalarField data(h.grid);
            for (std::size_t p = 0; p < h.size(); ++p) data[p] = eq.g * h[p];
            if (eq.mu > 0.0) {
                ScalarField k = curvature(h);
                for (std::size_t p = 0; p < h.size(); ++p) data[p] += eq.mu * k[p];
            }
            return inner(dphi, dtn(h, dealias(data), cfg));
        }
        if (kind.tag == FunctionalTag::J && eq.g == 1.0 && eq.mu == 0.0 && h.grid.dim == 1) {
            // d=1 identity: -dJ/dt = H - int kappa theta, with
            // H = int (|grad h_t|^2 + |hess h|^2)/(1+|grad h|^2)^{3/2}.
            ScalarField ht = -1.0 * dtn(h, h, cfg);
            ScalarField g2 = grad_squared(h);
            ScalarField htx = derivative(ht, 0, 1);
            ScalarField hxx = derivative(h, 0, 2);
            ScalarField w(h.grid);
            for (std::size_t p = 0; p < h.size(); ++p)
                w[p] = (htx[p] * htx[p] + hxx[p] * hxx[p]) /
                       std::pow(1.0 + g2[p], 1.5);
            ScalarField th = theta_field(h, ht, cfg);
            return integrate(w) - inner(curvature(h), th);
        }
        return no_form();
    }
    case EquationTag::Boussinesq: {
        if (kind.tag == FunctionalTag::L2) {
            require_positive(h, "dissipation_rate");
            return 2.0 * integrate(dealias(h * grad_squared(h)));
        }
        if (kind.tag == FunctionalTag::PowerMass) {
            const double m = kind.param;
            if (m == 0.0) return 0.0; // mass is conserved
            ScalarField hm = map_field(h, [&](double v) { return std::pow(v, m); });
            return m * (m + 1.0) * integrate(hm * grad_squared(h));
        }
        if (kind.tag == FunctionalTag::Boltzmann) return integrate(grad_squared(h));
        if (kind.tag == FunctionalTag::WeightedGradient) {
            // Exact identity behind the strong-Lyapunov proof:
            // -d/dt int h^m|grad h|^2 = (m+2)/(m+1) int (div(h^{(m+1)/2} grad h))^2
            //   + m/(m+1) int h^{m+1}(lap h)^2 - (m^2-m+2)/4 int h^{m-1}|grad h|^4.
            const double m = kind.param;
            ScalarField g2 = grad_squared(h);
            ScalarField lap = laplacian(h);
            ScalarField hm1 = map_field(h, [&](double v) { return std::pow(v, m + 1.0); });
            ScalarField hmm1 = map_field(h, [&](double v) { return std::pow(v, m - 1.0); });
            ScalarField hmid = map_field(h, [&](double v) { return std::pow(v, (m + 1.0) / 2.0); });
            std::vector<ScalarField> flux;
            for (int a = 0; a < h.grid.dim; ++a)
                flux.push_back(dealias(hmid * derivative(h, a, 1)));
            ScalarField dv = divergence(flux);
            return (m + 2.0) / (m + 1.0) * inner(dv, dv) +
                   m / (m + 1.0) * integrate(hm1 * (lap * lap)) -
                   (m * m - m + 2.0) / 4.0 * integrate(hmm1 * (g2 * g2));
        }
        if (kind.tag == FunctionalTag::ArctanSlope && h.grid.dim == 1) {
            ScalarField hx = derivative(h, 0, 1);
            ScalarField hxx = derivative(h, 0, 2);
            ScalarField w(h.grid);
            for (std::size_t p = 0; p < h.size(); ++p) {
                const double d = 1.0 + hx[p] * hx[p];
                w[p] = 2.0 * h[p] * hxx[p] * hxx[p] / (d * d);
            }
            return integrate(w);
        }
        return no_form();
    }
    case EquationTag::ThinFilm: {
        if (kind.tag == FunctionalTag::L2) {
            require_positive(h, "dissipation_rate");
            ScalarField lap = laplacian(h);
            ScalarField hs = hessian_squared(h);
            double r = (2.0 / 3.0) * integrate(h * hs) + (1.0 / 3.0) * integrate(h * (lap * lap));
            return r;
        }
        if (kind.tag == FunctionalTag::PowerMass) {
            const double m = kind.param;
            if (m == 0.0) return 0.0;
            ScalarField lap = laplacian(h);
            ScalarField hs = hessian_squared(h);
            ScalarField hm = map_field(h, [&](double v) { return std::pow(v, m); });
            ScalarField hm2 = map_field(h, [&](double v) { return std::pow(v, m - 2.0); });
            ScalarField g2 = grad_squared(h);
            const double pm = (integrate(hm * (2.0 * hs + lap * lap)) -
                               m * (m - 1.0) * integrate(hm2 * (g2 * g2))) / 3.0;
            return m * (m + 1.0) * pm;
        }
        if (kind.tag == FunctionalTag::Boltzmann) {
            ScalarField lap = laplacian(h);
            return inner(lap, lap);
        }
        if (kind.tag == FunctionalTag::WeightedGradient && kind.param == 0.0) {
            ScalarField lap = laplacian(h);
            double r = 0.0;
            for (int a = 0; a < h.grid.dim; ++a) {
                ScalarField da = derivative(lap, a, 1);
                r += integrate(h * (da * da));
            }
            return 2.0 * r;
        }
        return no_form();
    }
    case EquationTag::ThinFilmGravity: {
        if (kind.tag == FunctionalTag::L2 && h.grid.dim == 1) {
            require_positive(h, "dissipation_rate");
            ScalarField hx = derivative(h, 0, 1);
            ScalarField hxx = derivative(h, 0, 2);
            return 2.0 * (eq.g * integrate(h * (hx * hx)) + eq.mu * integrate(h * (hxx * hxx)));
        }
        if (kind.tag == FunctionalTag::WeightedGradient && kind.param == 0.0 &&
            h.grid.dim == 1) {
            ScalarField hxx = derivative(h, 0, 2);
            ScalarField hxxx = derivative(h, 0, 3);
            return 2.0 * (eq.g * integrate(h * (hxx * hxx)) +
                          eq.mu * integrate(h * (hxxx * hxxx)));
        }
        return no_form();
    }
    }
    return no_form();
}

enum class IdentityKind { ThinFilmL2, JDissipationD1, HeatBoltzmannPointwise };

// Equispaced trajectory window around the time where the identity is probed.
// `fields` are the elevations; `rates` the analytic right-hand sides at the
// same instants (only the J identity consumes them).
struct IdentityState {
    std::vector<double> times;
    std::vector<ScalarField> fields;
    std::vector<ScalarField> rates;
    StripConfig strip;
};

namespace detail {

// Second-order central difference of a sampled scalar series at the center.
inline double central_dt(const std::vector<double>& t, const std::vector<double>& v) {
    const std::size_t c = t.size() / 2;
    return (v[c + 1] - v[c - 1]) / (t[c + 1] - t[c - 1]);
}

} // namespace detail

// Residual of an exact dissipation identity along a simulated trajectory,
// with d/dt replaced by a central difference of the samples. Converges to
// zero at min(sampling^2, scheme order).
inline double identity_residual(IdentityKind which, const IdentityState& state) {
    if (state.times.size() < 3 || state.times.size() % 2 == 0)
        throw TooFewSamples("identity_residual: need an odd number (>=3) of samples");
    const std::size_t c = state.times.size() / 2;
    const ScalarField& h = state.fields[c];

    switch (which) {
    case IdentityKind::ThinFilmL2: {
        std::vector<double> l2;
        for (const auto& f : state.fields) l2.push_back(inner(f, f));
        const double dI = detail::central_dt(state.times, l2);
        ScalarField lap = laplacian(h);
        const double rate = (2.0 / 3.0) * integrate(h * hessian_squared(h)) +
                            (1.0 / 3.0) * integrate(h * (lap * lap));
        return std::abs(dI + rate);
    }
    case IdentityKind::HeatBoltzmannPointwise: {
        if (h.min() < 1.0)
            throw PositivityViolated("identity_residual: heat case needs h >= 1");
        std::vector<ScalarField> ent;
        for (const auto& f : state.fields)
            ent.push_back(map_field(f, [](double v) { return v * std::log(v); }));
        const double dt2 = state.times[c + 1] - state.times[c - 1];
        ScalarField lap_ent = laplacian(ent[c]);
        ScalarField g2 = grad_squared(h);
        double worst = 0.0;
        for (std::size_t p = 0; p < h.size(); ++p) {
            const double ddt = (ent[c + 1][p] - ent[c - 1][p]) / dt2;
            worst = std::max(worst, std::abs(ddt - lap_ent[p] + g2[p] / h[p]));
        }
        return worst;
    }
    case IdentityKind::JDissipationD1: {
        if (h.grid.dim != 1)
            throw DimensionMismatch("identity_residual: J identity needs d=1");
        if (state.rates.size() != state.fields.size())
            throw TooFewSamples("identity_residual: J identity needs cached rates");
        std::vector<double> js;
        for (const auto& f : state.fields)
            js.push_back(inner(curvature(f), dtn(f, f, state.strip)));
        const double dJ = detail::central_dt(state.times, js);

        const ScalarField& ht = state.rates[c];
        ScalarField g2 = grad_squared(h);
        ScalarField htx = derivative(ht, 0, 1);
        ScalarField hxx = derivative(h, 0, 2);
        ScalarField w(h.grid);
        for (std::size_t p = 0; p < h.size(); ++p)
            w[p] = (htx[p] * htx[p] + hxx[p] * hxx[p]) / std::pow(1.0 + g2[p], 1.5);
        ScalarField th = theta_field(h, ht, state.strip);
        return std::abs(dJ + integrate(w) - inner(curvature(h), th));
    }
    }
    throw DomainError("identity_residual: unknown identity");
}

} // namespace fslab
