#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fslab/constants.hpp"
#include "fslab/equations.hpp"
#include "fslab/functionals.hpp"
#include "fslab/harmonic.hpp"
#include "fslab/spectral.hpp"

namespace fslab {

struct FlowState {
    double t = 0.0;
    ScalarField h;
    ScalarField h_t; // analytic RHS cached at t
};

enum class Scheme { RK4, IMEX1, IMEX2, IMEX4 };

inline std::string scheme_name(Scheme s) {
    switch (s) {
    case Scheme::RK4: return "rk4";
    case Scheme::IMEX1: return "imex1";
    case Scheme::IMEX2: return "imex2";
    case Scheme::IMEX4: return "imex4";
    }
    return "?";
}

struct StepperConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::RK4;
    double t_end = 1.0;
    double positivity_floor = 1e-6;
    int monitor_stride = 1;
};

// Reusable right-hand-side evaluator. Keeps the strip solver (and its warm
// start) alive across stages for the nonlocal flows.
class FlowRig {
public:
    FlowRig(EquationKind eq, const TorusGrid& grid, StripConfig strip)
        : eq_(eq), grid_(grid), strip_(strip) {}

    ScalarField rhs(const ScalarField& h) {
        if (eq_.needs_positivity() && h.min() <= 0.0)
            throw PositivityViolated("rhs: " + eq_.name() + " needs positive h");
        switch (eq_.tag) {
        case EquationTag::Heat:
            return laplacian(h);
        case EquationTag::MeanCurvature: {
            if (grid_.dim == 1) {
                ScalarField hx = derivative(h, 0, 1);
                ScalarField at = dealias(map_field(hx, [](double v) { return std::atan(v); }));
                return derivative(at, 0, 1);
            }
            ScalarField k = curvature(h);
            ScalarField g2 = grad_squared(h);
            ScalarField out(grid_);
            for (std::size_t p = 0; p < out.size(); ++p)
                out[p] = -std::sqrt(1.0 + g2[p]) * k[p];
            return dealias(out);
        }
        case EquationTag::HeleShaw: {
            ScalarField data(grid_);
            for (std::size_t p = 0; p < data.size(); ++p) data[p] = eq_.g * h[p];
            if (eq_.mu != 0.0) {
                ScalarField k = curvature(h);
                for (std::size_t p = 0; p < data.size(); ++p) data[p] += eq_.mu * k[p];
            }
            ensure_solver(h);
            solver_->set_surface(h);
            return -1.0 * solver_->solve(dealias(data)).surface_dtn();
        }
        case EquationTag::Boussinesq: {
            std::vector<ScalarField> flux;
            for (int a = 0; a < grid_.dim; ++a) flux.push_back(dealias(h * derivative(h, a, 1)));
            return divergence(flux);
        }
        case EquationTag::ThinFilm: {
            ScalarField lap = laplacian(h);
            std::vector<ScalarField> flux;
            for (int a = 0; a < grid_.dim; ++a) flux.push_back(dealias(h * derivative(lap, a, 1)));
            return -1.0 * divergence(flux);
        }
        case EquationTag::ThinFilmGravity: {
            ScalarField lap = laplacian(h);
            std::vector<ScalarField> flux;
            for (int a = 0; a < grid_.dim; ++a) {
                ScalarField fa = dealias(h * derivative(h, a, 1));
                ScalarField fb = dealias(h * derivative(lap, a, 1));
                for (std::size_t p = 0; p < fa.size(); ++p)
                    fa[p] = eq_.g * fa[p] - eq_.mu * fb[p];
                flux.push_back(fa);
            }
            return divergence(flux);
        }
        }
        throw DomainError("rhs: unknown equation");
    }

    // Surface gradient sup norm, sup |G(h)h| and inf a for the max-principle
    // trace (Hele-Shaw only; one extra solve per sample).
    struct SurfaceStats {
        double sup_grad = 0.0;
        double sup_dtn = 0.0;
        double inf_a = 0.0;
    };
    SurfaceStats surface_stats(const ScalarField& h) {
        SurfaceStats s;
        s.sup_grad = grad_sup_norm(h);
        ensure_solver(h);
        solver_->set_surface(h);
        ScalarField G = solver_->solve(h).surface_dtn();
        s.sup_dtn = G.max_abs();
        ScalarField g2 = grad_squared(h);
        double inf_a = std::numeric_limits<double>::max();
        for (std::size_t p = 0; p < h.size(); ++p)
            inf_a = std::min(inf_a, (1.0 - G[p]) / (1.0 + g2[p]));
        s.inf_a = inf_a;
        return s;
    }

    StripSolver* solver(const ScalarField& h) {
        ensure_solver(h);
        return solver_.get();
    }

    const EquationKind& equation() const { return eq_; }
    const StripConfig& strip() const { return strip_; }

private:
    void ensure_solver(const ScalarField& h) {
        if (!solver_) solver_ = std::make_unique<StripSolver>(h, strip_);
    }

    EquationKind eq_;
    TorusGrid grid_;
    StripConfig strip_;
    std::unique_ptr<StripSolver> solver_;
};

// Stiffest linear rate of the semi-discrete system, used by the RK4 dt rule.
// Nonlinear flows are dealias-projected, so their spectrum ends at n/3.
inline double stiffest_rate(const EquationKind& eq, const TorusGrid& grid,
                            const ScalarField& h0) {
    const double kd = double(dealias_cutoff(grid.n));
    const double kn = double(grid.n / 2);
    const double hmax = std::max(h0.max(), 0.0);
    switch (eq.tag) {
    case EquationTag::Heat: return kn * kn;
    case EquationTag::MeanCurvature: return kd * kd;
    case EquationTag::HeleShaw: return eq.g * kd + eq.mu * kd * kd * kd;
    case EquationTag::Boussinesq: return hmax * kd * kd;
    case EquationTag::ThinFilm: return hmax * kd * kd * kd * kd;
    case EquationTag::ThinFilmGravity:
        return hmax * (eq.g * kd * kd + eq.mu * kd * kd * kd * kd);
    }
    return 0.0;
}

namespace detail {

// Symbol of the constant-coefficient stiff part treated exactly by the
// Lawson (integrating factor) schemes.
inline double stiff_symbol(const EquationKind& eq, double kabs, double k2, double hmax) {
    switch (eq.tag) {
    case EquationTag::Heat: return -k2;
    case EquationTag::MeanCurvature: return -k2;
    case EquationTag::HeleShaw: return -(eq.g * kabs + eq.mu * kabs * k2);
    case EquationTag::Boussinesq: return -hmax * k2;
    case EquationTag::ThinFilm: return -hmax * k2 * k2;
    case EquationTag::ThinFilmGravity: return -hmax * (eq.g * k2 + eq.mu * k2 * k2);
    }
    return 0.0;
}

struct LawsonTables {
    std::vector<double> sym;    // stiff symbol per spectral index
    std::vector<double> e_full; // exp(dt sym)
    std::vector<double> e_half; // exp(dt/2 sym)

    LawsonTables(const EquationKind& eq, const TorusGrid& grid, double hmax, double dt) {
        XSpectralTable t(grid);
        const std::size_t N = grid.size();
        sym.resize(N);
        e_full.resize(N);
        e_half.resize(N);
        for (std::size_t p = 0; p < N; ++p) {
            sym[p] = stiff_symbol(eq, t.kabs[p], t.k2[p], hmax);
            e_full[p] = std::exp(dt * sym[p]);
            e_half[p] = std::exp(0.5 * dt * sym[p]);
        }
    }

    SpectralField to_spec(const ScalarField& f) const { return transform(f); }
    ScalarField weighted(const SpectralField& F, const std::vector<double>& w) const {
        SpectralField out = F;
        for (std::size_t p = 0; p < out.coeffs.size(); ++p) out.coeffs[p] *= w[p];
        return inverse(out);
    }
    ScalarField stiff_apply(const ScalarField& f) const {
        SpectralField F = transform(f);
        for (std::size_t p = 0; p < F.coeffs.size(); ++p) F.coeffs[p] *= sym[p];
        return inverse(F);
    }
};

} // namespace detail

// One time step; RK4 is the classical explicit scheme, the IMEX variants are
// Lawson integrating-factor schemes of order 1, 2 and 4 whose constant
// coefficient stiff part is integrated exactly in Fourier space.
inline FlowState step(FlowRig& rig, const FlowState& state, const StepperConfig& cfg) {
    const EquationKind& eq = rig.equation();
    const ScalarField& h = state.h;
    const double dt = cfg.dt;
    ScalarField hnew;

    // The cached h_t is the RHS at state.h, so stage one is free.
    ScalarField rhs0 = state.h_t.size() == h.size() ? state.h_t : rig.rhs(h);

    if (cfg.scheme == Scheme::RK4) {
        const double rate = stiffest_rate(eq, h.grid, h);
        if (dt * rate > 0.9 + 1e-12)
            throw ValidationError("step: RK4 dt violates dt*rate <= 0.9 (rate " +
                                  std::to_string(rate) + ")");
        ScalarField k1 = rhs0;
        ScalarField k2 = rig.rhs(h + 0.5 * dt * k1);
        ScalarField k3 = rig.rhs(h + 0.5 * dt * k2);
        ScalarField k4 = rig.rhs(h + dt * k3);
        hnew = h + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
        const double hmax = std::max(h.max(), 0.0);
        detail::LawsonTables tab(eq, h.grid, hmax, dt);
        auto N_of = [&](const ScalarField& u) {
            ScalarField r = rig.rhs(u);
            ScalarField s = tab.stiff_apply(u);
            for (std::size_t p = 0; p < r.size(); ++p) r[p] -= s[p];
            return r;
        };
        auto N_first = [&]() {
            ScalarField r = rhs0;
            ScalarField s = tab.stiff_apply(h);
            for (std::size_t p = 0; p < r.size(); ++p) r[p] -= s[p];
            return r;
        };
        if (cfg.scheme == Scheme::IMEX1) {
            ScalarField k1 = N_first();
            hnew = tab.weighted(transform(h + dt * k1), tab.e_full);
        } else if (cfg.scheme == Scheme::IMEX2) {
            ScalarField k1 = N_first();
            ScalarField u1 = tab.weighted(transform(h + dt * k1), tab.e_full);
            ScalarField k2 = N_of(u1);
            hnew = tab.weighted(transform(h + 0.5 * dt * k1), tab.e_full) + 0.5 * dt * k2;
        } else {
            ScalarField k1 = N_first();
            ScalarField Eh = tab.weighted(transform(h), tab.e_half);
            ScalarField k2 = N_of(tab.weighted(transform(h + 0.5 * dt * k1), tab.e_half));
            ScalarField k3 = N_of(Eh + 0.5 * dt * k2);
            ScalarField Ek3 = tab.weighted(transform(k3), tab.e_half);
            ScalarField E2h = tab.weighted(transform(Eh), tab.e_half);
            ScalarField k4 = N_of(E2h + dt * Ek3);
            ScalarField acc = tab.weighted(transform(h + (dt / 6.0) * k1), tab.e_full);
            ScalarField Ek2 = tab.weighted(transform(k2), tab.e_half);
            hnew = acc + (dt / 3.0) * Ek2 + (dt / 3.0) * Ek3 + (dt / 6.0) * k4;
        }
    }

    if (!hnew.all_finite() || hnew.max_abs() > 10.0 * std::max(h.max_abs(), 1e-12))
        throw Unstable("step: field norm grew by more than 10x in one step");
    if (eq.needs_positivity() && hnew.min() < cfg.positivity_floor)
        throw PositivityViolated("step: positivity floor crossed; step rejected");

    FlowState out;
    out.t = state.t + dt;
    out.h = hnew;
    out.h_t = rig.rhs(hnew);
    return out;
}

struct MaxPrincipleTrace {
    std::vector<double> t;
    std::vector<double> sup_grad;
    std::vector<double> sup_dtn;
    std::vector<double> inf_a;
};

struct Trajectory {
    std::vector<FunctionalKind> monitors;
    std::vector<double> times;
    std::vector<std::vector<FunctionalSample>> series; // [monitor][sample]
    MaxPrincipleTrace max_principle;
    FlowState final_state;
    std::string error; // empty when the run completed
};

// Advance to t_end, sampling monitors every monitor_stride steps. Step
// errors truncate the trajectory and are reported in `error`.
inline Trajectory run(const EquationKind& eq, const ScalarField& h0,
                      const StepperConfig& cfg, const StripConfig& strip,
                      const std::vector<FunctionalKind>& monitors) {
    Trajectory traj;
    traj.monitors = monitors;
    traj.series.resize(monitors.size());

    FlowRig rig(eq, h0.grid, strip);
    FlowState state;
    state.t = 0.0;
    state.h = dealias(h0);
    if (eq.needs_positivity() && state.h.min() <= cfg.positivity_floor)
        throw PositivityViolated("run: initial data violates positivity floor");
    state.h_t = rig.rhs(state.h);

    const bool hs = eq.tag == EquationTag::HeleShaw;

    auto sample = [&](const FlowState& s) {
        traj.times.push_back(s.t);
        for (std::size_t i = 0; i < monitors.size(); ++i) {
            FunctionalSample fs;
            fs.t = s.t;
            fs.kind = monitors[i];
            fs.value = evaluate(monitors[i], s.h, s.h_t, strip);
            try {
                fs.dissipation = dissipation_rate(monitors[i], eq, s.h, strip);
            } catch (const NoClosedForm&) {
                fs.dissipation = std::nullopt;
            }
            traj.series[i].push_back(fs);
        }
        if (hs) {
            auto st = rig.surface_stats(s.h);
            traj.max_principle.t.push_back(s.t);
            traj.max_principle.sup_grad.push_back(st.sup_grad);
            traj.max_principle.sup_dtn.push_back(st.sup_dtn);
            traj.max_principle.inf_a.push_back(st.inf_a);
        }
    };

    sample(state);
    const long nsteps = std::lround(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    try {
        for (long i = 1; i <= nsteps; ++i) {
            state = step(rig, state, cfg);
            if (i % cfg.monitor_stride == 0 || i == nsteps) sample(state);
        }
    } catch (const Error& e) {
        traj.error = e.what();
    }
    traj.final_state = state;
    return traj;
}

// Theorem gate: J(h) decays along Hele-Shaw provided sup|grad h0|^2 and
// sup|G(h0)h0|^2 both stay below the dimensional constant c_d.
struct SmallnessReport {
    bool passes = false;
    double c_d = 0.0;
    double sup_grad2 = 0.0;
    double sup_dtn2 = 0.0;
};

inline SmallnessReport smallness_check(const ScalarField& h0, const StripConfig& strip,
                                       int d) {
    SmallnessReport rep;
    rep.c_d = solve_c_d(d);
    const double sg = grad_sup_norm(h0);
    rep.sup_grad2 = sg * sg;
    const double sd = dtn(h0, h0, strip).max_abs();
    rep.sup_dtn2 = sd * sd;
    rep.passes = rep.sup_grad2 <= rep.c_d && rep.sup_dtn2 <= rep.c_d;
    return rep;
}

// Equispaced sample window around t_center for the exact-identity meters.
inline IdentityState sample_window(const EquationKind& eq, const ScalarField& h0,
                                   const StepperConfig& cfg, const StripConfig& strip,
                                   double t_center, int stride, int half_width = 1) {
    FlowRig rig(eq, h0.grid, strip);
    FlowState state;
    state.h = dealias(h0);
    state.h_t = rig.rhs(state.h);

    const long center_steps = std::lround(t_center / cfg.dt);
    const long first = center_steps - long(stride) * half_width;
    if (first < 0) throw DomainError("sample_window: window precedes t=0");

    IdentityState out;
    out.strip = strip;
    for (long i = 0; i <= center_steps + long(stride) * half_width; ++i) {
        if (i >= first && (i - first) % stride == 0) {
            out.times.push_back(state.t);
            out.fields.push_back(state.h);
            out.rates.push_back(state.h_t);
        }
        state = step(rig, state, cfg);
    }
    return out;
}

} // namespace fslab
