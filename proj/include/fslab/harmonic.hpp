#pragma once

#include <complex>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fslab/chebyshev.hpp"
#include "fslab/gmres.hpp"
#include "fslab/spectral.hpp"

namespace fslab {

// Truncated-strip configuration for the harmonic-extension solve.
// beta <= 0 requests the default depth 1 + 2*max|h|.
struct StripConfig {
    double beta = 0.0;
    int m_vert = 48;
    double solve_tol = 1e-12; // preconditioned GMRES target
    int max_iter = 400;
};

using StripMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Discrete harmonic extension below the graph of h in mapped coordinates
// sigma = (y+beta)/(h(x)+beta), sigma in [0,1]. Row j of `phi_mapped` holds
// u(x, sigma_j); sigma ascends so row 0 is the artificial bottom and row
// m_vert-1 the free surface.
struct HarmonicExtension {
    TorusGrid grid;
    double beta = 0.0;
    ScalarField surface;       // h
    ScalarField boundary_data; // psi
    std::shared_ptr<const ChebyshevGrid> cheb;
    StripMatrix phi_mapped;    // u
    StripMatrix phi_sigma;     // du/dsigma
    double residual = 0.0;     // relative residual of the mapped Laplace solve
    int iterations = 0;

    // Geometry caches shared with downstream evaluators.
    Eigen::ArrayXd eta;              // h + beta per x node
    std::vector<ScalarField> hgrad;  // spectral gradient of h
    ScalarField hlap;
    ScalarField g2;                  // |grad h|^2

    int m() const { return cheb->m; }
    int top() const { return cheb->m - 1; }

    // G(h)psi = (d_y phi - grad h . grad phi)|_{y=h}, via the mapped chain rule.
    ScalarField surface_dtn() const {
        const std::size_t N = grid.size();
        ScalarField out(grid);
        for (std::size_t p = 0; p < N; ++p)
            out[p] = (1.0 + g2[p]) * phi_sigma(top(), p) / eta[p];
        ScalarField trace(grid);
        for (std::size_t p = 0; p < N; ++p) trace[p] = phi_mapped(top(), p);
        for (int a = 0; a < grid.dim; ++a) {
            ScalarField ta = derivative(trace, a, 1);
            for (std::size_t p = 0; p < N; ++p) out[p] -= hgrad[a][p] * ta[p];
        }
        return dealias(out);
    }

    // -d_y Q on the free surface, extracted from the strip solution.
    ScalarField taylor_from_strip() const {
        ScalarField out(grid);
        for (std::size_t p = 0; p < grid.size(); ++p)
            out[p] = 1.0 - phi_sigma(top(), p) / eta[p];
        return out;
    }
};

namespace detail {

// Spectral x-derivative tables and row transforms shared by the strip solver.
struct XSpectralTable {
    TorusGrid grid;
    std::vector<double> k2, kabs;
    std::vector<std::array<double, 2>> kcomp;

    explicit XSpectralTable(const TorusGrid& g) : grid(g) {
        const std::size_t N = g.size();
        k2.resize(N);
        kabs.resize(N);
        kcomp.resize(N);
        const int n = g.n;
        if (g.dim == 1) {
            for (int j = 0; j < n; ++j) {
                const int k = g.wavenumber(j);
                k2[j] = double(k) * k;
                kabs[j] = std::abs(double(k));
                kcomp[j] = {double(k), 0.0};
            }
        } else {
            for (int j0 = 0; j0 < n; ++j0)
                for (int j1 = 0; j1 < n; ++j1) {
                    const int k0 = g.wavenumber(j0);
                    const int k1 = g.wavenumber(j1);
                    const std::size_t p = std::size_t(j0) * n + j1;
                    k2[p] = double(k0) * k0 + double(k1) * k1;
                    kabs[p] = std::sqrt(k2[p]);
                    kcomp[p] = {double(k0), double(k1)};
                }
        }
    }

    void forward(const double* src, std::complex<double>* work) const {
        const std::size_t N = grid.size();
        for (std::size_t p = 0; p < N; ++p) work[p] = src[p];
        detail::forward(grid.dim, grid.n, work);
    }
    void backward_real(std::complex<double>* work, double* dst) const {
        detail::backward(grid.dim, grid.n, work);
        for (std::size_t p = 0; p < grid.size(); ++p) dst[p] = work[p].real();
    }
};

} // namespace detail

// Iterative solver for the mapped Laplace problem
//   Delta_{x,y} phi = 0 below y = h(x),  phi|_{y=h} = psi,
//   d_y phi = |D_x| phi  on  y = -beta  (exact transparent bottom),
// discretized Fourier-in-x / Chebyshev-in-sigma and preconditioned by the
// flat-surface operator, which is block diagonal per wavevector.
class StripSolver {
public:
    StripSolver(const ScalarField& h, StripConfig cfg) : cfg_(cfg), table_(h.grid) {
        if (cfg_.m_vert < 16) throw GeometryError("StripSolver: m_vert must be >= 16");
        cheb_ = std::make_shared<ChebyshevGrid>(cfg_.m_vert);
        set_surface(h);
    }

    // Update the geometry; the wavevector-block preconditioner is rebuilt
    // only when the reference depth drifts.
    void set_surface(const ScalarField& h) {
        if (!h.all_finite()) throw InvalidField("StripSolver: non-finite surface");
        grid_ = h.grid;
        h_ = h;
        beta_ = cfg_.beta > 0.0 ? cfg_.beta : 1.0 + 2.0 * h.max_abs();
        if (beta_ + h.min() <= 1e-9 * (1.0 + beta_))
            throw GeometryError("StripSolver: bottom y=-beta does not lie below the surface");

        const std::size_t N = grid_.size();
        eta_.resize(N);
        for (std::size_t p = 0; p < N; ++p) eta_[p] = h[p] + beta_;
        hgrad_ = gradient(h);
        hlap_ = laplacian(h);
        g2_ = ScalarField(grid_);
        for (int a = 0; a < grid_.dim; ++a)
            for (std::size_t p = 0; p < N; ++p) g2_[p] += hgrad_[a][p] * hgrad_[a][p];

        double mean_h = 0.0;
        for (std::size_t p = 0; p < N; ++p) mean_h += h[p];
        mean_h /= double(N);
        const double etabar = mean_h + beta_;
        if (blocks_.empty() || std::abs(etabar - etabar_built_) > 1e-3 * etabar_built_)
            build_preconditioner(etabar);
        btm_.resize(N);
        if (warm_.rows() != cheb_->m || warm_.cols() != long(N)) warm_.resize(0, 0);
    }

    const TorusGrid& grid() const { return grid_; }
    double beta() const { return beta_; }
    const std::shared_ptr<const ChebyshevGrid>& cheb() const { return cheb_; }

    HarmonicExtension solve(const ScalarField& psi) {
        if (!(psi.grid == grid_)) throw DimensionMismatch("StripSolver: psi grid mismatch");
        if (!psi.all_finite()) throw InvalidField("StripSolver: non-finite boundary data");
        const int m = cheb_->m;
        const std::size_t N = grid_.size();

        StripMatrix b = StripMatrix::Zero(m, N);
        for (std::size_t p = 0; p < N; ++p) b(m - 1, p) = psi[p];

        StripMatrix pb(m, N);
        apply_Minv(b, pb);

        Eigen::VectorXd x(m * N);
        if (warm_.rows() == m && warm_.cols() == long(N))
            x = Eigen::Map<const Eigen::VectorXd>(warm_.data(), m * N);
        else
            x = Eigen::Map<const Eigen::VectorXd>(pb.data(), m * N);

        StripMatrix lw(m, N), mw(m, N);
        auto op = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
            Eigen::Map<const StripMatrix> V(v.data(), m, N);
            apply_L(V, lw);
            apply_Minv(lw, mw);
            out = Eigen::Map<const Eigen::VectorXd>(mw.data(), m * N);
        };
        Eigen::VectorXd pbv = Eigen::Map<const Eigen::VectorXd>(pb.data(), m * N);
        GmresReport rep = gmres(op, pbv, x, cfg_.solve_tol, cfg_.max_iter);

        HarmonicExtension ext;
        ext.grid = grid_;
        ext.beta = beta_;
        ext.surface = h_;
        ext.boundary_data = psi;
        ext.cheb = cheb_;
        ext.phi_mapped = Eigen::Map<const StripMatrix>(x.data(), m, N);
        ext.phi_sigma = cheb_->D * ext.phi_mapped;
        ext.iterations = rep.iterations;
        ext.eta = eta_;
        ext.hgrad = hgrad_;
        ext.hlap = hlap_;
        ext.g2 = g2_;

        // Unpreconditioned residual of the mapped system.
        apply_L(ext.phi_mapped, lw);
        const double bnorm = Eigen::Map<const Eigen::VectorXd>(b.data(), m * N).norm();
        ext.residual = bnorm == 0.0
                           ? (lw - b).norm()
                           : (lw - b).norm() / bnorm;
        if (ext.residual > 1e-9)
            throw IllConditioned("StripSolver: mapped solve residual " +
                                 std::to_string(ext.residual));
        warm_ = ext.phi_mapped;
        return ext;
    }

    void forget_warm_start() { warm_.resize(0, 0); }

private:
    void build_preconditioner(double etabar) {
        etabar_built_ = etabar;
        blocks_.clear();
        const int m = cheb_->m;
        const Eigen::MatrixXd& D = cheb_->D;
        const Eigen::MatrixXd& D2 = cheb_->D2;
        for (double kk : table_.k2) {
            const long key = std::lround(kk);
            if (blocks_.count(key)) continue;
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
            for (int i = 1; i < m - 1; ++i) {
                A.row(i) = D2.row(i) / (etabar * etabar);
                A(i, i) -= kk;
            }
            A.row(0) = D.row(0) / etabar;
            A(0, 0) -= std::sqrt(kk);
            A(m - 1, m - 1) = 1.0;
            blocks_.emplace(key, A.partialPivLu());
        }
    }

    // Full variable-coefficient mapped Laplacian plus boundary rows.
    void apply_L(const Eigen::Ref<const StripMatrix>& V, StripMatrix& out) const {
        const int m = cheb_->m;
        const std::size_t N = grid_.size();
        const int dim = grid_.dim;
        out.resize(m, N);

        vs_.noalias() = cheb_->D * V;
        vss_.noalias() = cheb_->D * vs_;

        lapv_.resize(m, N);
        gvs_.resize(dim);
        for (int a = 0; a < dim; ++a) gvs_[a].resize(m, N);
        cwork_.resize(N);
        cwork2_.resize(N);

        for (int j = 0; j < m; ++j) {
            table_.forward(V.data() + std::size_t(j) * N, cwork_.data());
            for (std::size_t p = 0; p < N; ++p) cwork_[p] *= -table_.k2[p];
            table_.backward_real(cwork_.data(), lapv_.data() + std::size_t(j) * N);

            table_.forward(vs_.data() + std::size_t(j) * N, cwork_.data());
            for (int a = 0; a < dim; ++a) {
                for (std::size_t p = 0; p < N; ++p)
                    cwork2_[p] = cwork_[p] * std::complex<double>(0.0, table_.kcomp[p][a]);
                table_.backward_real(cwork2_.data(), gvs_[a].data() + std::size_t(j) * N);
            }
        }

        for (int j = 1; j < m - 1; ++j) {
            const double s = cheb_->nodes[j];
            for (std::size_t p = 0; p < N; ++p) {
                const double e = eta_[p];
                double conv = 0.0;
                for (int a = 0; a < dim; ++a) conv += hgrad_[a][p] * gvs_[a](j, p);
                out(j, p) = lapv_(j, p) - 2.0 * (s / e) * conv +
                            (1.0 + s * s * g2_[p]) / (e * e) * vss_(j, p) +
                            (s / (e * e)) * (2.0 * g2_[p] - e * hlap_[p]) * vs_(j, p);
            }
        }
        // Transparent bottom: u_sigma/eta - |D_x| u at sigma = 0.
        table_.forward(V.data(), cwork_.data());
        for (std::size_t p = 0; p < N; ++p) cwork_[p] *= table_.kabs[p];
        table_.backward_real(cwork_.data(), btm_.data());
        for (std::size_t p = 0; p < N; ++p) out(0, p) = vs_(0, p) / eta_[p] - btm_[p];
        // Dirichlet top.
        for (std::size_t p = 0; p < N; ++p) out(m - 1, p) = V(m - 1, p);
    }

    // Flat-surface block solve, diagonal per wavevector.
    void apply_Minv(const Eigen::Ref<const StripMatrix>& R, StripMatrix& out) const {
        const int m = cheb_->m;
        const std::size_t N = grid_.size();
        out.resize(m, N);
        spec_.resize(m, N);
        for (int j = 0; j < m; ++j)
            table_.forward(R.data() + std::size_t(j) * N, spec_.data() + std::size_t(j) * N);

        Eigen::MatrixXd rhs(m, 2), sol(m, 2);
        for (std::size_t p = 0; p < N; ++p) {
            const auto& lu = blocks_.at(std::lround(table_.k2[p]));
            for (int j = 0; j < m; ++j) {
                rhs(j, 0) = spec_(j, p).real();
                rhs(j, 1) = spec_(j, p).imag();
            }
            sol = lu.solve(rhs);
            for (int j = 0; j < m; ++j) spec_(j, p) = {sol(j, 0), sol(j, 1)};
        }
        for (int j = 0; j < m; ++j)
            table_.backward_real(spec_.data() + std::size_t(j) * N,
                                 out.data() + std::size_t(j) * N);
    }

    StripConfig cfg_;
    TorusGrid grid_;
    double beta_ = 0.0;
    ScalarField h_;
    std::shared_ptr<const ChebyshevGrid> cheb_;
    detail::XSpectralTable table_;
    Eigen::ArrayXd eta_;
    std::vector<ScalarField> hgrad_;
    ScalarField hlap_;
    ScalarField g2_;
    double etabar_built_ = 0.0;
    std::map<long, Eigen::PartialPivLU<Eigen::MatrixXd>> blocks_;
    StripMatrix warm_;

    mutable StripMatrix vs_, vss_, lapv_;
    mutable std::vector<StripMatrix> gvs_;
    mutable Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor> spec_;
    mutable std::vector<std::complex<double>> cwork_, cwork2_;
    mutable std::vector<double> btm_;
};

inline HarmonicExtension solve_harmonic(const ScalarField& h, const ScalarField& psi,
                                        const StripConfig& cfg = {}) {
    StripSolver solver(h, cfg);
    return solver.solve(psi);
}

inline ScalarField dtn(const ScalarField& h, const ScalarField& psi,
                       const StripConfig& cfg = {}) {
    return solve_harmonic(h, psi, cfg).surface_dtn();
}

// Small-amplitude Taylor expansion of G(h), the independent oracle for the
// strip solver: G0 = |D|, G1 = -|D|(h|D|psi) - div(h grad psi), G2 per the
// standard half-space recursion. Accuracy O(||h||^{order+1}).
inline ScalarField dtn_expansion(const ScalarField& h, const ScalarField& psi, int order) {
    if (order < 0 || order > 2) throw DomainError("dtn_expansion: order must be 0, 1 or 2");
    auto lam = [](const ScalarField& f, double s) { return fractional_laplacian(f, s); };

    ScalarField out = lam(psi, 1.0);
    if (order >= 1) {
        ScalarField hLp = dealias(h * out);
        ScalarField t1 = lam(hLp, 1.0);
        std::vector<ScalarField> hv;
        for (int a = 0; a < h.grid.dim; ++a) hv.push_back(dealias(h * derivative(psi, a, 1)));
        ScalarField t2 = divergence(hv);
        out = out - t1 - t2;
    }
    if (order >= 2) {
        ScalarField Lp = lam(psi, 1.0);
        ScalarField hLp = dealias(h * Lp);
        ScalarField h2 = dealias(h * h);
        ScalarField g2_1 = lam(dealias(h * lam(hLp, 1.0)), 1.0);
        ScalarField g2_2 = -0.5 * lam(dealias(h2 * lam(psi, 2.0)), 1.0);
        ScalarField g2_3 = -1.0 * dealias(h * lam(hLp, 2.0));
        ScalarField g2_4 = 0.5 * dealias(h2 * lam(psi, 3.0));
        ScalarField g2_5(h.grid), g2_6(h.grid);
        for (int a = 0; a < h.grid.dim; ++a) {
            ScalarField ha = derivative(h, a, 1);
            g2_5 = g2_5 + dealias(ha * derivative(hLp, a, 1));
            g2_6 = g2_6 - dealias(dealias(h * ha) * derivative(Lp, a, 1));
        }
        out = out + g2_1 + g2_2 + g2_3 + g2_4 + g2_5 + g2_6;
    }
    return dealias(out);
}

// Taylor coefficient a = (1 - G(h)h) / (1 + |grad h|^2).
inline ScalarField taylor_coefficient(const ScalarField& h, const StripConfig& cfg = {}) {
    ScalarField Gh = dtn(h, h, cfg);
    ScalarField g2 = grad_squared(h);
    ScalarField a(h.grid);
    for (std::size_t p = 0; p < h.size(); ++p) a[p] = (1.0 - Gh[p]) / (1.0 + g2[p]);
    return a;
}

// Pressure Q = phi - y with phi the harmonic extension of h itself, plus
// first and second derivatives on every collocation node.
struct PressureDiagnostics {
    HarmonicExtension ext;
    std::vector<StripMatrix> grad_q;              // dim components, then d/dy
    std::vector<std::vector<StripMatrix>> hess_q; // (dim+1)^2, symmetric
    ScalarField a;                                // Taylor coefficient on Sigma
    std::vector<ScalarField> normal;              // outward unit normal on Sigma
    double min_abs_grad_q = 0.0;
    double max_dy_q = 0.0; // most positive d_y Q over the strip

    int dim() const { return ext.grid.dim; }
};

inline PressureDiagnostics pressure_diagnostics_from(const HarmonicExtension& ext) {
    const TorusGrid grid = ext.grid;
    const int dim = grid.dim;
    const int m = ext.m();
    const std::size_t N = grid.size();
    const Eigen::MatrixXd& D = ext.cheb->D;
    detail::XSpectralTable table(grid);

    const StripMatrix& U = ext.phi_mapped;
    const StripMatrix& Us = ext.phi_sigma;
    StripMatrix Uss = D * Us;

    auto fft_rows = [&](const StripMatrix& src, int comp, StripMatrix& dst, int order) {
        dst.resize(m, N);
        std::vector<std::complex<double>> w(N);
        for (int j = 0; j < m; ++j) {
            table.forward(src.data() + std::size_t(j) * N, w.data());
            for (std::size_t p = 0; p < N; ++p) {
                std::complex<double> f(0.0, table.kcomp[p][comp]);
                w[p] *= (order == 1 ? f : f * f);
            }
            table.backward_real(w.data(), dst.data() + std::size_t(j) * N);
        }
    };

    std::vector<StripMatrix> Ux(dim), Usx(dim);
    std::vector<std::vector<StripMatrix>> Uxx(dim, std::vector<StripMatrix>(dim));
    for (int a = 0; a < dim; ++a) {
        fft_rows(U, a, Ux[a], 1);
        fft_rows(Us, a, Usx[a], 1);
        for (int b = a; b < dim; ++b) {
            if (a == b) {
                fft_rows(U, a, Uxx[a][a], 2);
            } else {
                fft_rows(Ux[a], b, Uxx[a][b], 1);
                Uxx[b][a] = Uxx[a][b];
            }
        }
    }

    std::vector<ScalarField> hh(dim * dim, ScalarField(grid));
    for (int a = 0; a < dim; ++a)
        for (int b = a; b < dim; ++b) {
            hh[a * dim + b] = derivative(ext.hgrad[a], b, 1);
            hh[b * dim + a] = hh[a * dim + b];
        }

    PressureDiagnostics diag;
    diag.ext = ext;
    diag.grad_q.assign(dim + 1, StripMatrix(m, N));
    diag.hess_q.assign(dim + 1, std::vector<StripMatrix>(dim + 1, StripMatrix(m, N)));

    for (int j = 0; j < m; ++j) {
        const double s = ext.cheb->nodes[j];
        for (std::size_t p = 0; p < N; ++p) {
            const double e = ext.eta[p];
            std::array<double, 2> A{};
            for (int a = 0; a < dim; ++a) A[a] = s * ext.hgrad[a][p] / e;

            for (int a = 0; a < dim; ++a) diag.grad_q[a](j, p) = Ux[a](j, p) - A[a] * Us(j, p);
            diag.grad_q[dim](j, p) = Us(j, p) / e - 1.0;

            for (int a = 0; a < dim; ++a) {
                for (int b = a; b < dim; ++b) {
                    double v = Uxx[a][b](j, p) - A[a] * Usx[b](j, p) - A[b] * Usx[a](j, p) +
                               A[a] * A[b] * Uss(j, p) -
                               s * (hh[a * dim + b][p] / e) * Us(j, p) +
                               2.0 * s * (ext.hgrad[a][p] * ext.hgrad[b][p] / (e * e)) * Us(j, p);
                    diag.hess_q[a][b](j, p) = v;
                    diag.hess_q[b][a](j, p) = v;
                }
                const double v = (Usx[a](j, p) - (ext.hgrad[a][p] / e) * Us(j, p) -
                                  A[a] * Uss(j, p)) / e;
                diag.hess_q[a][dim](j, p) = v;
                diag.hess_q[dim][a](j, p) = v;
            }
            diag.hess_q[dim][dim](j, p) = Uss(j, p) / (e * e);
        }
    }

    diag.a = ext.taylor_from_strip();

    diag.normal.assign(dim + 1, ScalarField(grid));
    for (std::size_t p = 0; p < N; ++p) {
        const double den = std::sqrt(1.0 + ext.g2[p]);
        for (int a = 0; a < dim; ++a) diag.normal[a][p] = -ext.hgrad[a][p] / den;
        diag.normal[dim][p] = 1.0 / den;
    }

    double ming = std::numeric_limits<double>::max();
    double maxdy = -std::numeric_limits<double>::max();
    for (int j = 0; j < m; ++j)
        for (std::size_t p = 0; p < N; ++p) {
            double q2 = 0.0;
            for (int c = 0; c <= dim; ++c) q2 += diag.grad_q[c](j, p) * diag.grad_q[c](j, p);
            ming = std::min(ming, std::sqrt(q2));
            maxdy = std::max(maxdy, diag.grad_q[dim](j, p));
        }
    diag.min_abs_grad_q = ming;
    diag.max_dy_q = maxdy;
    return diag;
}

inline PressureDiagnostics pressure_diagnostics(const ScalarField& h,
                                                const StripConfig& cfg = {}) {
    return pressure_diagnostics_from(solve_harmonic(h, h, cfg));
}

namespace detail {

// Integrand of the volume form of J(h):
// (|grad Q|^2 |hess Q|^2 - |grad Q . hess Q|^2) / |grad Q|^3.
inline double j_integrand(const double* g, const double* H, int d1) {
    double g2 = 0.0;
    for (int i = 0; i < d1; ++i) g2 += g[i] * g[i];
    double h2 = 0.0;
    for (int i = 0; i < d1 * d1; ++i) h2 += H[i] * H[i];
    double gh2 = 0.0;
    for (int i = 0; i < d1; ++i) {
        double s = 0.0;
        for (int j = 0; j < d1; ++j) s += g[j] * H[i * d1 + j];
        gh2 += s * s;
    }
    const double gn = std::sqrt(g2);
    return (g2 * h2 - gh2) / (gn * gn * gn);
}

} // namespace detail

// Volume form of J(h): quadrature over the mapped strip plus the exact
// half-space contribution below y = -beta, reconstructed in Fourier space
// from the bottom trace and integrated in the variable s = e^{y+beta}.
inline double j_volume(const ScalarField& h, const StripConfig& cfg = {}) {
    PressureDiagnostics diag = pressure_diagnostics(h, cfg);
    if (diag.min_abs_grad_q < 1e-8)
        throw DegeneratePressure("j_volume: |grad Q| below floor");

    const TorusGrid grid = h.grid;
    const int dim = grid.dim;
    const int d1 = dim + 1;
    const int m = diag.ext.m();
    const std::size_t N = grid.size();

    double strip = 0.0;
    {
        std::vector<double> g(d1), H(d1 * d1);
        for (int j = 0; j < m; ++j) {
            const double wj = diag.ext.cheb->weights[j];
            double xsum = 0.0;
            for (std::size_t p = 0; p < N; ++p) {
                for (int c = 0; c < d1; ++c) g[c] = diag.grad_q[c](j, p);
                for (int a = 0; a < d1; ++a)
                    for (int b = 0; b < d1; ++b) H[a * d1 + b] = diag.hess_q[a][b](j, p);
                xsum += detail::j_integrand(g.data(), H.data(), d1) * diag.ext.eta[p];
            }
            strip += wj * xsum;
        }
        strip *= grid.volume() / double(N);
    }

    // Tail below the artificial bottom. The trace there determines the
    // solution exactly: phi = sum c_k e^{|k|(y+beta)} e^{ikx}.
    double tail = 0.0;
    {
        ScalarField bottom(grid);
        for (std::size_t p = 0; p < N; ++p) bottom[p] = diag.ext.phi_mapped(0, p);
        SpectralField c = transform(bottom);
        detail::XSpectralTable table(grid);

        ChebyshevGrid squad(25); // nodes s in [0,1]; integrand vanishes at s=0
        std::vector<std::complex<double>> w(N);
        std::vector<ScalarField> gq(d1, ScalarField(grid));
        std::vector<ScalarField> hq(d1 * d1, ScalarField(grid));

        for (int q = 0; q < squad.m; ++q) {
            const double s = squad.nodes[q];
            if (s <= 0.0) continue;
            auto field_from = [&](auto weight_fn, ScalarField& out) {
                for (std::size_t p = 0; p < N; ++p) {
                    const double damp = table.kabs[p] == 0.0
                                            ? 1.0
                                            : std::pow(s, table.kabs[p]);
                    w[p] = c.coeffs[p] * weight_fn(p) * damp;
                }
                out = ScalarField(grid);
                table.backward_real(w.data(), out.values.data());
            };

            for (int a = 0; a < dim; ++a)
                field_from([&](std::size_t p) {
                    return std::complex<double>(0.0, table.kcomp[p][a]);
                }, gq[a]);
            field_from([&](std::size_t p) {
                return std::complex<double>(table.kabs[p], 0.0);
            }, gq[dim]);
            for (int a = 0; a < dim; ++a) {
                for (int b = a; b < dim; ++b) {
                    field_from([&](std::size_t p) {
                        return std::complex<double>(-table.kcomp[p][a] * table.kcomp[p][b], 0.0);
                    }, hq[a * d1 + b]);
                    hq[b * d1 + a] = hq[a * d1 + b];
                }
                field_from([&](std::size_t p) {
                    return std::complex<double>(0.0, table.kcomp[p][a] * table.kabs[p]);
                }, hq[a * d1 + dim]);
                hq[dim * d1 + a] = hq[a * d1 + dim];
            }
            field_from([&](std::size_t p) {
                return std::complex<double>(table.k2[p], 0.0);
            }, hq[dim * d1 + dim]);

            std::vector<double> g(d1), H(d1 * d1);
            double xsum = 0.0;
            for (std::size_t p = 0; p < N; ++p) {
                for (int a2 = 0; a2 < dim; ++a2) g[a2] = gq[a2][p];
                g[dim] = gq[dim][p] - 1.0; // Q = phi - y
                for (int i = 0; i < d1 * d1; ++i) H[i] = hq[i][p];
                xsum += detail::j_integrand(g.data(), H.data(), d1);
            }
            tail += squad.weights[q] * (xsum / double(N)) * grid.volume() / s;
        }
    }
    return strip + tail;
}

// B(h)psi = (G(h)psi + grad h . grad psi) / (1 + |grad h|^2).
inline ScalarField b_operator(const ScalarField& h, const ScalarField& psi,
                              const StripConfig& cfg = {}) {
    ScalarField G = dtn(h, psi, cfg);
    ScalarField g2 = grad_squared(h);
    ScalarField out(h.grid);
    for (std::size_t p = 0; p < h.size(); ++p) out[p] = G[p];
    for (int a = 0; a < h.grid.dim; ++a) {
        ScalarField ha = derivative(h, a, 1);
        ScalarField pa = derivative(psi, a, 1);
        for (std::size_t p = 0; p < h.size(); ++p) out[p] += ha[p] * pa[p];
    }
    for (std::size_t p = 0; p < h.size(); ++p) out[p] /= 1.0 + g2[p];
    return dealias(out);
}

// Adjoint: B(h)* psi = G(h)(psi/(1+|grad h|^2)) - div(psi grad h/(1+|grad h|^2)).
inline ScalarField b_star(const ScalarField& h, const ScalarField& psi,
                          const StripConfig& cfg = {}) {
    ScalarField g2 = grad_squared(h);
    ScalarField w(h.grid);
    for (std::size_t p = 0; p < h.size(); ++p) w[p] = psi[p] / (1.0 + g2[p]);
    w = dealias(w);
    ScalarField out = dtn(h, w, cfg);
    std::vector<ScalarField> flux;
    for (int a = 0; a < h.grid.dim; ++a) flux.push_back(dealias(w * derivative(h, a, 1)));
    ScalarField div = divergence(flux);
    for (std::size_t p = 0; p < h.size(); ++p) out[p] -= div[p];
    return dealias(out);
}

} // namespace fslab
