#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace fslab {

struct GmresReport {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
// Solves op(x) = b where op is the (preconditioned) operator; x holds the
// initial guess on entry and the solution on exit.
inline GmresReport gmres(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& op,
                         const Eigen::VectorXd& b, Eigen::VectorXd& x,
                         double tol, int max_iter, int restart = 60) {
    GmresReport rep;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        rep.converged = true;
        return rep;
    }

    const int n = int(b.size());
    restart = std::min(restart, n);
    Eigen::MatrixXd V(n, restart + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd cs(restart), sn(restart), g(restart + 1), w(n);

    int total_iters = 0;
    while (total_iters < max_iter) {
        op(x, w);
        Eigen::VectorXd r = b - w;
        double beta = r.norm();
        rep.rel_residual = beta / bnorm;
        if (rep.rel_residual < tol) {
            rep.converged = true;
            break;
        }
        V.col(0) = r / beta;
        g.setZero();
        g[0] = beta;

        int j = 0;
        for (; j < restart && total_iters < max_iter; ++j, ++total_iters) {
            op(V.col(j), w);
            for (int i = 0; i <= j; ++i) {
                H(i, j) = w.dot(V.col(i));
                w -= H(i, j) * V.col(i);
            }
            H(j + 1, j) = w.norm();
            if (H(j + 1, j) > 0.0) V.col(j + 1) = w / H(j + 1, j);

            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            const double denom = std::hypot(H(j, j), H(j + 1, j));
            cs[j] = denom == 0.0 ? 1.0 : H(j, j) / denom;
            sn[j] = denom == 0.0 ? 0.0 : H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            rep.rel_residual = std::abs(g[j + 1]) / bnorm;
            if (rep.rel_residual < tol) {
                ++j;
                break;
            }
        }

        // Back-substitute and update x with the Krylov correction.
        Eigen::VectorXd y = Eigen::VectorXd::Zero(j);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[i];
            for (int k2 = i + 1; k2 < j; ++k2) s -= H(i, k2) * y[k2];
            y[i] = s / H(i, i);
        }
        for (int i = 0; i < j; ++i) x += y[i] * V.col(i);

        if (rep.rel_residual < tol) {
            rep.converged = true;
            break;
        }
        if (j == 0) break;
    }
    rep.iterations = total_iters;
    return rep;
}

} // namespace fslab
